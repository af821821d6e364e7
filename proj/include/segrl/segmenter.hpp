#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "segrl/env.hpp"

namespace segrl {

// Per-pixel segment ids, row-major. 0 is background (suppressed); nonzero
// labels are dense in [1, segment_count].
struct SegmentLabelMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint32_t> labels;
  std::uint32_t segment_count = 0;

  std::uint32_t at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  // Throws std::invalid_argument naming the violated invariant.
  void validate_dense() const;
  std::vector<std::size_t> areas() const;  // index = label, entry 0 = background

  friend bool operator==(const SegmentLabelMap&, const SegmentLabelMap&) = default;
};

enum class RenderMode { kReplace, kOverlay };

struct SegmenterConfig {
  int bits = 3;
  int min_area = 4;
  RenderMode mode = RenderMode::kReplace;
  double alpha = 1.0;  // overlay weight of the palette color

  void validate() const;
};

// Maps every channel to the midpoint of its 2^bits uniform bucket.
Image quantize(const Image& frame, int bits);

// 4-connected components of identical color; labels in first-encounter
// row-major order starting at 1. Union-find with path compression and
// union by size.
SegmentLabelMap label_components(const Image& quantized);

// Segments with fewer than min_area pixels become background; the surviving
// labels are renumbered densely, preserving their order.
SegmentLabelMap suppress_small(const SegmentLabelMap& map, int min_area);

using PaletteColor = std::array<std::uint8_t, 3>;
const std::array<PaletteColor, 64>& palette();
// Multiplicative (Fibonacci) hash of the label, top 6 bits.
std::size_t palette_index(std::uint32_t label);

// Background pixels keep the original color. Replace mode writes the palette
// color of the label; overlay writes round(alpha*palette + (1-alpha)*orig).
Image render(const SegmentLabelMap& map, const Image& original, RenderMode mode, double alpha);

// quantize -> label -> suppress.
SegmentLabelMap segment_labels(const Image& frame, const SegmenterConfig& config);
// segment_labels followed by render.
Image segment_frame(const Image& frame, const SegmenterConfig& config);

}  // namespace segrl
