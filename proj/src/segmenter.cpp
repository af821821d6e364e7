#include "segrl/segmenter.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace segrl {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), size_(n, 1) { std::iota(parent_.begin(), parent_.end(), 0u); }

  std::uint32_t find(std::uint32_t x) {
    std::uint32_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const std::uint32_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
  }

 private:
  std::vector<std::uint32_t> parent_;
  std::vector<std::uint32_t> size_;
};

bool same_color(const std::uint8_t* a, const std::uint8_t* b) { return a[0] == b[0] && a[1] == b[1] && a[2] == b[2]; }

void check_image(const Image& img) {
  if (img.width < 0 || img.height < 0 || img.rgb.size() != img.pixel_count() * 3) {
    throw std::invalid_argument("image buffer does not match " + std::to_string(img.width) + "x" +
                                std::to_string(img.height) + " RGB");
  }
}

constexpr std::array<PaletteColor, 64> kPalette{{
    {255, 0, 0}, {77, 129, 255}, {119, 204, 0}, {204, 61, 186},
    {0, 158, 132}, {158, 107, 47}, {64, 0, 255}, {84, 255, 77},
    {204, 0, 68}, {61, 151, 204}, {145, 158, 0}, {135, 47, 158},
    {0, 255, 127}, {255, 113, 77}, {0, 17, 204}, {115, 204, 61},
    {158, 0, 106}, {47, 154, 158}, {255, 191, 0}, {158, 77, 255},
    {0, 204, 33}, {204, 61, 79}, {0, 66, 158}, {126, 158, 47},
    {254, 0, 255}, {77, 255, 202}, {204, 84, 0}, {79, 61, 204},
    {27, 158, 0}, {158, 47, 99}, {0, 192, 255}, {255, 247, 77},
    {135, 0, 204}, {61, 204, 114}, {158, 12, 0}, {47, 71, 158},
    {129, 255, 0}, {255, 77, 219}, {0, 204, 186}, {204, 150, 61},
    {52, 0, 158}, {47, 158, 51}, {255, 0, 65}, {77, 174, 255},
    {171, 204, 0}, {185, 61, 204}, {0, 158, 91}, {158, 79, 47},
    {0, 2, 255}, {130, 255, 77}, {204, 0, 120}, {61, 187, 204},
    {158, 131, 0}, {107, 47, 158}, {0, 255, 62}, {255, 77, 85},
    {0, 69, 204}, {152, 204, 61}, {158, 0, 146}, {47, 158, 134},
    {255, 126, 0}, {112, 77, 255}, {19, 204, 0}, {204, 61, 116},
}};

}  // namespace

void SegmentLabelMap::validate_dense() const {
  if (width < 0 || height < 0 || labels.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("label map size does not match its dimensions");
  }
  std::vector<bool> seen(static_cast<std::size_t>(segment_count) + 1, false);
  for (std::uint32_t l : labels) {
    if (l > segment_count) {
      throw std::invalid_argument("label " + std::to_string(l) + " exceeds segment count " +
                                  std::to_string(segment_count));
    }
    seen[l] = true;
  }
  for (std::uint32_t l = 1; l <= segment_count; ++l) {
    if (!seen[l]) throw std::invalid_argument("labels not dense: label " + std::to_string(l) + " unused");
  }
}

std::vector<std::size_t> SegmentLabelMap::areas() const {
  std::vector<std::size_t> a(static_cast<std::size_t>(segment_count) + 1, 0);
  for (std::uint32_t l : labels) a.at(l) += 1;
  return a;
}

void SegmenterConfig::validate() const {
  if (bits < 1 || bits > 8) throw std::invalid_argument("segmenter bits must be in [1, 8]");
  if (min_area < 1) throw std::invalid_argument("segmenter min area must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("overlay alpha must be in [0, 1]");
}

Image quantize(const Image& frame, int bits) {
  if (bits < 1 || bits > 8) throw std::invalid_argument("quantize: bits must be in [1, 8]");
  check_image(frame);
  const int shift = 8 - bits;
  const int half = ((1 << shift) - 1) / 2;
  Image out = frame;
  for (auto& c : out.rgb) c = static_cast<std::uint8_t>(((c >> shift) << shift) + half);
  return out;
}

SegmentLabelMap label_components(const Image& quantized) {
  check_image(quantized);
  const int w = quantized.width, h = quantized.height;
  const std::size_t n = quantized.pixel_count();
  DisjointSets sets(n);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto i = static_cast<std::uint32_t>(y * w + x);
      const std::uint8_t* c = quantized.at(x, y);
      if (x > 0 && same_color(c, quantized.at(x - 1, y))) sets.unite(i, i - 1);
      if (y > 0 && same_color(c, quantized.at(x, y - 1))) sets.unite(i, i - static_cast<std::uint32_t>(w));
    }
  }
  SegmentLabelMap map{w, h, std::vector<std::uint32_t>(n, 0), 0};
  std::vector<std::uint32_t> root_label(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t root = sets.find(static_cast<std::uint32_t>(i));
    if (root_label[root] == 0) root_label[root] = ++map.segment_count;
    map.labels[i] = root_label[root];
  }
  return map;
}

SegmentLabelMap suppress_small(const SegmentLabelMap& map, int min_area) {
  if (min_area < 1) throw std::invalid_argument("suppress_small: min_area must be >= 1");
  const auto area = map.areas();
  std::vector<std::uint32_t> remap(area.size(), 0);
  SegmentLabelMap out{map.width, map.height, std::vector<std::uint32_t>(map.labels.size(), 0), 0};
  for (std::uint32_t l = 1; l < area.size(); ++l) {
    if (area[l] >= static_cast<std::size_t>(min_area)) remap[l] = ++out.segment_count;
  }
  for (std::size_t i = 0; i < map.labels.size(); ++i) out.labels[i] = remap[map.labels[i]];
  return out;
}

const std::array<PaletteColor, 64>& palette() { return kPalette; }

std::size_t palette_index(std::uint32_t label) { return static_cast<std::uint32_t>(label * 0x9E3779B1u) >> 26; }

Image render(const SegmentLabelMap& map, const Image& original, RenderMode mode, double alpha) {
  check_image(original);
  if (map.width != original.width || map.height != original.height) {
    throw std::invalid_argument("render: label map " + std::to_string(map.width) + "x" + std::to_string(map.height) +
                                " does not match frame " + std::to_string(original.width) + "x" +
                                std::to_string(original.height));
  }
  if (map.labels.size() != original.pixel_count()) throw std::invalid_argument("render: label map size mismatch");
  if (mode == RenderMode::kOverlay && !(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("render: overlay alpha must be in [0, 1]");
  }
  Image out = original;
  for (std::size_t i = 0; i < map.labels.size(); ++i) {
    const std::uint32_t l = map.labels[i];
    if (l == 0) continue;
    const PaletteColor& pc = kPalette[palette_index(l)];
    std::uint8_t* px = out.rgb.data() + i * 3;
    for (int c = 0; c < 3; ++c) {
      if (mode == RenderMode::kReplace) {
        px[c] = pc[c];
      } else {
        const double v = alpha * pc[c] + (1.0 - alpha) * px[c];
        px[c] = static_cast<std::uint8_t>(std::lround(v));
      }
    }
  }
  return out;
}

SegmentLabelMap segment_labels(const Image& frame, const SegmenterConfig& config) {
  config.validate();
  return suppress_small(label_components(quantize(frame, config.bits)), config.min_area);
}

Image segment_frame(const Image& frame, const SegmenterConfig& config) {
  return render(segment_labels(frame, config), frame, config.mode, config.alpha);
}

}  // namespace segrl
