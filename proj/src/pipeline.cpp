#include "segrl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

namespace segrl {
namespace {

// Source extent in units of 1/84 pixel: output cell i covers
// [i*src, (i+1)*src), source pixel r covers [r*84, (r+1)*84).
struct AxisWeights {
  std::vector<int> first;                // first source index per output cell
  std::vector<std::vector<int>> weight;  // overlap lengths
};

AxisWeights axis_weights(int src, int dst) {
  AxisWeights w;
  for (int i = 0; i < dst; ++i) {
    const long lo = static_cast<long>(i) * src, hi = static_cast<long>(i + 1) * src;
    const int r0 = static_cast<int>(lo / dst);
    const int r1 = static_cast<int>((hi - 1) / dst);
    w.first.push_back(r0);
    std::vector<int> ws;
    for (int r = r0; r <= r1; ++r) {
      const long a = std::max(lo, static_cast<long>(r) * dst);
      const long b = std::min(hi, static_cast<long>(r + 1) * dst);
      ws.push_back(static_cast<int>(b - a));
    }
    w.weight.push_back(std::move(ws));
  }
  return w;
}

const AxisWeights& rows_210() {
  static const AxisWeights w = axis_weights(kFrameHeight, kObsSize);
  return w;
}

const AxisWeights& cols_160() {
  static const AxisWeights w = axis_weights(kFrameWidth, kObsSize);
  return w;
}

}  // namespace

std::string to_string(SegmenterKind kind) {
  switch (kind) {
    case SegmenterKind::kNone: return "none";
    case SegmenterKind::kBuiltin: return "builtin";
    case SegmenterKind::kRemote: return "remote";
  }
  return "?";
}

SegmenterKind parse_segmenter_kind(const std::string& s) {
  if (s == "none") return SegmenterKind::kNone;
  if (s == "builtin") return SegmenterKind::kBuiltin;
  if (s == "remote") return SegmenterKind::kRemote;
  throw std::invalid_argument("segmenter must be none, builtin or remote, got '" + s + "'");
}

std::string to_string(RenderMode mode) { return mode == RenderMode::kReplace ? "replace" : "overlay"; }

RenderMode parse_render_mode(const std::string& s) {
  if (s == "replace") return RenderMode::kReplace;
  if (s == "overlay") return RenderMode::kOverlay;
  throw std::invalid_argument("segmentation mode must be replace or overlay, got '" + s + "'");
}

void PipelineConfig::validate() const {
  if (frameskip < 1) throw std::invalid_argument("frameskip must be >= 1");
  if (stack_depth < 1) throw std::invalid_argument("stack depth must be >= 1");
  seg.validate();
  if (segmenter == SegmenterKind::kRemote) {
    SegClientConfig{seg_endpoint, seg_timeout_ms}.validate();
  }
}

StepResult frame_skip_step(Env& env, int action, int k) {
  if (k < 1) throw std::invalid_argument("frame_skip_step: k must be >= 1");
  StepResult out;
  Frame previous;
  for (int i = 0; i < k; ++i) {
    StepResult r = env.step(action);
    out.reward += r.reward;
    out.terminated = out.terminated || r.terminated;
    out.truncated = out.truncated || r.truncated;
    previous = std::move(out.frame);
    out.frame = std::move(r.frame);
    if (r.terminated || r.truncated) break;
  }
  if (previous.rgb.size() == out.frame.rgb.size()) {
    for (std::size_t i = 0; i < out.frame.rgb.size(); ++i) {
      out.frame.rgb[i] = std::max(out.frame.rgb[i], previous.rgb[i]);
    }
  }
  return out;
}

GrayImage grayscale(const Image& frame) {
  if (frame.rgb.size() != frame.pixel_count() * 3) throw std::invalid_argument("grayscale: malformed frame");
  GrayImage g{frame.width, frame.height, std::vector<std::uint8_t>(frame.pixel_count())};
  for (std::size_t i = 0; i < g.pixels.size(); ++i) {
    const std::uint32_t r = frame.rgb[3 * i], gr = frame.rgb[3 * i + 1], b = frame.rgb[3 * i + 2];
    const std::uint32_t y = (299 * r + 587 * gr + 114 * b + 500) / 1000;
    g.pixels[i] = static_cast<std::uint8_t>(std::min<std::uint32_t>(y, 255));
  }
  return g;
}

GrayImage downscale(const GrayImage& gray) {
  if (gray.width != kFrameWidth || gray.height != kFrameHeight || gray.pixels.size() != gray.width * std::size_t(gray.height)) {
    throw std::invalid_argument("downscale expects a 210x160 gray frame, got " + std::to_string(gray.height) + "x" +
                                std::to_string(gray.width));
  }
  const auto& rw = rows_210();
  const auto& cw = cols_160();
  constexpr std::uint64_t kTotal = static_cast<std::uint64_t>(kFrameHeight) * kFrameWidth;
  GrayImage out{kObsSize, kObsSize, std::vector<std::uint8_t>(kObsSize * kObsSize)};
  for (int i = 0; i < kObsSize; ++i) {
    for (int j = 0; j < kObsSize; ++j) {
      std::uint64_t acc = 0;
      for (std::size_t a = 0; a < rw.weight[i].size(); ++a) {
        const std::uint8_t* row = gray.pixels.data() + static_cast<std::size_t>(rw.first[i] + a) * kFrameWidth;
        std::uint64_t row_acc = 0;
        for (std::size_t b = 0; b < cw.weight[j].size(); ++b) {
          row_acc += static_cast<std::uint64_t>(cw.weight[j][b]) * row[cw.first[j] + b];
        }
        acc += row_acc * static_cast<std::uint64_t>(rw.weight[i][a]);
      }
      out.pixels[static_cast<std::size_t>(i) * kObsSize + j] = static_cast<std::uint8_t>((2 * acc + kTotal) / (2 * kTotal));
    }
  }
  return out;
}

double clip_reward(double r) { return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0); }

FrameStack::FrameStack(int depth) : depth_(depth) {
  if (depth < 1) throw std::invalid_argument("frame stack depth must be >= 1");
}

Tensor FrameStack::reset(const GrayImage& frame) {
  frames_.assign(static_cast<std::size_t>(depth_), frame);
  return tensor();
}

Tensor FrameStack::push(const GrayImage& frame) {
  if (frames_.empty()) return reset(frame);
  frames_.push_back(frame);
  while (static_cast<int>(frames_.size()) > depth_) frames_.pop_front();
  return tensor();
}

Tensor FrameStack::tensor() const {
  if (frames_.empty()) throw std::logic_error("frame stack is empty; call reset first");
  const int h = frames_.front().height, w = frames_.front().width;
  Tensor t({depth_, h, w});
  std::size_t k = 0;
  for (const auto& f : frames_) {
    for (std::uint8_t p : f.pixels) t[k++] = static_cast<float>(p) / 255.0f;
  }
  return t;
}

ObservationPipeline::ObservationPipeline(std::unique_ptr<Env> env, PipelineConfig config)
    : env_(std::move(env)), config_(std::move(config)), stack_(config_.stack_depth) {
  if (!env_) throw std::invalid_argument("pipeline needs an environment");
  config_.validate();
  if (config_.segmenter == SegmenterKind::kRemote) {
    client_.emplace(SegClientConfig{config_.seg_endpoint, config_.seg_timeout_ms});
  }
}

Frame ObservationPipeline::augment(const Frame& frame) {
  if (config_.segmenter == SegmenterKind::kNone) return frame;
  const auto start = std::chrono::steady_clock::now();
  SegmentLabelMap labels =
      config_.segmenter == SegmenterKind::kBuiltin ? segment_labels(frame, config_.seg) : client_->remote_segment(frame);
  Frame out = render(labels, frame, config_.seg.mode, config_.seg.alpha);
  seg_seconds_ += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ++seg_calls_;
  return out;
}

Tensor ObservationPipeline::process(const Frame& frame, bool reset_stack) {
  raw_frame_ = frame;
  agent_frame_ = augment(frame);
  const GrayImage small = downscale(grayscale(agent_frame_));
  obs_ = reset_stack ? stack_.reset(small) : stack_.push(small);
  has_obs_ = true;
  return obs_;
}

Tensor ObservationPipeline::reset(std::optional<std::uint64_t> seed) {
  Frame first = env_->reset(seed);
  running_ = EpisodeStats{};
  episode_over_ = false;
  return process(first, true);
}

PipelineStep ObservationPipeline::step(int action) {
  if (!has_obs_) throw EnvError("pipeline: step before reset");
  if (episode_over_) throw EnvError("pipeline: step after episode end; call reset");
  StepResult r = frame_skip_step(*env_, action, config_.frameskip);
  PipelineStep out;
  out.raw_reward = r.reward;
  out.reward = config_.clip_rewards ? clip_reward(r.reward) : r.reward;
  out.terminated = r.terminated;
  out.truncated = r.truncated;
  out.obs = process(r.frame, false);
  running_.episodic_return += r.reward;
  running_.length += 1;
  if (out.done()) {
    out.episode = running_;
    episode_over_ = true;
  }
  return out;
}

std::unique_ptr<ObservationPipeline> build_pipeline(std::unique_ptr<Env> env, const PipelineConfig& config) {
  return std::make_unique<ObservationPipeline>(std::move(env), config);
}

}  // namespace segrl
