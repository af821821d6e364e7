#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>

#include "segrl/env.hpp"
#include "segrl/seg_proto.hpp"
#include "segrl/segmenter.hpp"
#include "segrl/tensor.hpp"

namespace segrl {

inline constexpr int kObsSize = 84;

enum class SegmenterKind { kNone, kBuiltin, kRemote };

std::string to_string(SegmenterKind kind);
SegmenterKind parse_segmenter_kind(const std::string& s);
std::string to_string(RenderMode mode);
RenderMode parse_render_mode(const std::string& s);

struct PipelineConfig {
  int frameskip = 4;
  SegmenterKind segmenter = SegmenterKind::kNone;
  SegmenterConfig seg;           // quantization, suppression and rendering
  std::string seg_endpoint;      // host:port, remote only
  int seg_timeout_ms = 10000;
  int stack_depth = 4;
  bool clip_rewards = true;

  void validate() const;
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

// Repeats the action for k native frames (fewer if the episode ends), sums
// the rewards and returns the pixelwise max of the last two native frames.
StepResult frame_skip_step(Env& env, int action, int k);

// y = round(0.299 R + 0.587 G + 0.114 B), computed in integers.
GrayImage grayscale(const Image& frame);

// Area-weighted resampling of a 210x160 gray frame to 84x84 with exact
// integer weights and round-half-up.
GrayImage downscale(const GrayImage& gray);

// Sign of the reward: -1, 0 or +1.
double clip_reward(double r);

// FIFO of the last `depth` frames as a [depth, 84, 84] tensor of gray/255,
// newest last. reset() replicates the first frame.
class FrameStack {
 public:
  explicit FrameStack(int depth = 4);
  Tensor reset(const GrayImage& frame);
  Tensor push(const GrayImage& frame);
  Tensor tensor() const;
  int depth() const { return depth_; }

 private:
  int depth_;
  std::deque<GrayImage> frames_;
};

struct EpisodeStats {
  double episodic_return = 0.0;  // unclipped
  int length = 0;                // agent steps
};

struct PipelineStep {
  Tensor obs;
  double reward = 0.0;      // clipped when clipping is on
  double raw_reward = 0.0;
  bool terminated = false;
  bool truncated = false;
  std::optional<EpisodeStats> episode;  // set on the step that ends an episode

  bool done() const { return terminated || truncated; }
};

// The wrapped environment: frame skip, optional segmentation of the raw RGB
// aggregated frame, grayscale, downscale, stacking, reward clipping.
class ObservationPipeline {
 public:
  // Connects to the remote segmenter here, so an unreachable service fails
  // before training starts.
  ObservationPipeline(std::unique_ptr<Env> env, PipelineConfig config);

  Tensor reset(std::optional<std::uint64_t> seed = std::nullopt);
  PipelineStep step(int action);

  int action_count() const { return env_->action_count(); }
  const PipelineConfig& config() const { return config_; }
  Env& env() { return *env_; }

  bool has_observation() const { return has_obs_; }
  const Tensor& observation() const { return obs_; }
  // Last aggregated frame before and after segmentation.
  const Frame& raw_frame() const { return raw_frame_; }
  const Frame& agent_frame() const { return agent_frame_; }

  double segmentation_seconds() const { return seg_seconds_; }
  std::uint64_t segmentation_calls() const { return seg_calls_; }

 private:
  Tensor process(const Frame& frame, bool reset_stack);
  Frame augment(const Frame& frame);

  std::unique_ptr<Env> env_;
  PipelineConfig config_;
  std::optional<SegClient> client_;
  FrameStack stack_;
  Tensor obs_;
  bool has_obs_ = false;
  bool episode_over_ = false;
  Frame raw_frame_;
  Frame agent_frame_;
  EpisodeStats running_;
  double seg_seconds_ = 0.0;
  std::uint64_t seg_calls_ = 0;
};

std::unique_ptr<ObservationPipeline> build_pipeline(std::unique_ptr<Env> env, const PipelineConfig& config);

}  // namespace segrl
