#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "segrl/metrics.hpp"
#include "segrl/nn.hpp"
#include "segrl/pipeline.hpp"
#include "segrl/ppo.hpp"
#include "segrl/report.hpp"

namespace segrl {

struct RunConfig {
  std::string env_id = "MiniCatch-v0";
  std::uint64_t seed = 47;
  int num_envs = 1;
  PpoHyper hyper;
  PipelineConfig pipeline;

  // Output locations; not part of the effective training configuration.
  std::string out_dir;
  std::string metrics_out;  // defaults to <out_dir>/metrics.csv
  std::string frames_out;   // PPM dumps of the agent's aggregated frames
  int frames_every = 1000;  // dump every Nth agent step
  bool verbose = false;

  void validate() const;
  int num_iterations() const;  // total_timesteps / num_steps
};

// Everything that influences training, as JSON: env, seed, PPO and pipeline
// settings. Output paths are excluded.
nlohmann::json effective_config(const RunConfig& config);

// Dotted keys whose values differ between two effective configs.
std::vector<std::string> config_diff(const nlohmann::json& a, const nlohmann::json& b);

// Keys allowed to differ between the raw and segmented runs of an experiment.
const std::vector<std::string>& segmentation_config_keys();

struct TrainingHooks {
  // Called after every PPO update with the 1-based iteration.
  std::function<void(int, const RolloutBuffer&, const PolicyValueNet<float>&, const UpdateStats&)> on_update;
  int max_iterations = -1;  // stop early when >= 0
};

struct TrainingResult {
  MetricsLog log;
  std::vector<double> episode_returns;
  long global_steps = 0;
  int iterations = 0;
  double wall_seconds = 0.0;
  double sps = 0.0;
  double segmentation_seconds = 0.0;
  std::string params_path;  // empty when no out_dir was given
};

// collect -> GAE -> update for num_iterations() cycles. Writes metrics CSV
// and final parameters when paths are configured. The metrics CSV is flushed
// even if training throws.
TrainingResult run_training(const RunConfig& config, const TrainingHooks& hooks = {});

void save_params(const ParamList<float>& params, const std::string& path);
ParamList<float> load_params(const std::string& path);

struct RandomBaseline {
  std::vector<double> returns;
  double mean = 0.0;
  double stddev = 0.0;
};

// Uniform-random policy through the frame-skipped environment.
RandomBaseline measure_random_baseline(const std::string& env_id, int frameskip, std::uint64_t seed, int episodes);

struct ExperimentOptions {
  SegmenterKind segmenter = SegmenterKind::kBuiltin;  // used when the base config says none
  int baseline_episodes = 100;
  double ema_factor = 0.99;
};

struct ExperimentResult {
  ScorePair pair;
  nlohmann::json raw_config;
  nlohmann::json segmented_config;
  TrainingResult raw;
  TrainingResult segmented;
  RandomBaseline baseline;
  double baseline_band = 0.0;  // std of the random policy's EMA end result over the run's episode count
  ImprovementReport report;
};

// Two trainings that differ only in the segmentation stage, their EMA end
// results and the report row. Writes raw/, segmented/, report.csv,
// report.txt and configs.json under out_dir when it is set.
ExperimentResult run_experiment(const RunConfig& base, const ExperimentOptions& options = {});

}  // namespace segrl
