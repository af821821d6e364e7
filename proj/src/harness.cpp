#include "segrl/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "segrl/ppm.hpp"

#if defined(__SSE__)
#include <xmmintrin.h>
#include <pmmintrin.h>
#endif

namespace segrl {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void flush_denormals() {
#if defined(__SSE__)
  _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
  _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
#endif
}

constexpr char kParamsMagic[8] = {'S', 'E', 'G', 'R', 'L', 'P', '1', '\n'};

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else {
    out[prefix] = j;
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

}  // namespace

void RunConfig::validate() const {
  if (num_envs != 1) throw std::invalid_argument("only --num-envs=1 is supported");
  hyper.validate();
  pipeline.validate();
  if (hyper.total_timesteps < hyper.num_steps) {
    throw std::invalid_argument("total-timesteps must cover at least one rollout of num-steps");
  }
  if (frames_every < 1) throw std::invalid_argument("frames-every must be >= 1");
  action_count(env_id);
}

int RunConfig::num_iterations() const { return static_cast<int>(hyper.total_timesteps / (hyper.num_steps * num_envs)); }

json effective_config(const RunConfig& c) {
  const PpoHyper& h = c.hyper;
  const PipelineConfig& p = c.pipeline;
  return json{
      {"env_id", c.env_id},
      {"seed", c.seed},
      {"num_envs", c.num_envs},
      {"ppo",
       {{"clip_coef", h.clip_coef},
        {"learning_rate", h.learning_rate},
        {"gamma", h.gamma},
        {"gae_lambda", h.gae_lambda},
        {"update_epochs", h.update_epochs},
        {"num_minibatches", h.num_minibatches},
        {"num_steps", h.num_steps},
        {"vf_coef", h.vf_coef},
        {"ent_coef", h.ent_coef},
        {"max_grad_norm", h.max_grad_norm},
        {"total_timesteps", h.total_timesteps},
        {"norm_adv", h.norm_adv},
        {"anneal_lr", h.anneal_lr},
        {"clip_vloss", h.clip_vloss}}},
      {"pipeline",
       {{"frameskip", p.frameskip},
        {"stack_depth", p.stack_depth},
        {"clip_rewards", p.clip_rewards},
        {"segmenter", to_string(p.segmenter)},
        {"seg_mode", to_string(p.seg.mode)},
        {"seg_alpha", p.seg.alpha},
        {"seg_bits", p.seg.bits},
        {"seg_min_area", p.seg.min_area},
        {"seg_endpoint", p.seg_endpoint},
        {"seg_timeout_ms", p.seg_timeout_ms}}},
  };
}

std::vector<std::string> config_diff(const json& a, const json& b) {
  std::map<std::string, json> fa, fb;
  flatten(a, "", fa);
  flatten(b, "", fb);
  std::vector<std::string> keys;
  for (const auto& [k, v] : fa) {
    auto it = fb.find(k);
    if (it == fb.end() || it->second != v) keys.push_back(k);
  }
  for (const auto& [k, v] : fb) {
    if (!fa.count(k)) keys.push_back(k);
  }
  return keys;
}

const std::vector<std::string>& segmentation_config_keys() {
  static const std::vector<std::string> kKeys{
      "pipeline.segmenter",    "pipeline.seg_mode",     "pipeline.seg_alpha",     "pipeline.seg_bits",
      "pipeline.seg_min_area", "pipeline.seg_endpoint", "pipeline.seg_timeout_ms"};
  return kKeys;
}

void save_params(const ParamList<float>& params, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write parameters to " + path);
  const auto put_u32 = [&](std::uint32_t v) { f.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  f.write(kParamsMagic, sizeof(kParamsMagic));
  put_u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_u32(static_cast<std::uint32_t>(p.name.size()));
    f.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u32(static_cast<std::uint32_t>(p.value.rank()));
    for (int d : p.value.shape()) put_u32(static_cast<std::uint32_t>(d));
    f.write(reinterpret_cast<const char*>(p.value.data()), static_cast<std::streamsize>(p.value.size() * sizeof(float)));
  }
  if (!f) throw std::runtime_error("failed writing parameters to " + path);
}

ParamList<float> load_params(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read parameters from " + path);
  char magic[sizeof(kParamsMagic)];
  f.read(magic, sizeof(magic));
  if (!f || !std::equal(magic, magic + sizeof(magic), kParamsMagic)) throw std::runtime_error(path + ": not a parameter file");
  const auto get_u32 = [&] {
    std::uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!f) throw std::runtime_error(path + ": truncated parameter file");
    return v;
  };
  ParamList<float> params;
  const std::uint32_t count = get_u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(get_u32(), '\0');
    f.read(name.data(), static_cast<std::streamsize>(name.size()));
    std::vector<int> shape(get_u32());
    for (int& d : shape) d = static_cast<int>(get_u32());
    std::vector<float> data(shape_size(shape));
    f.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!f) throw std::runtime_error(path + ": truncated parameter file");
    params.push_back({std::move(name), Tensor(std::move(shape), std::move(data))});
  }
  return params;
}

TrainingResult run_training(const RunConfig& config, const TrainingHooks& hooks) {
  config.validate();
  flush_denormals();
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  const auto elapsed = [&] { return std::max(std::chrono::duration<double>(Clock::now() - start).count(), 1e-9); };

  std::string metrics_path = config.metrics_out;
  if (!config.out_dir.empty()) {
    fs::create_directories(config.out_dir);
    if (metrics_path.empty()) metrics_path = (fs::path(config.out_dir) / "metrics.csv").string();
  }
  if (!config.frames_out.empty()) fs::create_directories(config.frames_out);

  TrainingResult result;
  const auto flush = [&] {
    if (!metrics_path.empty()) result.log.write_csv(metrics_path);
  };

  try {
    Rng rng(config.seed);
    auto pipeline = build_pipeline(make_env(config.env_id), config.pipeline);
    PolicyValueNet<float> net = make_policy_value_net(NetArch::atari(pipeline->action_count()), rng);
    AdamState<float> adam(net.params());
    pipeline->reset(config.seed);

    const PpoHyper& hyper = config.hyper;
    int iterations = config.num_iterations();
    if (hooks.max_iterations >= 0) iterations = std::min(iterations, hooks.max_iterations);
    const long frames_every = config.frames_every;
    long global_step = 0;

    for (int it = 1; it <= iterations; ++it) {
      const double frac = 1.0 - static_cast<double>(it - 1) / config.num_iterations();
      const double lr = hyper.anneal_lr ? frac * hyper.learning_rate : hyper.learning_rate;

      const long rollout_start = global_step;
      StepObserver dump;
      if (!config.frames_out.empty()) {
        dump = [&](const ObservationPipeline& env, int t) {
          const long step = rollout_start + t + 1;
          if (step % frames_every != 0) return;
          char name[64];
          std::snprintf(name, sizeof(name), "frame_%08ld.ppm", step);
          dump_frame(env.agent_frame(), (fs::path(config.frames_out) / name).string());
        };
      }
      RolloutBuffer buffer = collect_rollout(*pipeline, net, hyper.num_steps, rng, dump);
      global_step += hyper.num_steps;
      for (const auto& ep : buffer.episodes) {
        const long step = rollout_start + ep.step_index + 1;
        MetricsRow& row = result.log.row_at(step);
        row.episodic_return = ep.stats.episodic_return;
        row.episodic_length = ep.stats.length;
        row.sps = static_cast<double>(step) / elapsed();
        result.episode_returns.push_back(ep.stats.episodic_return);
        if (config.verbose) {
          std::cerr << "global_step=" << step << " episodic_return=" << ep.stats.episodic_return << '\n';
        }
      }

      compute_advantages(buffer, hyper.gamma, hyper.gae_lambda);
      const UpdateStats stats = ppo_update(net, adam, buffer, hyper, lr, rng);
      MetricsRow& row = result.log.row_at(global_step);
      row.sps = static_cast<double>(global_step) / elapsed();
      row.policy_loss = stats.policy_loss;
      row.value_loss = stats.value_loss;
      row.entropy = stats.entropy;
      row.approx_kl = stats.approx_kl;
      row.clipfrac = stats.clip_fraction;
      result.iterations = it;
      if (hooks.on_update) hooks.on_update(it, buffer, net, stats);
    }

    result.global_steps = global_step;
    result.wall_seconds = elapsed();
    result.sps = static_cast<double>(global_step) / result.wall_seconds;
    result.segmentation_seconds = pipeline->segmentation_seconds();
    if (!config.out_dir.empty()) {
      result.params_path = (fs::path(config.out_dir) / "params.bin").string();
      save_params(net.params(), result.params_path);
      write_text(fs::path(config.out_dir) / "config.json", effective_config(config).dump(2) + "\n");
    }
  } catch (...) {
    flush();
    throw;
  }
  flush();
  return result;
}

RandomBaseline measure_random_baseline(const std::string& env_id, int frameskip, std::uint64_t seed, int episodes) {
  if (episodes < 1) throw std::invalid_argument("random baseline needs at least one episode");
  auto env = make_env(env_id);
  Rng rng(seed);
  std::uniform_int_distribution<int> pick(0, env->action_count() - 1);
  RandomBaseline b;
  env->reset(seed);
  for (int e = 0; e < episodes; ++e) {
    if (e > 0) env->reset();
    double total = 0.0;
    while (true) {
      const StepResult r = frame_skip_step(*env, pick(rng), frameskip);
      total += r.reward;
      if (r.terminated || r.truncated) break;
    }
    b.returns.push_back(total);
  }
  b.mean = std::accumulate(b.returns.begin(), b.returns.end(), 0.0) / episodes;
  double sq = 0.0;
  for (double r : b.returns) sq += (r - b.mean) * (r - b.mean);
  b.stddev = episodes > 1 ? std::sqrt(sq / (episodes - 1)) : 0.0;
  return b;
}

ExperimentResult run_experiment(const RunConfig& base, const ExperimentOptions& options) {
  RunConfig raw = base;
  RunConfig seg = base;
  raw.pipeline.segmenter = SegmenterKind::kNone;
  if (seg.pipeline.segmenter == SegmenterKind::kNone) seg.pipeline.segmenter = options.segmenter;
  if (seg.pipeline.segmenter == SegmenterKind::kNone) {
    throw std::invalid_argument("run_experiment needs a segmenter for the augmented run");
  }
  raw.metrics_out.clear();
  seg.metrics_out.clear();
  if (!base.out_dir.empty()) {
    raw.out_dir = (fs::path(base.out_dir) / "raw").string();
    seg.out_dir = (fs::path(base.out_dir) / "segmented").string();
  }
  if (!base.frames_out.empty()) {
    raw.frames_out = (fs::path(base.frames_out) / "raw").string();
    seg.frames_out = (fs::path(base.frames_out) / "segmented").string();
  }

  ExperimentResult ex;
  ex.raw_config = effective_config(raw);
  ex.segmented_config = effective_config(seg);
  for (const auto& key : config_diff(ex.raw_config, ex.segmented_config)) {
    const auto& allowed = segmentation_config_keys();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::logic_error("paired runs differ outside the segmentation stage: " + key);
    }
  }

  ex.raw = run_training(raw);
  ex.segmented = run_training(seg);
  ex.baseline = measure_random_baseline(base.env_id, base.pipeline.frameskip, base.seed, options.baseline_episodes);

  ScorePair& pair = ex.pair;
  pair.game = base.env_id;
  pair.raw_seconds = ex.raw.wall_seconds;
  pair.segmented_seconds = ex.segmented.wall_seconds;
  try {
    pair.object_count = to_string(taxonomy_lookup(base.env_id).objects);
  } catch (const std::invalid_argument&) {
  }
  const bool raw_has = !ex.raw.episode_returns.empty();
  const bool seg_has = !ex.segmented.episode_returns.empty();
  if (raw_has) pair.raw = ema_end_result(ex.raw.episode_returns, options.ema_factor);
  if (seg_has) pair.segmented = ema_end_result(ex.segmented.episode_returns, options.ema_factor);
  const int episodes = static_cast<int>(std::min(ex.raw.episode_returns.size(), ex.segmented.episode_returns.size()));
  ex.baseline_band = ema_end_std(ex.baseline.stddev, std::max(episodes, 1), options.ema_factor);
  const auto near_random = [&](double end) { return std::abs(end - ex.baseline.mean) <= ex.baseline_band; };
  pair.no_learning = !raw_has || !seg_has || (near_random(pair.raw) && near_random(pair.segmented));

  ex.report = improvement_report({pair});
  if (!base.out_dir.empty()) {
    fs::create_directories(base.out_dir);
    write_text(fs::path(base.out_dir) / "report.csv", ex.report.to_csv());
    write_text(fs::path(base.out_dir) / "report.txt", ex.report.to_text());
    json configs{{"raw", ex.raw_config},
                 {"segmented", ex.segmented_config},
                 {"diff", config_diff(ex.raw_config, ex.segmented_config)},
                 {"raw_sps", ex.raw.sps},
                 {"segmented_sps", ex.segmented.sps},
                 {"random_baseline", {{"mean", ex.baseline.mean}, {"std", ex.baseline.stddev}, {"ema_band", ex.baseline_band}}}};
    write_text(fs::path(base.out_dir) / "configs.json", configs.dump(2) + "\n");
  }
  return ex;
}

}  // namespace segrl
