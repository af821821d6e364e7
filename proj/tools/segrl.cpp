#include <CLI11.hpp>

#include <cctype>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "segrl/harness.hpp"
#include "segrl/ppm.hpp"

namespace {

using namespace segrl;

struct SegFlags {
  std::string segmenter = "none";
  std::string mode = "replace";
  double alpha = 1.0;
  int bits = 3;
  int min_area = 4;
  std::string endpoint;
  int timeout_ms = 10000;

  PipelineConfig apply(PipelineConfig p) const {
    p.segmenter = parse_segmenter_kind(segmenter);
    p.seg.mode = parse_render_mode(mode);
    p.seg.alpha = alpha;
    p.seg.bits = bits;
    p.seg.min_area = min_area;
    p.seg_endpoint = resolve_seg_endpoint(endpoint);
    p.seg_timeout_ms = timeout_ms;
    return p;
  }
};

void add_seg_flags(CLI::App* app, SegFlags& f) {
  app->add_option("--segmenter", f.segmenter, "none | builtin | remote")
      ->check(CLI::IsMember({"none", "builtin", "remote"}));
  app->add_option("--seg-mode", f.mode, "replace | overlay")->check(CLI::IsMember({"replace", "overlay"}));
  app->add_option("--seg-alpha", f.alpha, "overlay weight of the segment colors")->check(CLI::Range(0.0, 1.0));
  app->add_option("--seg-bits", f.bits, "quantization bits per channel")->check(CLI::Range(1, 8));
  app->add_option("--seg-min-area", f.min_area, "segments smaller than this become background")
      ->check(CLI::PositiveNumber);
  app->add_option("--seg-endpoint", f.endpoint, "host:port of a segmentation service (SEG_ENDPOINT overrides)");
  app->add_option("--seg-timeout-ms", f.timeout_ms, "per-request timeout")->check(CLI::PositiveNumber);
}

struct RunFlags {
  RunConfig config;
  SegFlags seg;
  int frameskip = 4;
};

void add_run_flags(CLI::App* app, RunFlags& f) {
  RunConfig& c = f.config;
  PpoHyper& h = c.hyper;
  app->add_option("--env-id", c.env_id, "MiniCatch-v0 | MiniCatch8-v0 | MiniBricks-v0");
  app->add_option("--seed", c.seed);
  app->add_option("--clip-coef", h.clip_coef);
  app->add_option("--learning-rate", h.learning_rate);
  app->add_option("--num-envs", c.num_envs, "only 1 is supported");
  app->add_option("--num-minibatches", h.num_minibatches);
  app->add_option("--num-steps", h.num_steps);
  app->add_option("--update-epochs", h.update_epochs);
  app->add_option("--total-timesteps", h.total_timesteps);
  app->add_option("--gamma", h.gamma);
  app->add_option("--gae-lambda", h.gae_lambda);
  app->add_option("--ent-coef", h.ent_coef);
  app->add_option("--vf-coef", h.vf_coef);
  app->add_option("--max-grad-norm", h.max_grad_norm);
  app->add_option("--anneal-lr", h.anneal_lr);
  app->add_option("--norm-adv", h.norm_adv);
  app->add_option("--clip-vloss", h.clip_vloss);
  app->add_option("--frameskip", f.frameskip)->check(CLI::PositiveNumber);
  add_seg_flags(app, f.seg);
  app->add_option("--metrics-out", c.metrics_out, "metrics CSV path");
  app->add_option("--frames-out", c.frames_out, "directory for PPM dumps of the agent's frames");
  app->add_option("--frames-every", c.frames_every, "dump every Nth agent step")->check(CLI::PositiveNumber);
  app->add_option("--out-dir", c.out_dir, "parameters, metrics and reports");
  app->add_flag("--verbose", c.verbose);
}

RunConfig finish(const RunFlags& f) {
  RunConfig c = f.config;
  c.pipeline = f.seg.apply(c.pipeline);
  c.pipeline.frameskip = f.frameskip;
  return c;
}

// Accept the single-dash long form ("-seed=47") as well as "--seed=47".
std::vector<std::string> normalize_args(int argc, char** argv) {
  std::vector<std::string> out;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a.size() > 2 && a[0] == '-' && a[1] != '-' && std::isalpha(static_cast<unsigned char>(a[1])) &&
        std::isalpha(static_cast<unsigned char>(a[2]))) {
      a = "-" + a;
    }
    out.push_back(std::move(a));
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<ScorePair> read_pairs(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path);
  std::vector<ScorePair> pairs;
  std::string line;
  bool first = true;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first && !cells.empty() && cells[0] == "game") {
      first = false;
      continue;
    }
    first = false;
    if (cells.size() < 3) throw std::runtime_error("expected game,raw,segmented[,no_learning] in: " + line);
    ScorePair p;
    p.game = cells[0];
    p.raw = std::stod(cells[1]);
    p.segmented = std::stod(cells[2]);
    p.no_learning = cells.size() > 3 && (cells[3] == "1" || cells[3] == "true");
    pairs.push_back(p);
  }
  return pairs;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pixel-observation PPO with an optional segmentation stage"};
  app.require_subcommand(1);

  RunFlags train_flags;
  auto* train = app.add_subcommand("train", "train one PPO agent");
  add_run_flags(train, train_flags);

  RunFlags exp_flags;
  int baseline_episodes = 100;
  auto* experiment = app.add_subcommand("experiment", "paired raw vs segmented trainings and the improvement report");
  add_run_flags(experiment, exp_flags);
  experiment->add_option("--baseline-episodes", baseline_episodes, "random-policy episodes for the no-learning band");

  std::string rb_env = "MiniCatch-v0";
  std::uint64_t rb_seed = 47;
  int rb_episodes = 100;
  int rb_frameskip = 4;
  auto* random_baseline = app.add_subcommand("random-baseline", "score of the uniform random policy");
  random_baseline->add_option("--env-id", rb_env);
  random_baseline->add_option("--seed", rb_seed);
  random_baseline->add_option("--episodes", rb_episodes)->check(CLI::PositiveNumber);
  random_baseline->add_option("--frameskip", rb_frameskip)->check(CLI::PositiveNumber);

  std::string report_in;
  std::string report_csv;
  auto* report = app.add_subcommand("report", "improvement report from game,raw,segmented rows");
  report->add_option("input", report_in, "CSV with game,raw,segmented[,no_learning]")->required();
  report->add_option("--csv-out", report_csv);

  std::string seg_env = "MiniCatch-v0";
  std::uint64_t seg_seed = 47;
  int seg_steps = 40;
  std::string seg_out = "frame";
  int bench_frames = 0;
  SegFlags seg_flags;
  seg_flags.segmenter = "builtin";
  auto* segment = app.add_subcommand("segment", "dump a raw and a segmented frame as PPM");
  segment->add_option("--env-id", seg_env);
  segment->add_option("--seed", seg_seed);
  segment->add_option("--steps", seg_steps, "random agent steps before the dump");
  segment->add_option("--out", seg_out, "output prefix; writes <out>_raw.ppm and <out>_seg.ppm");
  segment->add_option("--bench", bench_frames, "also time this many segmentations");
  add_seg_flags(segment, seg_flags);

  auto args = normalize_args(argc, argv);
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*train) {
      const RunConfig config = finish(train_flags);
      const TrainingResult r = run_training(config);
      std::cout << "updates=" << r.iterations << " global_steps=" << r.global_steps << " episodes="
                << r.episode_returns.size() << " sps=" << format_number(r.sps)
                << " wall_seconds=" << format_number(r.wall_seconds) << '\n';
      if (!r.episode_returns.empty()) {
        std::cout << "ema_end_result=" << format_number(ema_end_result(r.episode_returns)) << '\n';
      }
    } else if (*experiment) {
      const RunConfig config = finish(exp_flags);
      ExperimentOptions options;
      options.baseline_episodes = baseline_episodes;
      const ExperimentResult r = run_experiment(config, options);
      std::cout << r.report.to_text();
      std::cout << "raw: " << r.raw.wall_seconds << " s (" << format_number(r.raw.sps) << " sps), segmented: "
                << r.segmented.wall_seconds << " s (" << format_number(r.segmented.sps) << " sps), slowdown x"
                << format_number(r.raw.sps / r.segmented.sps) << '\n';
      std::cout << "random baseline: mean " << format_number(r.baseline.mean) << ", std "
                << format_number(r.baseline.stddev) << '\n';
    } else if (*random_baseline) {
      const RandomBaseline b = measure_random_baseline(rb_env, rb_frameskip, rb_seed, rb_episodes);
      std::cout << "episodes=" << b.returns.size() << " mean=" << format_number(b.mean)
                << " std=" << format_number(b.stddev) << " ema_std=" << format_number(ema_stationary_std(b.stddev))
                << '\n';
    } else if (*report) {
      const ImprovementReport r = improvement_report(read_pairs(report_in));
      std::cout << r.to_text();
      if (!report_csv.empty()) {
        std::ofstream f(report_csv, std::ios::trunc);
        f << r.to_csv();
      }
    } else if (*segment) {
      PipelineConfig p = seg_flags.apply(PipelineConfig{});
      if (p.segmenter == SegmenterKind::kNone) p.segmenter = SegmenterKind::kBuiltin;
      auto pipeline = build_pipeline(make_env(seg_env), p);
      pipeline->reset(seg_seed);
      Rng rng(seg_seed);
      std::uniform_int_distribution<int> pick(0, pipeline->action_count() - 1);
      for (int i = 0; i < seg_steps; ++i) {
        if (pipeline->step(pick(rng)).done()) pipeline->reset();
      }
      dump_frame(pipeline->raw_frame(), seg_out + "_raw.ppm");
      dump_frame(pipeline->agent_frame(), seg_out + "_seg.ppm");
      std::cout << "wrote " << seg_out << "_raw.ppm and " << seg_out << "_seg.ppm\n";
      if (bench_frames > 0) {
        const Frame frame = pipeline->raw_frame();
        const auto start = std::chrono::steady_clock::now();
        for (int i = 0; i < bench_frames; ++i) (void)segment_frame(frame, p.seg);
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::cout << "segment_frame: " << format_number(bench_frames / s) << " frames/sec\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
