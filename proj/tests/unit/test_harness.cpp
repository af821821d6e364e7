#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "segrl/harness.hpp"
#include "segrl/ppm.hpp"

using namespace segrl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("segrl_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig tiny_run(const std::string& env = "MiniCatch-v0") {
  RunConfig c;
  c.env_id = env;
  c.hyper.num_steps = 32;
  c.hyper.num_minibatches = 4;
  c.hyper.total_timesteps = 96;
  return c;
}

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string drop_sps(const std::string& csv) {
  std::stringstream in(csv), out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    cells.erase(cells.begin() + 3);
    for (const auto& c : cells) out << c << ',';
    out << '\n';
  }
  return out.str();
}

}  // namespace

TEST_CASE("run config") {
  RunConfig c;
  c.hyper.total_timesteps = 256;
  CHECK(c.num_iterations() == 2);
  c.hyper.total_timesteps = 20000;
  CHECK(c.num_iterations() == 156);
  c.num_envs = 2;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.num_envs = 1;
  c.env_id = "Breakout-v5";
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("EMA") {
  CHECK(ema_smooth({4.0}) == std::vector<double>{4.0});
  const auto s = ema_smooth({1.0, 2.0, 3.0}, 0.5);
  CHECK(s == std::vector<double>{1.0, 1.5, 2.25});
  CHECK(ema_end_result({2.0, 2.0, 2.0, 2.0}) == doctest::Approx(2.0));
  CHECK(ema_end_result({0.0, 10.0}, 0.99) == doctest::Approx(0.1));
  CHECK_THROWS_AS(ema_smooth({}), std::invalid_argument);
  CHECK(ema_stationary_std(1.0, 0.99) == doctest::Approx(std::sqrt(0.01 / 1.99)));
  CHECK(ema_end_std(2.0, 1) == doctest::Approx(2.0));
  CHECK(ema_end_std(1.0, 2, 0.5) == doctest::Approx(std::sqrt(0.5)));
  CHECK(ema_end_std(1.0, 100000) == doctest::Approx(ema_stationary_std(1.0)));
}

TEST_CASE("metrics log") {
  MetricsLog log;
  log.row_at(10).episodic_return = 3.0;
  log.row_at(10).policy_loss = 0.5;
  log.row_at(12).sps = 7.0;
  CHECK(log.rows().size() == 2);
  CHECK_THROWS_AS(log.row_at(11), std::logic_error);
  const std::string csv = log.to_csv();
  CHECK(csv.substr(0, csv.find('\n')) ==
        "global_step,episodic_return,episodic_length,sps,policy_loss,value_loss,entropy,approx_kl,clipfrac");
  CHECK(csv.find("10,3,,0,0.5,,,,\n") != std::string::npos);
  const auto dir = scratch("metrics");
  log.write_csv((dir / "m.csv").string());
  const auto back = MetricsLog::read_csv((dir / "m.csv").string());
  CHECK(back.to_csv() == csv);
  CHECK(back.episodic_returns() == std::vector<double>{3.0});
}

TEST_CASE("improvement percentages") {
  CHECK(improvement_percent(390.3, 505.1) == 129.4);
  CHECK(improvement_percent(9.4, 5.0) == 53.2);
  CHECK(std::abs(improvement_percent(9.42, 4.97) - 53.2) <= 0.5);
  CHECK(improvement_percent(12.5, 12.5) == 100.0);
  CHECK(improvement_percent(-4.0, -2.0) == 50.0);
}

TEST_CASE("report ordering and formats") {
  std::vector<ScorePair> pairs{
      {"Road Runner", 1870.0, 247.5}, {"Pong", 0, 0, true}, {"Beam Rider", 390.3, 505.1},
      {"Empty", 0.0, 3.0},            {"Breakout", 9.4, 5.0}};
  const auto r = improvement_report(pairs);
  REQUIRE(r.rows.size() == 5);
  CHECK(r.rows[0].scores.game == "Beam Rider");
  CHECK(r.rows[1].scores.game == "Breakout");
  CHECK(r.rows[2].scores.game == "Road Runner");
  CHECK(r.rows[3].status == ReportStatus::kNotComparable);
  CHECK(r.rows[4].status == ReportStatus::kNoLearning);
  CHECK_FALSE(r.rows[4].percent.has_value());

  const std::string text = r.to_text();
  CHECK(text.find("Game score improvement") != std::string::npos);
  CHECK(text.find("129.4%") != std::string::npos);
  CHECK(text.find("no learning") != std::string::npos);
  std::stringstream lines(text);
  std::string first, rule, row;
  std::getline(lines, first);
  std::getline(lines, rule);
  std::getline(lines, row);
  CHECK(first.size() == rule.size());
  CHECK(row.size() == first.size());

  const std::string csv = r.to_csv();
  CHECK(csv.find("Beam Rider,129.4,505.10000000000002,390.30000000000001,ok") != std::string::npos);
}

TEST_CASE("PPM dumps") {
  const auto dir = scratch("ppm");
  Image img(1, 1);
  img.set(0, 0, 255, 0, 0);
  const auto path = (dir / "f.ppm").string();
  dump_frame(Image(4, 4, 9), path);
  dump_frame(img, path);
  const std::string bytes = read_file(path);
  CHECK(bytes == std::string("P6\n1 1\n255\n\xFF\x00\x00", 14));
  CHECK(read_ppm(path) == img);
}

TEST_CASE("parameters round trip") {
  Rng rng(1);
  NetArch a = NetArch::atari(3);
  a.hidden = 8;
  const auto net = make_policy_value_net(a, rng);
  const auto dir = scratch("params");
  save_params(net.params(), (dir / "p.bin").string());
  const auto back = load_params((dir / "p.bin").string());
  REQUIRE(back.size() == net.params().size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].name == net.params()[i].name);
    CHECK(back[i].value == net.params()[i].value);
  }
  std::ofstream(dir / "bad.bin") << "nope";
  CHECK_THROWS(load_params((dir / "bad.bin").string()));
}

TEST_CASE("effective config and A/B diff") {
  RunConfig a;
  RunConfig b = a;
  b.pipeline.segmenter = SegmenterKind::kBuiltin;
  b.pipeline.seg.alpha = 0.5;
  b.out_dir = "/elsewhere";
  const auto diff = config_diff(effective_config(a), effective_config(b));
  CHECK(diff == std::vector<std::string>{"pipeline.seg_alpha", "pipeline.segmenter"});
  b.hyper.clip_coef = 0.2;
  CHECK(config_diff(effective_config(a), effective_config(b)).size() == 3);
  const auto j = effective_config(a);
  CHECK(j["ppo"]["learning_rate"] == 2.5e-3);
  CHECK(j["pipeline"]["frameskip"] == 4);
  CHECK(j["seed"] == 47);
}

TEST_CASE("training runs are reproducible") {
  const auto dir = scratch("determinism");
  RunConfig c = tiny_run();
  c.hyper.total_timesteps = 320;
  c.metrics_out = (dir / "a.csv").string();
  const auto ra = run_training(c);
  c.metrics_out = (dir / "b.csv").string();
  const auto rb = run_training(c);
  CHECK(ra.iterations == 10);
  CHECK(ra.global_steps == 320);
  CHECK(ra.episode_returns.size() == 1);
  CHECK(ra.episode_returns == rb.episode_returns);
  const std::string a = read_file(dir / "a.csv"), b = read_file(dir / "b.csv");
  CHECK(drop_sps(a) == drop_sps(b));
  CHECK(a.rfind(kMetricsHeader, 0) == 0);
}

TEST_CASE("training outputs") {
  const auto dir = scratch("outputs");
  RunConfig c = tiny_run();
  c.out_dir = (dir / "run").string();
  c.frames_out = (dir / "frames").string();
  c.frames_every = 24;
  int updates = 0;
  TrainingHooks hooks;
  hooks.on_update = [&](int it, const RolloutBuffer& b, const PolicyValueNet<float>&, const UpdateStats& s) {
    CHECK(it == ++updates);
    CHECK(b.num_steps == 32);
    CHECK(s.minibatches.size() == 8);
  };
  const auto r = run_training(c, hooks);
  CHECK(updates == 3);
  CHECK(fs::exists(dir / "run" / "metrics.csv"));
  CHECK(fs::exists(dir / "run" / "params.bin"));
  CHECK(fs::exists(dir / "run" / "config.json"));
  CHECK(r.params_path == (dir / "run" / "params.bin").string());
  CHECK(fs::exists(dir / "frames" / "frame_00000024.ppm"));
  CHECK(fs::exists(dir / "frames" / "frame_00000096.ppm"));
  CHECK(std::distance(fs::directory_iterator(dir / "frames"), fs::directory_iterator{}) == 4);
  const auto img = read_ppm((dir / "frames" / "frame_00000048.ppm").string());
  CHECK(img.width == 160);
  CHECK(img.height == 210);

  hooks.max_iterations = 1;
  updates = 0;
  c.frames_out.clear();
  CHECK(run_training(c, hooks).iterations == 1);
}

TEST_CASE("metrics are flushed when training fails") {
  const auto dir = scratch("failure");
  RunConfig c = tiny_run();
  c.metrics_out = (dir / "m.csv").string();
  TrainingHooks hooks;
  hooks.on_update = [](int it, const RolloutBuffer&, const PolicyValueNet<float>&, const UpdateStats&) {
    if (it == 2) throw std::runtime_error("stop");
  };
  CHECK_THROWS(run_training(c, hooks));
  const auto log = MetricsLog::read_csv(c.metrics_out);
  CHECK(log.rows().back().global_step == 64);
}

TEST_CASE("random baseline") {
  const auto b = measure_random_baseline("MiniCatch-v0", 4, 47, 100);
  CHECK(b.returns.size() == 100);
  CHECK(b.mean == doctest::Approx(-8.0).epsilon(0.125));
  CHECK(b.stddev > 0.5);
  CHECK(measure_random_baseline("MiniCatch-v0", 4, 47, 100).returns == b.returns);
}

TEST_CASE("segmentation overhead stays within 10x") {
  const auto time_run = [](SegmenterKind kind) {
    RunConfig c = tiny_run();
    c.hyper.total_timesteps = 128;
    c.pipeline.segmenter = kind;
    return run_training(c).wall_seconds;
  };
  const double raw = time_run(SegmenterKind::kNone);
  const double seg = time_run(SegmenterKind::kBuiltin);
  CHECK(seg / raw < 10.0);
}

TEST_CASE("experiments tag object counts and write reports") {
  const auto dir = scratch("experiment");
  ExperimentOptions opts;
  opts.baseline_episodes = 10;
  RunConfig one = tiny_run("MiniCatch-v0");
  one.out_dir = (dir / "one").string();
  const auto a = run_experiment(one, opts);
  RunConfig eight = tiny_run("MiniCatch8-v0");
  const auto b = run_experiment(eight, opts);
  CHECK(a.pair.object_count == "low");
  CHECK(b.pair.object_count == "high");
  CHECK(config_diff(a.raw_config, a.segmented_config) == std::vector<std::string>{"pipeline.segmenter"});
  CHECK(a.raw_config["pipeline"]["segmenter"] == "none");
  CHECK(a.segmented_config["pipeline"]["segmenter"] == "builtin");
  CHECK(a.report.rows.size() == 1);
  CHECK(a.pair.raw_seconds.has_value());
  for (const char* f : {"report.csv", "report.txt", "configs.json", "raw/metrics.csv", "segmented/metrics.csv"}) {
    CHECK(fs::exists(dir / "one" / f));
  }
  const auto report = improvement_report({a.pair, b.pair});
  CHECK(report.to_csv().find(",high,") != std::string::npos);
}

TEST_CASE("identical runs report 100 percent") {
  ExperimentOptions opts;
  opts.baseline_episodes = 5;
  RunConfig c = tiny_run();
  c.hyper.total_timesteps = 320;
  c.pipeline.segmenter = SegmenterKind::kBuiltin;
  c.pipeline.seg.mode = RenderMode::kOverlay;
  c.pipeline.seg.alpha = 0.0;
  const auto r = run_experiment(c, opts);
  CHECK(r.raw.episode_returns == r.segmented.episode_returns);
  CHECK(r.pair.raw == r.pair.segmented);
  ScorePair learned = r.pair;
  learned.no_learning = false;
  CHECK(*improvement_report({learned}).rows[0].percent == 100.0);
}
