#include <doctest.h>

#include <set>
#include <stdexcept>

#include "segrl/env.hpp"

using namespace segrl;

namespace {

std::vector<int> spawn_columns(MiniCatch& env, int balls) {
  std::vector<int> cols{env.state().balls[0].first};
  while (static_cast<int>(cols.size()) < balls) {
    const int before = env.state().balls_resolved;
    env.step(MiniCatch::kNoop);
    if (env.state().balls_resolved != before) cols.push_back(env.state().balls[0].first);
  }
  return cols;
}

double play(Env& env, const std::function<int()>& policy) {
  double total = 0.0;
  for (;;) {
    const StepResult r = env.step(policy());
    total += r.reward;
    if (r.terminated || r.truncated) return total;
  }
}

}  // namespace

TEST_CASE("splitmix64 reference values") {
  SplitMix64 rng(0);
  CHECK(rng.next() == 0xE220A8397B1DCDAFull);
  CHECK(rng.next() == 0x6E789E6AA1B965F4ull);
  SplitMix64 b(1);
  for (int i = 0; i < 1000; ++i) CHECK(b.below(40) < 40u);
}

TEST_CASE("MiniCatch reset") {
  MiniCatch env;
  const Frame f = env.reset(47);
  CHECK(f.width == 160);
  CHECK(f.height == 210);
  CHECK(env.state().paddle_x == 72);
  REQUIRE(env.state().balls.size() == 1);
  CHECK(env.state().balls[0].second == 0);
  CHECK(f.at(72, 200)[0] == 255);
  CHECK(f.at(87, 203)[1] == 255);
  CHECK(f.at(88, 200)[0] == 0);
  CHECK(f.at(0, 100)[0] == 142);
  CHECK(env.id() == "MiniCatch-v0");
}

TEST_CASE("MiniCatch spawn columns for seed 47") {
  MiniCatch env;
  env.reset(47);
  CHECK(spawn_columns(env, 10) == std::vector<int>{76, 44, 44, 28, 48, 0, 12, 132, 92, 80});
}

TEST_CASE("MiniCatch is deterministic under a seed") {
  MiniCatch a, b;
  CHECK(a.reset(5) == b.reset(5));
  SplitMix64 actions(9);
  for (int t = 0; t < 500; ++t) {
    const int act = static_cast<int>(actions.below(3));
    const auto ra = a.step(act);
    const auto rb = b.step(act);
    CHECK(ra.frame == rb.frame);
    CHECK(ra.reward == rb.reward);
  }
  MiniCatch c;
  CHECK(c.reset(6) != MiniCatch().reset(5));
}

TEST_CASE("MiniCatch scripted outcomes") {
  SUBCASE("ball always over the paddle: +10") {
    MiniCatch env(1, [] { return 72; });
    env.reset(1);
    CHECK(play(env, [] { return MiniCatch::kNoop; }) == 10.0);
    CHECK(env.state().balls_resolved == 10);
  }
  SUBCASE("ball at column 0, paddle held right: -10") {
    MiniCatch env(1, [] { return 0; });
    env.reset(1);
    CHECK(play(env, [] { return MiniCatch::kRight; }) == -10.0);
    CHECK(env.state().paddle_x == MiniCatch::kPaddleMaxX);
  }
  SUBCASE("one ball takes 98 frames to resolve") {
    MiniCatch env(1, [] { return 72; });
    env.reset(1);
    int frames = 0;
    double r = 0.0;
    while (r == 0.0) {
      r = env.step(MiniCatch::kNoop).reward;
      ++frames;
    }
    CHECK(frames == 98);
  }
  SUBCASE("invalid column source") {
    MiniCatch env(1, [] { return 3; });
    CHECK_THROWS_AS(env.reset(), std::invalid_argument);
  }
}

TEST_CASE("MiniCatch paddle clamps to the frame") {
  MiniCatch env;
  env.reset(3);
  for (int i = 0; i < 50; ++i) env.step(MiniCatch::kLeft);
  CHECK(env.state().paddle_x == 0);
  for (int i = 0; i < 100; ++i) env.step(MiniCatch::kRight);
  CHECK(env.state().paddle_x == 144);
}

TEST_CASE("MiniCatch random policy") {
  MiniCatch env;
  env.reset(47);
  SplitMix64 pick(123);
  double sum = 0.0;
  std::set<double> seen;
  for (int ep = 0; ep < 100; ++ep) {
    const double r = play(env, [&] { return static_cast<int>(pick.below(3)); });
    CHECK(r >= -10.0);
    CHECK(r <= 10.0);
    CHECK(static_cast<int>(r) % 2 == 0);
    seen.insert(r);
    sum += r;
    env.reset();
  }
  CHECK(sum / 100 == doctest::Approx(-8.0).epsilon(0.125));
  CHECK(seen.size() > 1);
}

TEST_CASE("MiniCatch errors") {
  MiniCatch env;
  CHECK_THROWS_AS(env.step(0), EnvError);
  env.reset(1);
  CHECK_THROWS_AS(env.step(3), EnvError);
  CHECK_THROWS_AS(env.step(-1), EnvError);
  play(env, [] { return 0; });
  CHECK_THROWS_WITH_AS(env.step(0), doctest::Contains("after episode termination"), EnvError);
  CHECK_THROWS_AS(MiniCatch(9), std::invalid_argument);
}

TEST_CASE("MiniCatch8 staggers its balls") {
  MiniCatch env(8);
  env.reset(2);
  CHECK(MiniCatch::spawn_spacing(8) == 24);
  CHECK(MiniCatch::spawn_spacing(1) == 0);
  REQUIRE(env.state().balls.size() == 8);
  for (int i = 0; i < 8; ++i) CHECK(env.state().balls[i].second == -24 * i);
  CHECK(env.id() == "MiniCatch8-v0");
  int steps = 0;
  double total = 0.0;
  for (;;) {
    const auto r = env.step(MiniCatch::kNoop);
    total += r.reward;
    ++steps;
    if (r.terminated) break;
  }
  CHECK(env.state().balls_resolved == 10);
  CHECK(steps == 208);
  CHECK(total >= -10.0);
}

TEST_CASE("MiniBricks") {
  MiniBricks env;
  const Frame f0 = env.reset(4);
  CHECK(env.action_count() == 4);
  CHECK(env.lives() == 3);
  CHECK(env.bricks_left() == 48);
  CHECK(MiniBricks().reset(4) == f0);

  SUBCASE("without FIRE the episode truncates") {
    int frames = 0;
    StepResult r;
    do {
      r = env.step(MiniBricks::kNoop);
      ++frames;
    } while (!r.terminated && !r.truncated);
    CHECK(r.truncated);
    CHECK_FALSE(r.terminated);
    CHECK(frames == MiniBricks::kMaxFrames);
  }
  SUBCASE("idle paddle loses every life") {
    double total = 0.0;
    StepResult r;
    do {
      r = env.step(MiniBricks::kFire);
      total += r.reward;
    } while (!r.terminated && !r.truncated);
    CHECK(r.terminated);
    CHECK(env.lives() == 0);
    CHECK(total == 48 - env.bricks_left());
  }
}

TEST_CASE("environment registry") {
  CHECK(action_count("MiniCatch-v0") == 3);
  CHECK(action_count("MiniCatch8-v0") == 3);
  CHECK(action_count("MiniBricks-v0") == 4);
  CHECK(make_env("MiniCatch8-v0")->id() == "MiniCatch8-v0");
  CHECK_THROWS_AS(make_env("Pong-v5"), std::invalid_argument);
  CHECK(registered_env_ids().size() == 3);
}

TEST_CASE("taxonomy") {
  CHECK(atari_taxonomy().size() == 12);
  CHECK(taxonomy_lookup("Breakout") ==
        TaxonomyEntry{"Breakout", Exploration::kEasy, RewardClass::kHumanOptimal, ObjectCount::kLow});
  CHECK(taxonomy_lookup("Seaquest") ==
        TaxonomyEntry{"Seaquest", Exploration::kEasy, RewardClass::kScoreExploit, ObjectCount::kHigh});
  CHECK(taxonomy_lookup("Zaxxon") == TaxonomyEntry{"Zaxxon", Exploration::kHard, RewardClass::kDense, ObjectCount::kHigh});
  for (const auto& e : atari_taxonomy()) CHECK(e.reward != RewardClass::kSparse);
  CHECK(to_string(taxonomy_lookup("MiniCatch-v0").objects) == "low");
  CHECK(to_string(taxonomy_lookup("MiniCatch8-v0").objects) == "high");
  CHECK(to_string(RewardClass::kHumanOptimal) == "human-optimal");
  CHECK_THROWS_AS(taxonomy_lookup("Montezuma"), std::invalid_argument);
}
