#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segrl/rng.hpp"

namespace segrl {

inline constexpr int kFrameWidth = 160;
inline constexpr int kFrameHeight = 210;

// Row-major RGB byte image.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0);

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::uint8_t* at(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* at(int x, int y) const { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b);
  void fill_rect(int x, int y, int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  friend bool operator==(const Image&, const Image&) = default;
};

// A raw environment observation: always 160 wide, 210 high.
using Frame = Image;

struct StepResult {
  Frame frame;
  double reward = 0.0;
  bool terminated = false;
  bool truncated = false;
};

class Env {
 public:
  virtual ~Env() = default;

  // With a seed the whole state becomes a function of that seed; without
  // one the environment continues its own random stream.
  virtual Frame reset(std::optional<std::uint64_t> seed = std::nullopt) = 0;
  // Advances one native frame.
  virtual StepResult step(int action) = 0;
  virtual int action_count() const = 0;
  virtual std::string id() const = 0;
};

// Thrown for step-after-termination, step-before-reset and bad actions.
class EnvError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// --- MiniCatch -------------------------------------------------------------
//
// Balls (4x4) fall 2 px per frame from the top; the paddle (16x4, rows
// 200..203) moves 2 px per frame. A ball is resolved when its bottom edge
// reaches the paddle band: +1 if it overlaps the paddle horizontally, -1
// otherwise, then it respawns at y=0 in a fresh column. The episode ends
// after 10 resolved balls. With n > 1 balls, spawns are staggered by
// kSpawnSpacing(n) rows.
struct MiniCatchState {
  int paddle_x = 72;
  std::vector<std::pair<int, int>> balls;  // (x, y); y < 0 means not yet spawned
  int balls_resolved = 0;
  std::vector<int> outcomes;               // +1/-1 per resolved ball, for the score strip
  std::uint64_t rng_state = 0;
};

class MiniCatch final : public Env {
 public:
  enum Action { kNoop = 0, kLeft = 1, kRight = 2 };

  static constexpr int kPaddleWidth = 16;
  static constexpr int kPaddleHeight = 4;
  static constexpr int kPaddleY = 200;
  static constexpr int kPaddleStart = 72;
  static constexpr int kPaddleMaxX = kFrameWidth - kPaddleWidth;  // 144
  static constexpr int kBallSize = 4;
  static constexpr int kBallColumns = kFrameWidth / kBallSize;     // 40
  static constexpr int kSpeed = 2;
  static constexpr int kBallsPerEpisode = 10;
  static constexpr int kMaxBalls = 8;

  // Returns a spawn x (multiple of 4 in [0, 156]); overrides the seeded RNG.
  using ColumnSource = std::function<int()>;

  explicit MiniCatch(int num_balls = 1, ColumnSource column_source = {});

  Frame reset(std::optional<std::uint64_t> seed = std::nullopt) override;
  StepResult step(int action) override;
  int action_count() const override { return 3; }
  std::string id() const override;

  const MiniCatchState& state() const { return state_; }
  int num_balls() const { return num_balls_; }
  static int spawn_spacing(int num_balls);

  Frame render() const;

 private:
  int next_column();

  int num_balls_;
  ColumnSource column_source_;
  SplitMix64 rng_;
  MiniCatchState state_;
  bool started_ = false;
  bool done_ = false;
};

// --- MiniBricks ------------------------------------------------------------
//
// Breakout-like: three rows of bricks, a 2x4 ball on integer positions with
// axis-aligned reflections, a paddle, FIRE to launch, 3 lives.
class MiniBricks final : public Env {
 public:
  enum Action { kNoop = 0, kFire = 1, kRight = 2, kLeft = 3 };

  static constexpr int kLeftWall = 8;
  static constexpr int kRightWall = kFrameWidth - 8;  // exclusive
  static constexpr int kTopWall = 24;
  static constexpr int kBrickRows = 3;
  static constexpr int kBrickCols = 16;
  static constexpr int kBrickWidth = 9;
  static constexpr int kBrickHeight = 6;
  static constexpr int kBrickTop = 48;
  static constexpr int kPaddleY = 190;
  static constexpr int kPaddleWidth = 16;
  static constexpr int kPaddleHeight = 4;
  static constexpr int kBallWidth = 2;
  static constexpr int kBallHeight = 4;
  static constexpr int kLives = 3;
  static constexpr int kMaxFrames = 27000;

  Frame reset(std::optional<std::uint64_t> seed = std::nullopt) override;
  StepResult step(int action) override;
  int action_count() const override { return 4; }
  std::string id() const override { return "MiniBricks-v0"; }

  int lives() const { return lives_; }
  int bricks_left() const;
  Frame render() const;

 private:
  void place_ball_on_paddle();

  SplitMix64 rng_;
  std::vector<bool> bricks_;
  int paddle_x_ = 0;
  int ball_x_ = 0, ball_y_ = 0, vx_ = 0, vy_ = 0;
  bool ball_live_ = false;
  int lives_ = kLives;
  int score_ = 0;
  int frames_ = 0;
  bool started_ = false;
  bool done_ = false;
};

// Registered ids: "MiniCatch-v0" (1 ball), "MiniCatch8-v0" (8 balls),
// "MiniBricks-v0". Unknown ids throw std::invalid_argument.
std::unique_ptr<Env> make_env(std::string_view id);
int action_count(std::string_view id);
std::vector<std::string> registered_env_ids();

// --- taxonomy ----------------------------------------------------------------

enum class Exploration { kEasy, kHard };
enum class RewardClass { kHumanOptimal, kScoreExploit, kDense, kSparse };
enum class ObjectCount { kLow, kHigh };

struct TaxonomyEntry {
  std::string game_id;
  Exploration exploration;
  RewardClass reward;
  ObjectCount objects;

  friend bool operator==(const TaxonomyEntry&, const TaxonomyEntry&) = default;
};

std::string to_string(Exploration e);
std::string to_string(RewardClass r);
std::string to_string(ObjectCount o);

// The twelve Atari games of the experiment, two per (exploration, reward)
// cell except hard-exploration/sparse-reward, which is excluded.
const std::vector<TaxonomyEntry>& atari_taxonomy();
// Entries for the native environments, keyed by environment id.
const std::vector<TaxonomyEntry>& native_taxonomy();

// Searches the Atari registry, then the native one; throws
// std::invalid_argument for unknown ids.
const TaxonomyEntry& taxonomy_lookup(std::string_view game_id);

}  // namespace segrl
