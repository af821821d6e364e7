#include "segrl/env.hpp"

#include <algorithm>
#include <stdexcept>

namespace segrl {
namespace {

constexpr std::uint8_t kBorderGray = 142;
constexpr int kBorder = 2;
constexpr int kStripY = 4;
constexpr int kStripHeight = 6;
constexpr int kStripX = 6;
constexpr int kStripPitch = 14;
constexpr int kStripBlock = 10;

}  // namespace

MiniCatch::MiniCatch(int num_balls, ColumnSource column_source)
    : num_balls_(num_balls), column_source_(std::move(column_source)) {
  if (num_balls < 1 || num_balls > kMaxBalls) {
    throw std::invalid_argument("MiniCatch supports 1 to 8 simultaneous balls, got " + std::to_string(num_balls));
  }
}

std::string MiniCatch::id() const { return num_balls_ == 1 ? "MiniCatch-v0" : "MiniCatch" + std::to_string(num_balls_) + "-v0"; }

int MiniCatch::spawn_spacing(int num_balls) {
  // A ball is visible at y = 0, 2, ..., 194: a 98-frame cycle.
  constexpr int kCycleFrames = (kPaddleY - kBallSize) / kSpeed;
  return num_balls <= 1 ? 0 : (kCycleFrames / num_balls) * kSpeed;
}

int MiniCatch::next_column() {
  if (column_source_) {
    const int x = column_source_();
    if (x < 0 || x > kFrameWidth - kBallSize || x % kBallSize != 0) {
      throw std::invalid_argument("column source returned invalid x " + std::to_string(x));
    }
    return x;
  }
  return static_cast<int>(rng_.below(kBallColumns)) * kBallSize;
}

Frame MiniCatch::reset(std::optional<std::uint64_t> seed) {
  if (seed) {
    rng_ = SplitMix64(*seed);
  } else if (!started_) {
    rng_ = SplitMix64(0);
  }
  state_ = MiniCatchState{};
  state_.paddle_x = kPaddleStart;
  const int spacing = spawn_spacing(num_balls_);
  for (int i = 0; i < num_balls_; ++i) state_.balls.emplace_back(next_column(), -i * spacing);
  state_.rng_state = rng_.state();
  started_ = true;
  done_ = false;
  return render();
}

StepResult MiniCatch::step(int action) {
  if (!started_) throw EnvError("MiniCatch: step before reset");
  if (done_) throw EnvError("MiniCatch: step after episode termination; call reset");
  if (action < 0 || action >= action_count()) {
    throw EnvError("MiniCatch: action " + std::to_string(action) + " outside [0, 3)");
  }
  if (action == kLeft) state_.paddle_x -= kSpeed;
  if (action == kRight) state_.paddle_x += kSpeed;
  state_.paddle_x = std::clamp(state_.paddle_x, 0, kPaddleMaxX);

  double reward = 0.0;
  for (auto& [x, y] : state_.balls) {
    y += kSpeed;
    if (y + kBallSize < kPaddleY || state_.balls_resolved >= kBallsPerEpisode) continue;
    const bool caught = x < state_.paddle_x + kPaddleWidth && state_.paddle_x < x + kBallSize;
    const int outcome = caught ? 1 : -1;
    reward += outcome;
    state_.outcomes.push_back(outcome);
    state_.balls_resolved += 1;
    x = next_column();
    y = 0;
  }
  state_.rng_state = rng_.state();
  done_ = state_.balls_resolved >= kBallsPerEpisode;
  return {render(), reward, done_, false};
}

Frame MiniCatch::render() const {
  Frame f(kFrameWidth, kFrameHeight);
  f.fill_rect(0, 0, kFrameWidth, kBorder, kBorderGray, kBorderGray, kBorderGray);
  f.fill_rect(0, kFrameHeight - kBorder, kFrameWidth, kBorder, kBorderGray, kBorderGray, kBorderGray);
  f.fill_rect(0, 0, kBorder, kFrameHeight, kBorderGray, kBorderGray, kBorderGray);
  f.fill_rect(kFrameWidth - kBorder, 0, kBorder, kFrameHeight, kBorderGray, kBorderGray, kBorderGray);
  for (std::size_t i = 0; i < state_.outcomes.size(); ++i) {
    const int x = kStripX + static_cast<int>(i) * kStripPitch;
    if (state_.outcomes[i] > 0) {
      f.fill_rect(x, kStripY, kStripBlock, kStripHeight, 64, 200, 72);
    } else {
      f.fill_rect(x, kStripY, kStripBlock, kStripHeight, 200, 72, 64);
    }
  }
  for (const auto& [x, y] : state_.balls) {
    if (y >= 0) f.fill_rect(x, y, kBallSize, kBallSize, 255, 255, 255);
  }
  f.fill_rect(state_.paddle_x, kPaddleY, kPaddleWidth, kPaddleHeight, 255, 255, 255);
  return f;
}

}  // namespace segrl
