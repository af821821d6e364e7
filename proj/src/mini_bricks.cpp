#include <algorithm>
#include <stdexcept>

#include "segrl/env.hpp"

namespace segrl {
namespace {

constexpr int kPaddleSpeed = 3;
constexpr int kBallSpeed = 2;
constexpr std::uint8_t kWallGray = 142;
constexpr std::uint8_t kRowColors[3][3] = {{200, 72, 72}, {198, 108, 58}, {180, 122, 48}};

bool overlaps(int ax, int ay, int aw, int ah, int bx, int by, int bw, int bh) {
  return ax < bx + bw && bx < ax + aw && ay < by + bh && by < ay + ah;
}

}  // namespace

int MiniBricks::bricks_left() const { return static_cast<int>(std::count(bricks_.begin(), bricks_.end(), true)); }

void MiniBricks::place_ball_on_paddle() {
  ball_live_ = false;
  vx_ = vy_ = 0;
  ball_x_ = paddle_x_ + (kPaddleWidth - kBallWidth) / 2;
  ball_y_ = kPaddleY - kBallHeight;
}

Frame MiniBricks::reset(std::optional<std::uint64_t> seed) {
  if (seed) {
    rng_ = SplitMix64(*seed);
  } else if (!started_) {
    rng_ = SplitMix64(0);
  }
  bricks_.assign(kBrickRows * kBrickCols, true);
  paddle_x_ = (kLeftWall + kRightWall - kPaddleWidth) / 2;
  lives_ = kLives;
  score_ = 0;
  frames_ = 0;
  place_ball_on_paddle();
  started_ = true;
  done_ = false;
  return render();
}

StepResult MiniBricks::step(int action) {
  if (!started_) throw EnvError("MiniBricks: step before reset");
  if (done_) throw EnvError("MiniBricks: step after episode termination; call reset");
  if (action < 0 || action >= action_count()) {
    throw EnvError("MiniBricks: action " + std::to_string(action) + " outside [0, 4)");
  }
  ++frames_;
  if (action == kLeft) paddle_x_ -= kPaddleSpeed;
  if (action == kRight) paddle_x_ += kPaddleSpeed;
  paddle_x_ = std::clamp(paddle_x_, kLeftWall, kRightWall - kPaddleWidth);

  double reward = 0.0;
  bool terminated = false;
  if (!ball_live_) {
    ball_x_ = paddle_x_ + (kPaddleWidth - kBallWidth) / 2;
    if (action == kFire) {
      ball_live_ = true;
      vx_ = rng_.below(2) == 0 ? -kBallSpeed : kBallSpeed;
      vy_ = -kBallSpeed;
    }
  } else {
    int nx = ball_x_ + vx_;
    int ny = ball_y_ + vy_;
    if (nx < kLeftWall) {
      nx = 2 * kLeftWall - nx;
      vx_ = -vx_;
    } else if (nx + kBallWidth > kRightWall) {
      nx = 2 * (kRightWall - kBallWidth) - nx;
      vx_ = -vx_;
    }
    if (ny < kTopWall) {
      ny = 2 * kTopWall - ny;
      vy_ = -vy_;
    }
    for (int i = 0; i < kBrickRows * kBrickCols; ++i) {
      if (!bricks_[i]) continue;
      const int bx = kLeftWall + (i % kBrickCols) * kBrickWidth;
      const int by = kBrickTop + (i / kBrickCols) * kBrickHeight;
      if (overlaps(nx, ny, kBallWidth, kBallHeight, bx, by, kBrickWidth, kBrickHeight)) {
        bricks_[i] = false;
        reward += 1.0;
        score_ += 1;
        vy_ = -vy_;
        ny = ball_y_;
        break;
      }
    }
    if (vy_ > 0 && overlaps(nx, ny, kBallWidth, kBallHeight, paddle_x_, kPaddleY, kPaddleWidth, kPaddleHeight)) {
      vy_ = -vy_;
      ny = kPaddleY - kBallHeight;
      vx_ = (nx + kBallWidth / 2 < paddle_x_ + kPaddleWidth / 2) ? -kBallSpeed : kBallSpeed;
    }
    ball_x_ = nx;
    ball_y_ = ny;
    if (ball_y_ >= kFrameHeight) {
      lives_ -= 1;
      if (lives_ <= 0) {
        terminated = true;
      } else {
        place_ball_on_paddle();
      }
    }
  }
  if (bricks_left() == 0) terminated = true;
  const bool truncated = !terminated && frames_ >= kMaxFrames;
  done_ = terminated || truncated;
  return {render(), reward, terminated, truncated};
}

Frame MiniBricks::render() const {
  Frame f(kFrameWidth, kFrameHeight);
  f.fill_rect(0, kTopWall - 8, kFrameWidth, 8, kWallGray, kWallGray, kWallGray);
  f.fill_rect(0, kTopWall - 8, kLeftWall, kFrameHeight, kWallGray, kWallGray, kWallGray);
  f.fill_rect(kRightWall, kTopWall - 8, kFrameWidth - kRightWall, kFrameHeight, kWallGray, kWallGray, kWallGray);
  // Score and lives as block counters above the wall.
  for (int i = 0; i < std::min(score_, 24); ++i) f.fill_rect(8 + i * 4, 4, 3, 6, kWallGray, kWallGray, kWallGray);
  for (int i = 0; i < lives_; ++i) f.fill_rect(kFrameWidth - 16 - i * 6, 4, 4, 6, 200, 72, 72);
  for (int i = 0; i < kBrickRows * kBrickCols; ++i) {
    if (!bricks_[i]) continue;
    const auto* c = kRowColors[i / kBrickCols];
    f.fill_rect(kLeftWall + (i % kBrickCols) * kBrickWidth, kBrickTop + (i / kBrickCols) * kBrickHeight, kBrickWidth,
                kBrickHeight, c[0], c[1], c[2]);
  }
  f.fill_rect(paddle_x_, kPaddleY, kPaddleWidth, kPaddleHeight, 200, 72, 72);
  if (ball_y_ < kFrameHeight) f.fill_rect(ball_x_, ball_y_, kBallWidth, kBallHeight, 200, 72, 72);
  return f;
}

}  // namespace segrl
