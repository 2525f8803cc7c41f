/*
 * Copyright 2026 The obdistill Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <cmath>
#include <memory>

#include "obdistill/envs.h"

namespace obdistill {

namespace {

double MoveTowards(double from, double to, double max_step) {
  const double delta = std::clamp(to - from, -max_step, max_step);
  return from + delta;
}

double ClampPaddle(double y) {
  return std::clamp(y, ToyPong::kPaddleHalf, 1.0 - ToyPong::kPaddleHalf);
}

}  // namespace

ToyPong::ToyPong(bool lazy_enemy)
    : lazy_enemy_(lazy_enemy),
      spec_{{"player.x", "player.y", "enemy.x", "enemy.y", "ball.x", "ball.y",
             "ball.dx", "ball.dy"}},
      actions_(ActionSpec::Discrete({"NOOP", "UP", "DOWN"})),
      s_(8, 0.0) {}

std::string ToyPong::name() const {
  return lazy_enemy_ ? "toypong-lazy" : "toypong";
}

std::unique_ptr<Environment> ToyPong::Clone() const {
  return std::make_unique<ToyPong>(lazy_enemy_);
}

State ToyPong::DoReset(Rng& rng) {
  s_[kPlayerX] = kPlayerLine;
  s_[kPlayerY] = 0.5;
  s_[kEnemyX] = kEnemyLine;
  s_[kEnemyY] = 0.5;
  s_[kBallX] = 0.5;
  s_[kBallY] = rng.Uniform(0.2, 0.8);
  // Serve towards the player.
  s_[kBallDx] = -rng.Uniform(0.010, 0.016);
  const double dy = rng.Uniform(0.004, 0.012);
  s_[kBallDy] = rng.Bernoulli(0.5) ? dy : -dy;
  return s_;
}

StepResult ToyPong::DoStep(const Action& action, Rng& /*rng*/) {
  StepResult result;
  switch (DiscreteIndex(action)) {
    case kUp: s_[kPlayerY] += kPlayerSpeed; break;
    case kDown: s_[kPlayerY] -= kPlayerSpeed; break;
    default: break;
  }
  s_[kPlayerY] = ClampPaddle(s_[kPlayerY]);

  if (!lazy_enemy_ || s_[kBallDx] > 0.0) {
    s_[kEnemyY] = ClampPaddle(MoveTowards(s_[kEnemyY], s_[kBallY], kEnemySpeed));
  }

  s_[kBallX] += s_[kBallDx];
  s_[kBallY] += s_[kBallDy];
  if (s_[kBallY] < 0.0) {
    s_[kBallY] = -s_[kBallY];
    s_[kBallDy] = -s_[kBallDy];
  } else if (s_[kBallY] > 1.0) {
    s_[kBallY] = 2.0 - s_[kBallY];
    s_[kBallDy] = -s_[kBallDy];
  }

  const double reach = kPaddleHalf + kBallRadius;
  if (s_[kBallDx] < 0.0 && s_[kBallX] <= kPlayerLine) {
    if (std::abs(s_[kBallY] - s_[kPlayerY]) <= reach) {
      // Each return speeds the ball up until the enemy can no longer follow.
      s_[kBallX] = 2.0 * kPlayerLine - s_[kBallX];
      s_[kBallDx] = std::min(-s_[kBallDx] * 1.1, kMaxBallDx);
      const double dy = std::min(std::abs(s_[kBallDy]) * 1.2 + 0.002, kMaxBallDy);
      s_[kBallDy] = s_[kBallDy] < 0.0 ? -dy : dy;
    } else {
      result.reward = -1.0;
      result.done = true;
    }
  } else if (s_[kBallDx] > 0.0 && s_[kBallX] >= kEnemyLine) {
    if (std::abs(s_[kBallY] - s_[kEnemyY]) <= reach) {
      s_[kBallX] = 2.0 * kEnemyLine - s_[kBallX];
      s_[kBallDx] = -s_[kBallDx];
    } else {
      result.reward = 1.0;
      result.done = true;
    }
  }
  result.state = s_;
  return result;
}

}  // namespace obdistill
