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

#include <cmath>
#include <memory>
#include <numbers>

#include "obdistill/envs.h"

namespace obdistill {

namespace {

constexpr double kGravity = 9.8;
constexpr double kCartMass = 1.0;
constexpr double kPoleMass = 0.1;
constexpr double kTotalMass = kCartMass + kPoleMass;
constexpr double kHalfLength = 0.5;
constexpr double kPoleMassLength = kPoleMass * kHalfLength;
constexpr double kForce = 10.0;
constexpr double kTau = 0.02;
constexpr double kThetaLimit = 12.0 * 2.0 * std::numbers::pi / 360.0;
constexpr double kXLimit = 2.4;

}  // namespace

CartPoleClassic::CartPoleClassic()
    : spec_{{"cart.x", "cart.v", "pole.theta", "pole.omega"}},
      actions_(ActionSpec::Discrete({"LEFT", "RIGHT"})),
      s_(4, 0.0) {}

std::unique_ptr<Environment> CartPoleClassic::Clone() const {
  return std::make_unique<CartPoleClassic>();
}

State CartPoleClassic::DoReset(Rng& rng) {
  for (double& x : s_) x = rng.Uniform(-0.05, 0.05);
  return s_;
}

StepResult CartPoleClassic::DoStep(const Action& action, Rng& /*rng*/) {
  const double force = DiscreteIndex(action) == 1 ? kForce : -kForce;
  const double x = s_[0], x_dot = s_[1], theta = s_[2], theta_dot = s_[3];
  const double cos_t = std::cos(theta);
  const double sin_t = std::sin(theta);
  const double temp =
      (force + kPoleMassLength * theta_dot * theta_dot * sin_t) / kTotalMass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / kTotalMass));
  const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

  s_[0] = x + kTau * x_dot;
  s_[1] = x_dot + kTau * x_acc;
  s_[2] = theta + kTau * theta_dot;
  s_[3] = theta_dot + kTau * theta_acc;

  StepResult result;
  result.reward = 1.0;
  result.done = std::abs(s_[0]) > kXLimit || std::abs(s_[2]) > kThetaLimit;
  result.state = s_;
  return result;
}

}  // namespace obdistill
