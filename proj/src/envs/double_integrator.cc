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
#include <memory>

#include "obdistill/envs.h"

namespace obdistill {

DoubleIntegrator::DoubleIntegrator()
    : spec_{{"position", "velocity"}},
      actions_(ActionSpec::Continuous({-1.0}, {1.0})) {}

std::unique_ptr<Environment> DoubleIntegrator::Clone() const {
  return std::make_unique<DoubleIntegrator>();
}

State DoubleIntegrator::DoReset(Rng& rng) {
  position_ = rng.Uniform(-1.0, 1.0);
  velocity_ = rng.Uniform(-0.5, 0.5);
  return {position_, velocity_};
}

StepResult DoubleIntegrator::DoStep(const Action& action, Rng& /*rng*/) {
  const double a = std::clamp(ContinuousValues(action)[0], -1.0, 1.0);
  const double next_position = position_ + kDt * velocity_;
  velocity_ += kDt * a;
  position_ = next_position;

  StepResult result;
  result.reward = -(position_ * position_ + 0.1 * velocity_ * velocity_);
  result.state = {position_, velocity_};
  return result;
}

}  // namespace obdistill
