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

#include <array>
#include <memory>

#include "obdistill/envs.h"

namespace obdistill {

namespace {

// Day on which each of stages 2..9 begins, before the per-season shift.
constexpr std::array<double, 8> kStageStarts = {10, 22, 35, 50, 65, 85, 105, 130};
// Fraction of soil nitrogen taken up per day, by growth stage.
constexpr std::array<double, 9> kUptakeRate = {0.01, 0.02, 0.04, 0.06, 0.08,
                                               0.08, 0.06, 0.04, 0.02};
constexpr double kLeaching = 0.01;
constexpr double kFertilizerCost = 0.05;

}  // namespace

CropSim::CropSim()
    : spec_{{"days_after_planting", "growth_stage", "cumulative_nitrogen"}},
      actions_(ActionSpec::Discrete(
          {"apply_0", "apply_27", "apply_35", "apply_54"})) {}

std::unique_ptr<Environment> CropSim::Clone() const {
  return std::make_unique<CropSim>();
}

double CropSim::StageAt(double day) const {
  double stage = 1.0;
  for (double start : kStageStarts) {
    if (day >= start + static_cast<double>(stage_shift_)) stage += 1.0;
  }
  return stage;
}

State CropSim::DoReset(Rng& rng) {
  day_ = 0.0;
  cumulative_n_ = 0.0;
  soil_n_ = rng.Uniform(15.0, 25.0);
  uptake_scale_ = rng.Uniform(0.8, 1.2);
  stage_shift_ = rng.UniformInt(-3, 3);
  return {day_, StageAt(day_), cumulative_n_};
}

StepResult CropSim::DoStep(const Action& action, Rng& /*rng*/) {
  const double applied = kDoses[DiscreteIndex(action)];
  soil_n_ += applied;
  cumulative_n_ += applied;
  const auto stage = static_cast<std::size_t>(StageAt(day_));
  const double uptake = kUptakeRate[stage - 1] * uptake_scale_ * soil_n_;
  soil_n_ = (soil_n_ - uptake) * (1.0 - kLeaching);
  day_ += 1.0;

  StepResult result;
  result.reward = uptake - kFertilizerCost * applied;
  result.done = day_ >= static_cast<double>(kSeasonDays);
  result.state = {day_, StageAt(day_), cumulative_n_};
  return result;
}

}  // namespace obdistill
