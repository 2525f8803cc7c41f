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

#include <memory>
#include <string>
#include <utility>

#include "obdistill/envs.h"
#include "obdistill/error.h"

namespace obdistill {

State EpisodicEnvironment::Reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  steps_ = 0;
  started_ = true;
  done_ = false;
  return DoReset(rng_);
}

StepResult EpisodicEnvironment::Step(const Action& action) {
  if (!started_) {
    throw Error(ErrorCode::kEnvironmentFault, name() + ": step before reset");
  }
  if (done_) {
    throw Error(ErrorCode::kEnvironmentFault, name() + ": step after done");
  }
  action_spec().ValidateAction(action);
  StepResult result = DoStep(action, rng_);
  ++steps_;
  if (steps_ >= max_episode_steps()) result.done = true;
  done_ = result.done;
  return result;
}

StickyActions::StickyActions(std::unique_ptr<Environment> inner,
                             double repeat_prob)
    : inner_(std::move(inner)), repeat_prob_(repeat_prob) {
  if (!(repeat_prob_ >= 0.0 && repeat_prob_ < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument,
                "sticky repeat probability must be in [0, 1)");
  }
}

std::string StickyActions::name() const { return inner_->name() + "+sticky"; }

State StickyActions::Reset(std::uint64_t seed) {
  rng_ = Rng(DeriveSeed(seed, 0x737469636bULL));
  previous_.reset();
  return inner_->Reset(seed);
}

StepResult StickyActions::Step(const Action& action) {
  const bool repeat = previous_.has_value() && rng_.Bernoulli(repeat_prob_);
  const Action taken = repeat ? *previous_ : action;
  previous_ = taken;
  return inner_->Step(taken);
}

std::unique_ptr<Environment> StickyActions::Clone() const {
  return std::make_unique<StickyActions>(inner_->Clone(), repeat_prob_);
}

std::unique_ptr<Environment> MakeEnvironment(std::string_view name,
                                             const EnvOptions& options) {
  std::unique_ptr<Environment> env;
  if (name == "toypong") {
    env = std::make_unique<ToyPong>(false);
  } else if (name == "toypong-lazy") {
    env = std::make_unique<ToyPong>(true);
  } else if (name == "cartpole") {
    env = std::make_unique<CartPoleClassic>();
  } else if (name == "cropsim") {
    env = std::make_unique<CropSim>();
  } else if (name == "double-integrator") {
    env = std::make_unique<DoubleIntegrator>();
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown environment '" + std::string(name) + "'");
  }
  if (options.sticky_actions) {
    env = std::make_unique<StickyActions>(std::move(env), options.sticky_prob);
  }
  return env;
}

std::vector<std::string> EnvironmentNames() {
  return {"toypong", "toypong-lazy", "cartpole", "cropsim",
          "double-integrator"};
}

}  // namespace obdistill
