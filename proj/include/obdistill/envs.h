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

#ifndef OBDISTILL_ENVS_H_
#define OBDISTILL_ENVS_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "obdistill/core.h"
#include "obdistill/seed.h"

namespace obdistill {

struct StepResult {
  State state;
  double reward = 0.0;
  bool done = false;
};

// Deterministic episodic environment: equal reset seeds and equal action
// sequences give identical trajectories. Stepping after `done` is a
// kEnvironmentFault.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string name() const = 0;
  virtual const StateSpec& state_spec() const = 0;
  virtual const ActionSpec& action_spec() const = 0;
  virtual std::size_t max_episode_steps() const = 0;

  virtual State Reset(std::uint64_t seed) = 0;
  virtual StepResult Step(const Action& action) = 0;
  virtual std::unique_ptr<Environment> Clone() const = 0;
};

// Shared bookkeeping: action validation, done tracking, step cap.
class EpisodicEnvironment : public Environment {
 public:
  State Reset(std::uint64_t seed) final;
  StepResult Step(const Action& action) final;

 protected:
  virtual State DoReset(Rng& rng) = 0;
  virtual StepResult DoStep(const Action& action, Rng& rng) = 0;

 private:
  Rng rng_{0};
  std::size_t steps_ = 0;
  bool started_ = false;
  bool done_ = false;
};

// Two-paddle pong on the unit square. State (p=8):
//   player.x player.y enemy.x enemy.y ball.x ball.y ball.dx ball.dy
// player.x and enemy.x never change. Actions NOOP, UP (+y), DOWN (-y).
// +1 when the ball passes the enemy line, -1 when it passes the player line.
// With `lazy_enemy` the enemy only moves while the ball travels towards it,
// i.e. it stays still after returning the ball.
class ToyPong final : public EpisodicEnvironment {
 public:
  enum Feature : std::size_t {
    kPlayerX = 0, kPlayerY, kEnemyX, kEnemyY, kBallX, kBallY, kBallDx, kBallDy
  };
  enum Move : std::size_t { kNoop = 0, kUp = 1, kDown = 2 };

  static constexpr double kPlayerLine = 0.05;
  static constexpr double kEnemyLine = 0.95;
  static constexpr double kPaddleHalf = 0.05;
  static constexpr double kBallRadius = 0.01;
  static constexpr double kPlayerSpeed = 0.03;
  static constexpr double kEnemySpeed = 0.012;
  static constexpr double kMaxBallDx = 0.03;
  static constexpr double kMaxBallDy = 0.027;

  explicit ToyPong(bool lazy_enemy = false);

  std::string name() const override;
  const StateSpec& state_spec() const override { return spec_; }
  const ActionSpec& action_spec() const override { return actions_; }
  std::size_t max_episode_steps() const override { return 1000; }
  std::unique_ptr<Environment> Clone() const override;

 protected:
  State DoReset(Rng& rng) override;
  StepResult DoStep(const Action& action, Rng& rng) override;

 private:
  bool lazy_enemy_;
  StateSpec spec_;
  ActionSpec actions_;
  State s_;
};

// Classic cart-pole balancing (Euler integration, 0.02 s step).
// State: cart.x cart.v pole.theta pole.omega. Actions LEFT, RIGHT.
class CartPoleClassic final : public EpisodicEnvironment {
 public:
  CartPoleClassic();

  std::string name() const override { return "cartpole"; }
  const StateSpec& state_spec() const override { return spec_; }
  const ActionSpec& action_spec() const override { return actions_; }
  std::size_t max_episode_steps() const override { return 500; }
  std::unique_ptr<Environment> Clone() const override;

 protected:
  State DoReset(Rng& rng) override;
  StepResult DoStep(const Action& action, Rng& rng) override;

 private:
  StateSpec spec_;
  ActionSpec actions_;
  State s_;
};

// Season-long nitrogen management, one step per day for 160 days.
// State: days_after_planting growth_stage cumulative_nitrogen.
// Actions apply_0 apply_27 apply_35 apply_54 (kg/ha).
class CropSim final : public EpisodicEnvironment {
 public:
  static constexpr std::size_t kSeasonDays = 160;
  static constexpr double kDoses[4] = {0.0, 27.0, 35.0, 54.0};

  CropSim();

  std::string name() const override { return "cropsim"; }
  const StateSpec& state_spec() const override { return spec_; }
  const ActionSpec& action_spec() const override { return actions_; }
  std::size_t max_episode_steps() const override { return kSeasonDays; }
  std::unique_ptr<Environment> Clone() const override;

 protected:
  State DoReset(Rng& rng) override;
  StepResult DoStep(const Action& action, Rng& rng) override;

 private:
  double StageAt(double day) const;

  StateSpec spec_;
  ActionSpec actions_;
  double day_ = 0.0;
  double cumulative_n_ = 0.0;
  double soil_n_ = 0.0;
  double uptake_scale_ = 1.0;
  std::int64_t stage_shift_ = 0;
};

// x' = x + dt v, v' = v + dt a with a in [-1, 1], dt = 0.05, 200 steps.
class DoubleIntegrator final : public EpisodicEnvironment {
 public:
  static constexpr double kDt = 0.05;

  DoubleIntegrator();

  std::string name() const override { return "double-integrator"; }
  const StateSpec& state_spec() const override { return spec_; }
  const ActionSpec& action_spec() const override { return actions_; }
  std::size_t max_episode_steps() const override { return 200; }
  std::unique_ptr<Environment> Clone() const override;

 protected:
  State DoReset(Rng& rng) override;
  StepResult DoStep(const Action& action, Rng& rng) override;

 private:
  StateSpec spec_;
  ActionSpec actions_;
  double position_ = 0.0;
  double velocity_ = 0.0;
};

// Repeats the previous action with probability `repeat_prob`. The wrapper's
// own randomness is seeded from the reset seed.
class StickyActions final : public Environment {
 public:
  StickyActions(std::unique_ptr<Environment> inner, double repeat_prob = 0.25);

  std::string name() const override;
  const StateSpec& state_spec() const override { return inner_->state_spec(); }
  const ActionSpec& action_spec() const override {
    return inner_->action_spec();
  }
  std::size_t max_episode_steps() const override {
    return inner_->max_episode_steps();
  }
  State Reset(std::uint64_t seed) override;
  StepResult Step(const Action& action) override;
  std::unique_ptr<Environment> Clone() const override;

 private:
  std::unique_ptr<Environment> inner_;
  double repeat_prob_;
  Rng rng_{0};
  std::optional<Action> previous_;
};

struct EnvOptions {
  bool sticky_actions = false;
  double sticky_prob = 0.25;
};

// Names: toypong, toypong-lazy, cartpole, cropsim, double-integrator.
std::unique_ptr<Environment> MakeEnvironment(std::string_view name,
                                             const EnvOptions& options = {});
std::vector<std::string> EnvironmentNames();

// Anything that maps a state to an action. Implementations must be safe for
// concurrent Act calls.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual Action Act(StateView s) const = 0;
};

class FunctionPolicy final : public Policy {
 public:
  explicit FunctionPolicy(std::function<Action(StateView)> fn)
      : fn_(std::move(fn)) {}
  Action Act(StateView s) const override { return fn_(s); }

 private:
  std::function<Action(StateView)> fn_;
};

struct RolloutBatch {
  std::vector<State> states;
  std::vector<Action> actions;
  std::size_t episodes = 0;
};

// Collects exactly t states, recorded before the policy acts. Episodes are
// concatenated; episode e is reset with DeriveSeed(seed, e).
RolloutBatch Rollout(const Policy& policy, Environment& env, std::size_t t,
                     std::uint64_t seed);

struct ReturnStats {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for one episode
  std::vector<double> per_episode;
};

// Undiscounted returns of `episodes` episodes; episode e is reset with
// DeriveSeed(seed, e). With jobs > 1 episodes run on cloned environments and
// are reduced in episode order, so the result does not depend on `jobs`.
ReturnStats EvaluateReturn(const Policy& policy, const Environment& env,
                           std::size_t episodes, std::uint64_t seed,
                           std::size_t jobs = 1);

}  // namespace obdistill

#endif  // OBDISTILL_ENVS_H_
