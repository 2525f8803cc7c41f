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

#ifndef OBDISTILL_ORACLE_H_
#define OBDISTILL_ORACLE_H_

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "obdistill/core.h"
#include "obdistill/envs.h"

namespace obdistill {

// Policy to imitate. Acts greedily with respect to its internal scores.
class Oracle : public Policy {
 public:
  virtual std::string name() const = 0;

  virtual bool has_q() const { return false; }
  // One value per discrete action; only valid if has_q().
  virtual std::vector<double> QValues(StateView s) const;

  virtual bool has_log_policy() const { return false; }
  // log pi(a|s) per discrete action; only for stochastic discrete oracles.
  virtual std::vector<double> LogPolicy(StateView s) const;
};

// Index of the largest value, lowest index on ties.
std::size_t ArgMax(std::span<const double> values);
std::vector<double> LogSoftmax(std::span<const double> logits);

enum class Activation { kIdentity, kRelu, kTanh };

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
  Activation activation = Activation::kIdentity;
};

// Feed-forward network oracle. The head decides how outputs are read:
//   q      - Q-values over discrete actions, act = argmax
//   logits - unnormalized log-probabilities, act = argmax
//   mean   - continuous action mean
class MlpOracle final : public Oracle {
 public:
  enum class Head { kQ, kLogits, kMean };

  MlpOracle(std::size_t input_dim, std::vector<DenseLayer> layers, Head head,
            std::vector<std::string> action_names, std::string name = "mlp");

  std::string name() const override { return name_; }
  Action Act(StateView s) const override;
  bool has_q() const override { return head_ == Head::kQ; }
  std::vector<double> QValues(StateView s) const override;
  bool has_log_policy() const override { return head_ == Head::kLogits; }
  std::vector<double> LogPolicy(StateView s) const override;

  std::vector<double> Forward(StateView s) const;

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return layers_.back().out; }
  Head head() const { return head_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  const std::vector<std::string>& action_names() const { return action_names_; }

 private:
  std::size_t input_dim_;
  std::vector<DenseLayer> layers_;
  Head head_;
  std::vector<std::string> action_names_;
  std::string name_;
};

// Oracle file:
// {"input_dim": p,
//  "layers": [{"w": [[...], ...], "b": [...], "act": "relu|tanh|identity"}],
//  "head": "q"|"logits"|"mean", "action_names": [...]}
// Matrices are row-major with one row per output unit.
std::unique_ptr<MlpOracle> LoadOracle(const std::filesystem::path& path);
std::unique_ptr<MlpOracle> OracleFromJson(const nlohmann::json& j);
nlohmann::json OracleToJson(const MlpOracle& oracle);

// Wraps a stochastic discrete oracle so that Q(s, .) = log pi(.|s).
// Throws kNotStochastic if the oracle has no log-policy.
std::shared_ptr<const Oracle> QFromLogPolicy(std::shared_ptr<const Oracle> base);

// ToyPong: UP/DOWN on the sign of (ball.y - player.y), NOOP inside the
// deadband.
class ToyPongTracker final : public Oracle {
 public:
  explicit ToyPongTracker(double deadband = 0.01) : deadband_(deadband) {}
  std::string name() const override { return "tracker"; }
  Action Act(StateView s) const override;

 private:
  double deadband_;
};

// ToyPong: follows the enemy paddle instead of the ball. Works only while the
// enemy mirrors the ball.
class EnemyFollower final : public Oracle {
 public:
  explicit EnemyFollower(double deadband = 0.01) : deadband_(deadband) {}
  std::string name() const override { return "enemy-follower"; }
  Action Act(StateView s) const override;

 private:
  double deadband_;
};

// CropSim expert: 27 kg/ha on day 39, 35 kg/ha on day 45, 54 kg/ha on day 80,
// nothing otherwise. Days advance by one from 0, so each dose fires exactly
// once per season.
class CropHeuristic final : public Oracle {
 public:
  static constexpr double kDoseDays[3] = {39.0, 45.0, 80.0};
  std::string name() const override { return "crop-heuristic"; }
  Action Act(StateView s) const override;
};

// CartPole: push right iff a linear combination of the state is positive.
class CartPolePD final : public Oracle {
 public:
  std::string name() const override { return "cartpole-pd"; }
  Action Act(StateView s) const override;
};

// DoubleIntegrator: a = clamp(-kp x - kd v, -1, 1).
class IntegratorPD final : public Oracle {
 public:
  static constexpr double kKp = 1.0;
  static constexpr double kKd = 1.7;
  std::string name() const override { return "integrator-pd"; }
  Action Act(StateView s) const override;
};

// Small hand-weighted networks standing in for trained agents.
// ToyPong Q-network (q head) / policy network (logits head) whose greedy
// action matches ToyPongTracker, and a tanh controller for DoubleIntegrator.
std::unique_ptr<MlpOracle> MakeToyPongQNetwork();
std::unique_ptr<MlpOracle> MakeToyPongPolicyNetwork();
std::unique_ptr<MlpOracle> MakeIntegratorNetwork();

// "builtin:NAME" or a path to an oracle file. Builtins: tracker,
// enemy-follower, crop-heuristic, cartpole-pd, integrator-pd, toypong-qnet,
// toypong-policy, integrator-net.
std::shared_ptr<const Oracle> ResolveOracle(std::string_view spec);
std::vector<std::string> BuiltinOracleNames();

}  // namespace obdistill

#endif  // OBDISTILL_ORACLE_H_
