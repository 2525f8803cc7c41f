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

#include "obdistill/oracle.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <utility>

#include "obdistill/error.h"

namespace obdistill {

using nlohmann::json;

std::vector<double> Oracle::QValues(StateView /*s*/) const {
  throw Error(ErrorCode::kQUnavailable, name() + " exposes no Q-values");
}

std::vector<double> Oracle::LogPolicy(StateView /*s*/) const {
  throw Error(ErrorCode::kNotStochastic, name() + " exposes no log-policy");
}

std::size_t ArgMax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::vector<double> LogSoftmax(std::span<const double> logits) {
  const double peak = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - peak);
  const double log_norm = peak + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_norm;
  return out;
}

// ---------------------------------------------------------------------------
// MlpOracle

MlpOracle::MlpOracle(std::size_t input_dim, std::vector<DenseLayer> layers,
                     Head head, std::vector<std::string> action_names,
                     std::string name)
    : input_dim_(input_dim),
      layers_(std::move(layers)),
      head_(head),
      action_names_(std::move(action_names)),
      name_(std::move(name)) {
  if (input_dim_ == 0 || layers_.empty()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "network needs a positive input dim and at least one layer");
  }
  std::size_t expected_in = input_dim_;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.in != expected_in || layer.out == 0 ||
        layer.weights.size() != layer.in * layer.out ||
        layer.bias.size() != layer.out) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "layer " + std::to_string(l) + " does not chain: expects " +
                      std::to_string(expected_in) + " inputs");
    }
    for (double w : layer.weights) {
      if (!std::isfinite(w)) {
        throw Error(ErrorCode::kNonFiniteValue, "non-finite network weight");
      }
    }
    for (double b : layer.bias) {
      if (!std::isfinite(b)) {
        throw Error(ErrorCode::kNonFiniteValue, "non-finite network bias");
      }
    }
    expected_in = layer.out;
  }
  if (head_ != Head::kMean) {
    if (output_dim() < 2 || action_names_.size() != output_dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "discrete head needs one action name per output (>= 2)");
    }
  }
}

std::vector<double> MlpOracle::Forward(StateView s) const {
  if (s.size() != input_dim_) {
    throw Error(ErrorCode::kArityMismatch,
                "network expects " + std::to_string(input_dim_) + " inputs");
  }
  std::vector<double> x(s.begin(), s.end());
  std::vector<double> y;
  for (const DenseLayer& layer : layers_) {
    y.assign(layer.out, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* row = layer.weights.data() + o * layer.in;
      double acc = 0.0;
      for (std::size_t i = 0; i < layer.in; ++i) acc += row[i] * x[i];
      acc += layer.bias[o];
      switch (layer.activation) {
        case Activation::kRelu: acc = acc > 0.0 ? acc : 0.0; break;
        case Activation::kTanh: acc = std::tanh(acc); break;
        case Activation::kIdentity: break;
      }
      y[o] = acc;
    }
    x.swap(y);
  }
  return x;
}

Action MlpOracle::Act(StateView s) const {
  std::vector<double> out = Forward(s);
  if (head_ == Head::kMean) return ContinuousAction(std::move(out));
  return ArgMax(out);
}

std::vector<double> MlpOracle::QValues(StateView s) const {
  if (head_ != Head::kQ) return Oracle::QValues(s);
  return Forward(s);
}

std::vector<double> MlpOracle::LogPolicy(StateView s) const {
  if (head_ != Head::kLogits) return Oracle::LogPolicy(s);
  return LogSoftmax(Forward(s));
}

namespace {

Activation ParseActivation(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "identity" || name == "linear") return Activation::kIdentity;
  throw Error(ErrorCode::kUnknownActivation,
              "unknown activation '" + name + "'");
}

std::string_view ActivationName(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "identity";
}

}  // namespace

std::unique_ptr<MlpOracle> OracleFromJson(const json& j) {
  try {
    const auto input_dim = j.at("input_dim").get<std::size_t>();
    std::vector<DenseLayer> layers;
    std::size_t expected_in = input_dim;
    for (const json& jl : j.at("layers")) {
      DenseLayer layer;
      const json& w = jl.at("w");
      layer.out = w.size();
      layer.in = layer.out > 0 ? w.at(0).size() : 0;
      if (layer.in != expected_in) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "layer " + std::to_string(layers.size()) + " has " +
                        std::to_string(layer.in) + " inputs, expected " +
                        std::to_string(expected_in));
      }
      for (const json& row : w) {
        if (row.size() != layer.in) {
          throw Error(ErrorCode::kDimensionMismatch, "ragged weight matrix");
        }
        for (const json& v : row) layer.weights.push_back(v.get<double>());
      }
      layer.bias = jl.at("b").get<std::vector<double>>();
      if (layer.bias.size() != layer.out) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "bias length does not match layer outputs");
      }
      layer.activation = ParseActivation(jl.value("act", "identity"));
      expected_in = layer.out;
      layers.push_back(std::move(layer));
    }
    const auto head_name = j.at("head").get<std::string>();
    MlpOracle::Head head;
    if (head_name == "q") {
      head = MlpOracle::Head::kQ;
    } else if (head_name == "logits") {
      head = MlpOracle::Head::kLogits;
    } else if (head_name == "mean") {
      head = MlpOracle::Head::kMean;
    } else {
      throw Error(ErrorCode::kParseError, "unknown head '" + head_name + "'");
    }
    auto names = j.value("action_names", std::vector<std::string>{});
    return std::make_unique<MlpOracle>(input_dim, std::move(layers), head,
                                       std::move(names),
                                       j.value("name", std::string("mlp")));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("malformed oracle file: ") + e.what());
  }
}

json OracleToJson(const MlpOracle& oracle) {
  json j;
  j["name"] = oracle.name();
  j["input_dim"] = oracle.input_dim();
  json layers = json::array();
  for (const DenseLayer& layer : oracle.layers()) {
    json w = json::array();
    for (std::size_t o = 0; o < layer.out; ++o) {
      w.push_back(std::vector<double>(
          layer.weights.begin() + static_cast<std::ptrdiff_t>(o * layer.in),
          layer.weights.begin() + static_cast<std::ptrdiff_t>((o + 1) * layer.in)));
    }
    layers.push_back({{"w", w}, {"b", layer.bias},
                      {"act", ActivationName(layer.activation)}});
  }
  j["layers"] = layers;
  switch (oracle.head()) {
    case MlpOracle::Head::kQ: j["head"] = "q"; break;
    case MlpOracle::Head::kLogits: j["head"] = "logits"; break;
    case MlpOracle::Head::kMean: j["head"] = "mean"; break;
  }
  j["action_names"] = oracle.action_names();
  return j;
}

std::unique_ptr<MlpOracle> LoadOracle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoError, "cannot open oracle file " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError,
                path.string() + ": " + std::string(e.what()));
  }
  return OracleFromJson(j);
}

// ---------------------------------------------------------------------------
// Log-policy as Q

namespace {

class LogPolicyQOracle final : public Oracle {
 public:
  explicit LogPolicyQOracle(std::shared_ptr<const Oracle> base)
      : base_(std::move(base)) {}

  std::string name() const override { return base_->name() + "+logq"; }
  Action Act(StateView s) const override { return base_->Act(s); }
  bool has_q() const override { return true; }
  std::vector<double> QValues(StateView s) const override {
    return base_->LogPolicy(s);
  }
  bool has_log_policy() const override { return true; }
  std::vector<double> LogPolicy(StateView s) const override {
    return base_->LogPolicy(s);
  }

 private:
  std::shared_ptr<const Oracle> base_;
};

}  // namespace

std::shared_ptr<const Oracle> QFromLogPolicy(std::shared_ptr<const Oracle> base) {
  if (!base->has_log_policy()) {
    throw Error(ErrorCode::kNotStochastic,
                base->name() + " is not a stochastic policy");
  }
  return std::make_shared<LogPolicyQOracle>(std::move(base));
}

// ---------------------------------------------------------------------------
// Scripted oracles

Action ToyPongTracker::Act(StateView s) const {
  const double gap = s[ToyPong::kBallY] - s[ToyPong::kPlayerY];
  if (gap > deadband_) return std::size_t{ToyPong::kUp};
  if (gap < -deadband_) return std::size_t{ToyPong::kDown};
  return std::size_t{ToyPong::kNoop};
}

Action EnemyFollower::Act(StateView s) const {
  const double gap = s[ToyPong::kEnemyY] - s[ToyPong::kPlayerY];
  if (gap > deadband_) return std::size_t{ToyPong::kUp};
  if (gap < -deadband_) return std::size_t{ToyPong::kDown};
  return std::size_t{ToyPong::kNoop};
}

Action CropHeuristic::Act(StateView s) const {
  const double day = s[0];
  for (std::size_t k = 0; k < 3; ++k) {
    if (day >= kDoseDays[k] && day < kDoseDays[k] + 1.0) return k + 1;
  }
  return std::size_t{0};
}

Action CartPolePD::Act(StateView s) const {
  const double u = 0.05 * s[0] + 0.2 * s[1] + 2.0 * s[2] + 0.6 * s[3];
  return std::size_t{u > 0.0 ? 1u : 0u};
}

Action IntegratorPD::Act(StateView s) const {
  return ContinuousAction{std::clamp(-kKp * s[0] - kKd * s[1], -1.0, 1.0)};
}

namespace {

// Layers shared by the ToyPong networks: two ReLU units measuring how far the
// ball is above / below the paddle beyond the deadband, then tanh saturation.
std::vector<DenseLayer> ToyPongTrunk() {
  DenseLayer gap;
  gap.in = 8;
  gap.out = 2;
  gap.weights.assign(16, 0.0);
  gap.weights[ToyPong::kBallY] = 1.0;
  gap.weights[ToyPong::kPlayerY] = -1.0;
  gap.weights[8 + ToyPong::kBallY] = -1.0;
  gap.weights[8 + ToyPong::kPlayerY] = 1.0;
  gap.bias = {-0.01, -0.01};
  gap.activation = Activation::kRelu;

  DenseLayer squash;
  squash.in = 2;
  squash.out = 2;
  squash.weights = {20.0, 0.0, 0.0, 20.0};
  squash.bias = {0.0, 0.0};
  squash.activation = Activation::kTanh;
  return {gap, squash};
}

}  // namespace

std::unique_ptr<MlpOracle> MakeToyPongQNetwork() {
  auto layers = ToyPongTrunk();
  DenseLayer q;
  q.in = 2;
  q.out = 3;
  q.weights = {0.0, 0.0, 1.0, -1.0, -1.0, 1.0};
  q.bias = {1.0, 1.0, 1.0};
  layers.push_back(q);
  return std::make_unique<MlpOracle>(8, std::move(layers), MlpOracle::Head::kQ,
                                     std::vector<std::string>{"NOOP", "UP", "DOWN"},
                                     "toypong-qnet");
}

std::unique_ptr<MlpOracle> MakeToyPongPolicyNetwork() {
  auto layers = ToyPongTrunk();
  DenseLayer logits;
  logits.in = 2;
  logits.out = 3;
  logits.weights = {0.0, 0.0, 5.0, -5.0, -5.0, 5.0};
  logits.bias = {0.0, 0.0, 0.0};
  layers.push_back(logits);
  return std::make_unique<MlpOracle>(
      8, std::move(layers), MlpOracle::Head::kLogits,
      std::vector<std::string>{"NOOP", "UP", "DOWN"}, "toypong-policy");
}

std::unique_ptr<MlpOracle> MakeIntegratorNetwork() {
  DenseLayer layer;
  layer.in = 2;
  layer.out = 1;
  layer.weights = {-IntegratorPD::kKp, -IntegratorPD::kKd};
  layer.bias = {0.0};
  layer.activation = Activation::kTanh;
  return std::make_unique<MlpOracle>(2, std::vector<DenseLayer>{layer},
                                     MlpOracle::Head::kMean,
                                     std::vector<std::string>{},
                                     "integrator-net");
}

std::vector<std::string> BuiltinOracleNames() {
  return {"tracker",       "enemy-follower", "crop-heuristic",
          "cartpole-pd",   "integrator-pd",  "toypong-qnet",
          "toypong-policy", "integrator-net"};
}

std::shared_ptr<const Oracle> ResolveOracle(std::string_view spec) {
  constexpr std::string_view kPrefix = "builtin:";
  if (!spec.starts_with(kPrefix)) {
    return LoadOracle(std::filesystem::path(std::string(spec)));
  }
  const std::string_view name = spec.substr(kPrefix.size());
  if (name == "tracker") return std::make_shared<ToyPongTracker>();
  if (name == "enemy-follower") return std::make_shared<EnemyFollower>();
  if (name == "crop-heuristic") return std::make_shared<CropHeuristic>();
  if (name == "cartpole-pd") return std::make_shared<CartPolePD>();
  if (name == "integrator-pd") return std::make_shared<IntegratorPD>();
  if (name == "toypong-qnet") return MakeToyPongQNetwork();
  if (name == "toypong-policy") return MakeToyPongPolicyNetwork();
  if (name == "integrator-net") return MakeIntegratorNetwork();
  throw Error(ErrorCode::kInvalidArgument,
              "unknown builtin oracle '" + std::string(name) + "'");
}

}  // namespace obdistill
