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
#include <filesystem>
#include <fstream>

#include "gtest/gtest.h"
#include "obdistill/envs.h"
#include "obdistill/error.h"
#include "obdistill/oracle.h"
#include "obdistill/seed.h"

namespace obdistill {
namespace {

using nlohmann::json;

ErrorCode LoadError(const json& j) {
  try {
    OracleFromJson(j);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "oracle loaded";
  return ErrorCode::kInvalidArgument;
}

TEST(MlpOracleTest, IdentityNetwork) {
  const json j = {{"input_dim", 2},
                  {"layers", {{{"w", {{1, 0}, {0, 1}}}, {"b", {0, 0}}, {"act", "identity"}}}},
                  {"head", "q"},
                  {"action_names", {"a", "b"}}};
  auto oracle = OracleFromJson(j);
  const State s = {3.0, 1.0};
  EXPECT_EQ(oracle->QValues(s), (std::vector<double>{3.0, 1.0}));
  EXPECT_EQ(DiscreteIndex(oracle->Act(s)), 0u);
  EXPECT_TRUE(oracle->has_q());
  EXPECT_FALSE(oracle->has_log_policy());
}

TEST(MlpOracleTest, DimensionMismatch) {
  const json j = {{"input_dim", 2},
                  {"layers",
                   {{{"w", {{1, 0}, {0, 1}}}, {"b", {0, 0}}},
                    {{"w", {{1, 0, 0}}}, {"b", {0}}}}},
                  {"head", "q"}};
  EXPECT_EQ(LoadError(j), ErrorCode::kDimensionMismatch);
  const json bias = {{"input_dim", 1},
                     {"layers", {{{"w", {{1}}}, {"b", {0, 0}}}}},
                     {"head", "mean"}};
  EXPECT_EQ(LoadError(bias), ErrorCode::kDimensionMismatch);
}

TEST(MlpOracleTest, UnknownActivation) {
  const json j = {{"input_dim", 1},
                  {"layers", {{{"w", {{1}, {2}}}, {"b", {0, 0}}, {"act", "gelu"}}}},
                  {"head", "q"}};
  EXPECT_EQ(LoadError(j), ErrorCode::kUnknownActivation);
}

TEST(MlpOracleTest, MalformedFile) {
  EXPECT_EQ(LoadError(json{{"layers", json::array()}}), ErrorCode::kParseError);
  const auto path = std::filesystem::temp_directory_path() / "obdistill_bad.json";
  std::ofstream(path) << "{not json";
  try {
    LoadOracle(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
  }
  std::filesystem::remove(path);
}

// Second forward-pass implementation, straight from the JSON arrays.
std::vector<double> ReferenceForward(const json& j, std::vector<double> x) {
  for (const json& layer : j["layers"]) {
    std::vector<double> y;
    for (std::size_t o = 0; o < layer["w"].size(); ++o) {
      double acc = layer["b"][o].get<double>();
      for (std::size_t i = 0; i < x.size(); ++i) {
        acc += layer["w"][o][i].get<double>() * x[i];
      }
      const std::string act = layer["act"];
      if (act == "tanh") acc = std::tanh(acc);
      if (act == "relu") acc = acc > 0 ? acc : 0;
      y.push_back(acc);
    }
    x = y;
  }
  return x;
}

TEST(MlpOracleTest, TwoLayerTanhMatchesReference) {
  const json j = {{"input_dim", 3},
                  {"layers",
                   {{{"w", {{0.5, -1.0, 0.25}, {1.5, 0.0, -0.75}}},
                     {"b", {0.1, -0.2}},
                     {"act", "tanh"}},
                    {{"w", {{1.0, -2.0}, {0.3, 0.7}, {-1.1, 0.4}}},
                     {"b", {0.0, 0.05, -0.05}},
                     {"act", "tanh"}}}},
                  {"head", "q"},
                  {"action_names", {"x", "y", "z"}}};
  auto oracle = OracleFromJson(j);
  Rng rng(5);
  for (int k = 0; k < 200; ++k) {
    const State s = {rng.Uniform(-2, 2), rng.Uniform(-2, 2), rng.Uniform(-2, 2)};
    const auto got = oracle->Forward(s);
    const auto want = ReferenceForward(j, s);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
  }
}

TEST(MlpOracleTest, JsonRoundTripIsExact) {
  for (auto& oracle : {MakeToyPongQNetwork(), MakeToyPongPolicyNetwork(),
                       MakeIntegratorNetwork()}) {
    const json j = OracleToJson(*oracle);
    auto copy = OracleFromJson(j);
    EXPECT_EQ(OracleToJson(*copy), j);
    const State s(oracle->input_dim(), 0.3);
    EXPECT_EQ(copy->Forward(s), oracle->Forward(s));
  }
}

TEST(MlpOracleTest, ArityChecked) {
  auto oracle = MakeToyPongQNetwork();
  try {
    oracle->Act(State{1.0, 2.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kArityMismatch);
  }
}

TEST(LogPolicyTest, UniformLogits) {
  const json j = {{"input_dim", 1},
                  {"layers", {{{"w", {{0}, {0}, {0}}}, {"b", {0, 0, 0}}}}},
                  {"head", "logits"},
                  {"action_names", {"a", "b", "c"}}};
  auto q = QFromLogPolicy(OracleFromJson(j));
  EXPECT_TRUE(q->has_q());
  for (double v : q->QValues(State{1.0})) EXPECT_NEAR(v, -std::log(3.0), 1e-12);
}

TEST(LogPolicyTest, TwoActions) {
  const json j = {{"input_dim", 1},
                  {"layers", {{{"w", {{0}, {0}}}, {"b", {2, 0}}}}},
                  {"head", "logits"},
                  {"action_names", {"a", "b"}}};
  auto q = QFromLogPolicy(OracleFromJson(j));
  const auto values = q->QValues(State{0.0});
  EXPECT_NEAR(values[0], -0.1269280110, 1e-9);
  EXPECT_NEAR(values[1], -2.1269280110, 1e-9);
  EXPECT_EQ(DiscreteIndex(q->Act(State{0.0})), 0u);
}

TEST(LogPolicyTest, ScriptedOracleIsNotStochastic) {
  try {
    QFromLogPolicy(std::make_shared<ToyPongTracker>());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotStochastic);
  }
}

TEST(ScriptedOracleTest, TrackerDeadband) {
  ToyPongTracker tracker;
  State s(8, 0.0);
  s[ToyPong::kPlayerY] = 0.5;
  s[ToyPong::kBallY] = 0.55;
  EXPECT_EQ(DiscreteIndex(tracker.Act(s)), std::size_t{ToyPong::kUp});
  s[ToyPong::kBallY] = 0.45;
  EXPECT_EQ(DiscreteIndex(tracker.Act(s)), std::size_t{ToyPong::kDown});
  s[ToyPong::kBallY] = 0.505;
  EXPECT_EQ(DiscreteIndex(tracker.Act(s)), std::size_t{ToyPong::kNoop});
}

TEST(ScriptedOracleTest, CropHeuristicDosesOncePerSeasonInOrder) {
  CropSim env;
  CropHeuristic heuristic;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const RolloutBatch batch = Rollout(heuristic, env, 160, seed);
    std::vector<std::size_t> doses;
    for (const Action& a : batch.actions) {
      if (DiscreteIndex(a) != 0) doses.push_back(DiscreteIndex(a));
    }
    EXPECT_EQ(doses, (std::vector<std::size_t>{1, 2, 3}));
  }
}

TEST(ScriptedOracleTest, IntegratorPdClamps) {
  IntegratorPD pd;
  EXPECT_DOUBLE_EQ(ContinuousValues(pd.Act(State{5.0, 0.0}))[0], -1.0);
  EXPECT_DOUBLE_EQ(ContinuousValues(pd.Act(State{0.1, 0.0}))[0], -0.1);
}

// argmax of the Q-values is the action for every q-bearing oracle.
TEST(QOracleProperty, GreedyMatchesArgMax) {
  auto qnet = MakeToyPongQNetwork();
  auto wrapped = QFromLogPolicy(MakeToyPongPolicyNetwork());
  Rng rng(77);
  for (int k = 0; k < 10000; ++k) {
    State s(8);
    for (double& v : s) v = rng.Uniform(0.0, 1.0);
    s[ToyPong::kBallDx] = rng.Uniform(-0.03, 0.03);
    s[ToyPong::kBallDy] = rng.Uniform(-0.03, 0.03);
    EXPECT_EQ(DiscreteIndex(qnet->Act(s)), ArgMax(qnet->QValues(s)));
    EXPECT_EQ(DiscreteIndex(wrapped->Act(s)), ArgMax(wrapped->QValues(s)));
  }
}

TEST(QOracleProperty, ToyPongNetworksMatchTrackerAwayFromBoundaries) {
  auto qnet = MakeToyPongQNetwork();
  auto policy = MakeToyPongPolicyNetwork();
  ToyPongTracker tracker;
  Rng rng(78);
  for (int k = 0; k < 10000; ++k) {
    State s(8);
    for (double& v : s) v = rng.Uniform(0.0, 1.0);
    const double gap = std::fabs(s[ToyPong::kBallY] - s[ToyPong::kPlayerY]);
    if (std::fabs(gap - 0.01) < 1e-6) continue;
    EXPECT_EQ(qnet->Act(s), tracker.Act(s));
    EXPECT_EQ(policy->Act(s), tracker.Act(s));
  }
}

TEST(ResolveOracleTest, BuiltinsAndErrors) {
  for (const std::string& name : BuiltinOracleNames()) {
    EXPECT_EQ(ResolveOracle("builtin:" + name)->name().empty(), false);
  }
  try {
    ResolveOracle("builtin:nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
  }
  try {
    ResolveOracle("/nonexistent/oracle.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIoError);
  }
}

}  // namespace
}  // namespace obdistill
