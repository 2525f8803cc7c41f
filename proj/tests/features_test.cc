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

#include "gtest/gtest.h"
#include "obdistill/envs.h"
#include "obdistill/error.h"
#include "obdistill/features.h"
#include "obdistill/oracle.h"
#include "obdistill/seed.h"

namespace obdistill {
namespace {

TEST(IdleFeaturesTest, ToyPongDropsConstantColumns) {
  ToyPong env;
  const RolloutBatch probe = Rollout(ToyPongTracker(), env, 1000, 0);
  const IdleFeatureReport report = DetectIdleFeatures(probe.states, env.state_spec());
  EXPECT_EQ(report.mask.dropped(),
            (std::vector<std::size_t>{ToyPong::kPlayerX, ToyPong::kEnemyX}));
  EXPECT_EQ(report.mask.size(), 6u);
  EXPECT_FALSE(report.all_idle);
}

TEST(IdleFeaturesTest, NothingIdleGivesIdentity) {
  const StateSpec spec{{"a", "b"}};
  const std::vector<State> probe = {{0.0, 1.0}, {1.0, 0.0}};
  const IdleFeatureReport report = DetectIdleFeatures(probe, spec);
  EXPECT_EQ(report.mask, FeatureMask::Identity(spec.feature_names));
}

TEST(IdleFeaturesTest, AllIdleKeepsEverythingAndWarns) {
  const StateSpec spec{{"a", "b"}};
  const std::vector<State> probe = {{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
  const IdleFeatureReport report = DetectIdleFeatures(probe, spec);
  EXPECT_TRUE(report.all_idle);
  EXPECT_EQ(report.mask.size(), 2u);
}

TEST(IdleFeaturesTest, EmptyProbe) {
  const StateSpec spec{{"a"}};
  for (const std::vector<State>& probe :
       {std::vector<State>{}, std::vector<State>{{1.0}}}) {
    try {
      DetectIdleFeatures(probe, spec);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kEmptyProbe);
    }
  }
}

// Every dropped feature has range <= epsilon, every kept one > epsilon.
TEST(IdleFeaturesProperty, MaskingSoundness) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t p = static_cast<std::size_t>(rng.UniformInt(1, 7));
    const double eps = rng.Bernoulli(0.5) ? 1e-9 : 0.05;
    std::vector<double> spread(p);
    for (double& s : spread) s = rng.Bernoulli(0.4) ? 0.0 : rng.Uniform(0.0, 0.1);
    std::vector<State> probe(static_cast<std::size_t>(rng.UniformInt(2, 20)));
    for (State& s : probe) {
      s.resize(p);
      for (std::size_t f = 0; f < p; ++f) s[f] = 1.0 + spread[f] * rng.Uniform();
    }
    StateSpec spec;
    for (std::size_t f = 0; f < p; ++f) spec.feature_names.push_back("f" + std::to_string(f));
    const IdleFeatureReport report = DetectIdleFeatures(probe, spec, eps);
    for (std::size_t f = 0; f < p; ++f) {
      double lo = probe[0][f], hi = probe[0][f];
      for (const State& s : probe) {
        lo = std::min(lo, s[f]);
        hi = std::max(hi, s[f]);
      }
      EXPECT_DOUBLE_EQ(report.ranges[f], hi - lo);
      const auto& keep = report.mask.keep();
      const bool kept = std::find(keep.begin(), keep.end(), f) != keep.end();
      if (report.all_idle) {
        EXPECT_TRUE(kept);
        EXPECT_LE(hi - lo, eps);
      } else {
        EXPECT_EQ(kept, hi - lo > eps);
      }
    }
  }
}

TEST(ExpandObliqueTest, LowerTriangleOrder) {
  EXPECT_EQ(ExpandOblique(State{1.0, 4.0, 2.5}),
            (std::vector<double>{3.0, 1.5, -1.5}));
  EXPECT_EQ(ObliquePair(0), FeatureRef::Oblique(1, 0));
  EXPECT_EQ(ObliquePair(1), FeatureRef::Oblique(2, 0));
  EXPECT_EQ(ObliquePair(2), FeatureRef::Oblique(2, 1));
  EXPECT_EQ(ObliquePair(3), FeatureRef::Oblique(3, 0));
}

TEST(ExpandObliqueTest, ConstantVectorGivesZeros) {
  for (double v : ExpandOblique(State{2.0, 2.0, 2.0, 2.0})) EXPECT_EQ(v, 0.0);
}

TEST(ExpandObliqueTest, ArityTooSmall) {
  try {
    ExpandOblique(State{1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kArityTooSmall);
  }
}

TEST(ExpandObliqueTest, MaskedToyPongHasFifteenPairs) {
  EXPECT_EQ(ExpandOblique(State(6, 0.5)).size(), 15u);
  EXPECT_EQ(ObliqueCount(6), 15u);
}

TEST(FeatureCountTest, Formula) {
  EXPECT_EQ(FeatureCount(1), 1u);
  EXPECT_EQ(FeatureCount(2), 3u);
  EXPECT_EQ(FeatureCount(6), 21u);
  EXPECT_EQ(FeatureCount(8), 36u);
  EXPECT_EQ(FeatureCount(28), 406u);
}

// Entry k of the expansion is the k-th candidate after the raw features,
// and every pair is antisymmetric.
TEST(ExpandObliqueProperty, MatchesCandidateOrderAndAntisymmetry) {
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t m = static_cast<std::size_t>(rng.UniformInt(2, 9));
    State s(m);
    for (double& v : s) v = rng.Uniform(-5, 5);
    const auto values = ExpandOblique(s);
    const auto candidates = CandidateFeatures(m, true);
    ASSERT_EQ(candidates.size(), FeatureCount(m));
    ASSERT_EQ(values.size(), ObliqueCount(m));
    EXPECT_TRUE(std::is_sorted(candidates.begin(), candidates.end()));
    for (std::size_t k = 0; k < values.size(); ++k) {
      const FeatureRef f = candidates[m + k];
      EXPECT_EQ(values[k], f.Value(s));
      EXPECT_EQ(values[k], -(s[f.second()] - s[f.first()]));
    }
    EXPECT_EQ(CandidateFeatures(m, false).size(), m);
  }
}

TEST(MaskReportTest, Json) {
  const IdleFeatureReport report{FeatureMask({"a", "b", "c"}, {0, 2}), {1.0, 0.0, 2.0}, false};
  const auto j = MaskReportJson(report);
  EXPECT_EQ(j["original_p"], 3);
  EXPECT_EQ(j["kept_count"], 2);
  EXPECT_EQ(j["candidate_features"], 3);
  EXPECT_EQ(j["dropped"][0]["name"], "b");
  EXPECT_EQ(j["ranges"]["c"], 2.0);
}

}  // namespace
}  // namespace obdistill
