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
#include <limits>

#include "gtest/gtest.h"
#include "obdistill/core.h"
#include "obdistill/error.h"
#include "obdistill/features.h"
#include "obdistill/seed.h"

namespace obdistill {
namespace {

template <typename Fn>
ErrorCode CodeOf(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(ValidateStateTest, AcceptsWellFormed) {
  const State s = {0.1, -2.0, 3.5, 0.0};
  EXPECT_NO_THROW(ValidateState(s, 4));
}

TEST(ValidateStateTest, ArityMismatch) {
  const State s = {0.1, -2.0, 3.5, 0.0};
  EXPECT_EQ(CodeOf([&] { ValidateState(s, 3); }), ErrorCode::kArityMismatch);
}

TEST(ValidateStateTest, NonFinite) {
  const State s = {0.1, std::numeric_limits<double>::quiet_NaN(), 3.5, 0.0};
  EXPECT_EQ(CodeOf([&] { ValidateState(s, 4); }), ErrorCode::kNonFiniteValue);
  const State inf = {std::numeric_limits<double>::infinity()};
  EXPECT_EQ(CodeOf([&] { ValidateState(inf, 1); }), ErrorCode::kNonFiniteValue);
}

TEST(ActionSpecTest, DiscreteNeedsTwoActions) {
  EXPECT_EQ(CodeOf([] { ActionSpec::Discrete({"only"}); }),
            ErrorCode::kInvalidArgument);
  const ActionSpec spec = ActionSpec::Discrete({"NOOP", "UP", "DOWN"});
  EXPECT_EQ(spec.num_actions(), 3u);
  EXPECT_EQ(spec.FindAction("UP"), 1u);
  EXPECT_FALSE(spec.FindAction("LEFT").has_value());
  EXPECT_NO_THROW(spec.ValidateAction(Action{std::size_t{2}}));
  EXPECT_EQ(CodeOf([&] { spec.ValidateAction(Action{std::size_t{3}}); }),
            ErrorCode::kSpecMismatch);
  EXPECT_EQ(CodeOf([&] { spec.ValidateAction(ContinuousAction{0.0}); }),
            ErrorCode::kSpecMismatch);
}

TEST(ActionSpecTest, ContinuousBoundsOrdered) {
  EXPECT_EQ(CodeOf([] { ActionSpec::Continuous({1.0}, {1.0}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { ActionSpec::Continuous({}, {}); }),
            ErrorCode::kInvalidArgument);
  const ActionSpec spec = ActionSpec::Continuous({-1.0, 0.0}, {1.0, 2.0});
  EXPECT_EQ(spec.dim(), 2u);
  EXPECT_NO_THROW(spec.ValidateAction(ContinuousAction{0.5, 1.0}));
  EXPECT_EQ(CodeOf([&] { spec.ValidateAction(ContinuousAction{0.5}); }),
            ErrorCode::kSpecMismatch);
  EXPECT_EQ(CodeOf([&] {
              spec.ValidateAction(ContinuousAction{
                  0.5, std::numeric_limits<double>::infinity()});
            }),
            ErrorCode::kNonFiniteValue);
}

TEST(TransitionTest, WeightMustBeNonNegative) {
  const ActionSpec spec = ActionSpec::Discrete({"a", "b"});
  Transition t{{1.0, 2.0}, std::size_t{1}, -0.5};
  EXPECT_EQ(CodeOf([&] { ValidateTransition(t, 2, spec); }),
            ErrorCode::kInvalidArgument);
  t.weight = 0.0;
  EXPECT_NO_THROW(ValidateTransition(t, 2, spec));
}

TEST(FeatureRefTest, ObliqueIsCanonical) {
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = 0; b < 6; ++b) {
      if (a == b) continue;
      const FeatureRef x = FeatureRef::Oblique(a, b);
      const FeatureRef y = FeatureRef::Oblique(b, a);
      EXPECT_EQ(x, y);
      EXPECT_GT(x.first(), x.second());
    }
  }
  EXPECT_EQ(CodeOf([] { FeatureRef::Oblique(2, 2); }),
            ErrorCode::kInvalidArgument);
}

TEST(FeatureRefTest, ObliqueValueUsesCanonicalSign) {
  const State s = {1.0, 4.0, 2.5};
  EXPECT_DOUBLE_EQ(FeatureRef::Oblique(0, 1).Value(s), 3.0);  // s1 - s0
  EXPECT_DOUBLE_EQ(FeatureRef::Oblique(2, 1).Value(s), -1.5);
  EXPECT_DOUBLE_EQ(FeatureRef::Raw(2).Value(s), 2.5);
}

TEST(FeatureRefTest, RawOrdersBeforeOblique) {
  EXPECT_LT(FeatureRef::Raw(5), FeatureRef::Oblique(1, 0));
  EXPECT_LT(FeatureRef::Raw(0), FeatureRef::Raw(1));
  EXPECT_LT(FeatureRef::Oblique(1, 0), FeatureRef::Oblique(2, 0));
  EXPECT_LT(FeatureRef::Oblique(2, 0), FeatureRef::Oblique(2, 1));
}

TEST(FeatureMaskTest, ApplyAndDropped) {
  const FeatureMask mask({"a", "b", "c", "d"}, {1, 3});
  EXPECT_EQ(mask.size(), 2u);
  EXPECT_EQ(mask.dropped(), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(mask.kept_name(1), "d");
  EXPECT_EQ(mask.Apply(State{1, 2, 3, 4}), (State{2, 4}));
  EXPECT_EQ(CodeOf([&] { mask.Apply(State{1, 2}); }), ErrorCode::kArityMismatch);
}

TEST(FeatureMaskTest, RejectsBadKeepLists) {
  EXPECT_EQ(CodeOf([] { FeatureMask({"a", "b"}, {}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { FeatureMask({"a", "b"}, {1, 0}); }),
            ErrorCode::kInvalidArgument);
  EXPECT_EQ(CodeOf([] { FeatureMask({"a", "b"}, {2}); }),
            ErrorCode::kInvalidArgument);
}

TEST(AggregatedDatasetTest, StoresMaskedRowsAndObliqueValues) {
  const FeatureMask mask({"x", "y", "z", "w"}, {0, 1, 3});
  AggregatedDataset data(mask, ActionSpec::Discrete({"a", "b"}));
  data.Append({{1.0, 4.0, 9.0, 2.5}, std::size_t{1}, 2.0});
  data.Append({{0.0, 0.0, 9.0, 0.0}, std::size_t{0}, 0.5});
  ASSERT_EQ(data.size(), 2u);
  EXPECT_EQ(State(data.row(0).begin(), data.row(0).end()), (State{1.0, 4.0, 2.5}));
  EXPECT_EQ(data.ObliqueValues(0), (std::vector<double>{3.0, 1.5, -1.5}));
  EXPECT_EQ(data.ObliqueValues(0), ExpandOblique(data.row(0)));
  EXPECT_EQ(data.label(0), 1u);
  EXPECT_DOUBLE_EQ(data.total_weight(), 2.5);
}

TEST(AggregatedDatasetTest, RejectsMismatchedTransitions) {
  AggregatedDataset data(FeatureMask::Identity(2), ActionSpec::Discrete({"a", "b"}));
  EXPECT_EQ(CodeOf([&] { data.Append({{1.0}, std::size_t{0}, 1.0}); }),
            ErrorCode::kArityMismatch);
  EXPECT_EQ(CodeOf([&] { data.Append({{1.0, 2.0}, std::size_t{5}, 1.0}); }),
            ErrorCode::kSpecMismatch);
  EXPECT_TRUE(data.empty());
}

TEST(AggregatedDatasetTest, ContinuousTargets) {
  AggregatedDataset data(FeatureMask::Identity(1),
                         ActionSpec::Continuous({-1.0, -1.0}, {1.0, 1.0}));
  data.Append({{0.5}, ContinuousAction{0.25, -0.75}, 1.0});
  EXPECT_EQ(State(data.target(0).begin(), data.target(0).end()),
            (State{0.25, -0.75}));
}

TEST(DistillConfigTest, DefaultsFollowThePaper) {
  const DistillConfig config;
  EXPECT_EQ(config.iterations, 10u);
  EXPECT_EQ(config.transitions, 10000u);
  EXPECT_EQ(config.eval_episodes, 10u);
  EXPECT_NO_THROW(config.Validate());
}

TEST(DistillConfigTest, RejectsOutOfRange) {
  DistillConfig config;
  config.max_leaves = 1;
  EXPECT_EQ(CodeOf([&] { config.Validate(); }), ErrorCode::kInvalidArgument);
  config = DistillConfig{};
  config.iterations = 0;
  EXPECT_EQ(CodeOf([&] { config.Validate(); }), ErrorCode::kInvalidArgument);
  config = DistillConfig{};
  config.transitions = 0;
  EXPECT_EQ(CodeOf([&] { config.Validate(); }), ErrorCode::kInvalidArgument);
  config = DistillConfig{};
  config.eval_episodes = 0;
  EXPECT_EQ(CodeOf([&] { config.Validate(); }), ErrorCode::kInvalidArgument);
}

TEST(SubroutineTest, ParseRoundTrip) {
  for (Subroutine s : {Subroutine::kAuto, Subroutine::kDagger, Subroutine::kQDagger}) {
    EXPECT_EQ(ParseSubroutine(ToString(s)), s);
  }
  EXPECT_FALSE(ParseSubroutine("viper").has_value());
}

TEST(SeedTest, DeriveSeedSeparatesStreams) {
  EXPECT_EQ(DeriveSeed(7, 1, 2), DeriveSeed(7, 1, 2));
  EXPECT_NE(DeriveSeed(7, 1, 2), DeriveSeed(7, 2, 1));
  EXPECT_NE(DeriveSeed(7, 1, 2), DeriveSeed(8, 1, 2));
  EXPECT_NE(DeriveSeed(0, kProbeStream), DeriveSeed(0, kEvaluationStream));
}

TEST(SeedTest, RngIsReproducibleAndInRange) {
  Rng a(42), b(42);
  for (int k = 0; k < 1000; ++k) {
    const double u = a.Uniform();
    EXPECT_EQ(u, b.Uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    const auto i = a.UniformInt(-3, 3);
    EXPECT_EQ(i, b.UniformInt(-3, 3));
    EXPECT_GE(i, -3);
    EXPECT_LE(i, 3);
  }
}

}  // namespace
}  // namespace obdistill
