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
#include <map>
#include <numeric>
#include <set>

#include "gtest/gtest.h"
#include "obdistill/cart.h"
#include "obdistill/envs.h"
#include "obdistill/error.h"
#include "obdistill/features.h"
#include "obdistill/oracle.h"
#include "test_util.h"

namespace obdistill {
namespace {

using testing::ActionNames;
using testing::DatasetShape;
using testing::RandomDataset;
using testing::RandomShape;

AggregatedDataset Discrete(std::size_t p, std::size_t actions) {
  return AggregatedDataset(FeatureMask::Identity(p),
                           ActionSpec::Discrete(ActionNames(actions)));
}

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

TEST(FitTreeTest, TwoSamples) {
  AggregatedDataset data = Discrete(1, 2);
  data.AppendMasked(State{0.0}, std::size_t{0}, 1.0);
  data.AppendMasked(State{1.0}, std::size_t{1}, 1.0);
  const ObliqueTree tree = FitTree(data, {2, true, false});
  ASSERT_EQ(tree.node_count(), 3u);
  EXPECT_EQ(tree.node(0).feature, FeatureRef::Raw(0));
  EXPECT_DOUBLE_EQ(tree.node(0).threshold, 0.5);
  EXPECT_EQ(DiscreteIndex(tree.Predict(State{0.0})), 0u);
  EXPECT_EQ(DiscreteIndex(tree.Predict(State{1.0})), 1u);

  const auto features = CandidateFeatures(1, true);
  const SplitCandidate best = BestSplitExhaustive(data, features);
  EXPECT_EQ(best.feature, FeatureRef::Raw(0));
  EXPECT_DOUBLE_EQ(best.threshold, 0.5);
}

// Labels are the sign of s1 - s0 while each coordinate alone spans the
// same range for both labels.
AggregatedDataset SignOfDifference(std::size_t n, std::uint64_t seed) {
  AggregatedDataset data = Discrete(2, 2);
  Rng rng(seed);
  for (std::size_t k = 0; k < n; ++k) {
    const double base = rng.Uniform(-1.0, 1.0);
    const double gap = rng.Uniform(0.05, 0.5) * (k % 2 == 0 ? 1.0 : -1.0);
    data.AppendMasked(State{base, base + gap}, std::size_t{gap > 0 ? 1u : 0u}, 1.0);
  }
  return data;
}

TEST(FitTreeTest, ObliqueSplitDominates) {
  const AggregatedDataset data = SignOfDifference(50, 1);
  const auto features = CandidateFeatures(2, true);
  const SplitCandidate best = BestSplitExhaustive(data, features);
  EXPECT_EQ(best.feature, FeatureRef::Oblique(1, 0));
  // The oblique split separates the labels; no raw split comes close.
  const auto raw = CandidateFeatures(2, false);
  EXPECT_GT(best.impurity_decrease,
            BestSplitExhaustive(data, raw).impurity_decrease + 0.1);

  const ObliqueTree tree = FitTree(data, {2, true, false});
  EXPECT_EQ(tree.node(0).feature, FeatureRef::Oblique(1, 0));
  EXPECT_LT(std::fabs(tree.node(0).threshold), 0.05);
  EXPECT_EQ(DiscreteIndex(tree.Predict(State{0.0, 2.0})), 1u);
  EXPECT_DOUBLE_EQ(tree.TrainingImpurity(), 0.0);
}

TEST(FitTreeTest, BudgetBoundsSize) {
  Rng rng(2);
  DatasetShape shape;
  shape.n = 200;
  shape.p = 4;
  const AggregatedDataset data = RandomDataset(rng, shape);
  const ObliqueTree tree = FitTree(data, {8, true, false});
  EXPECT_LE(tree.node_count(), 15u);
  EXPECT_LE(tree.depth(), 7u);
}

TEST(FitTreeTest, Errors) {
  const AggregatedDataset empty = Discrete(2, 2);
  EXPECT_EQ(CodeOf([&] { FitTree(empty, {}); }), ErrorCode::kEmptyDataset);
  AggregatedDataset data = Discrete(1, 2);
  data.AppendMasked(State{0.0}, std::size_t{0}, 1.0);
  EXPECT_EQ(CodeOf([&] { FitTree(data, {1, true, false}); }),
            ErrorCode::kInvalidArgument);
}

TEST(FitTreeTest, ZeroWeightsFallBackToUniform) {
  AggregatedDataset data = Discrete(1, 2);
  data.AppendMasked(State{0.0}, std::size_t{0}, 0.0);
  data.AppendMasked(State{1.0}, std::size_t{1}, 0.0);
  FitReport report;
  const ObliqueTree tree = FitTree(data, {2, true, false}, &report);
  EXPECT_TRUE(report.uniform_weight_fallback);
  EXPECT_EQ(tree.leaf_count(), 2u);
}

TEST(FitTreeTest, ZeroWeightRowsDoNotJustifySplits) {
  AggregatedDataset data = Discrete(1, 2);
  data.AppendMasked(State{0.0}, std::size_t{0}, 1.0);
  data.AppendMasked(State{1.0}, std::size_t{0}, 1.0);
  data.AppendMasked(State{2.0}, std::size_t{1}, 0.0);
  const ObliqueTree tree = FitTree(data, {4, true, false});
  EXPECT_EQ(tree.leaf_count(), 1u);
  EXPECT_EQ(DiscreteIndex(tree.Predict(State{2.0})), 0u);
}

TEST(FitTreeTest, WeightedMajorityTiesGoToLowestAction) {
  AggregatedDataset data = Discrete(1, 3);
  data.AppendMasked(State{0.0}, std::size_t{2}, 1.0);
  data.AppendMasked(State{0.0}, std::size_t{1}, 1.0);
  const ObliqueTree tree = FitTree(data, {2, true, false});
  ASSERT_EQ(tree.leaf_count(), 1u);
  EXPECT_EQ(DiscreteIndex(tree.Predict(State{0.0})), 1u);

  AggregatedDataset weighted = Discrete(1, 3);
  weighted.AppendMasked(State{0.0}, std::size_t{0}, 1.0);
  weighted.AppendMasked(State{0.0}, std::size_t{0}, 1.0);
  weighted.AppendMasked(State{0.0}, std::size_t{2}, 5.0);
  EXPECT_EQ(DiscreteIndex(FitTree(weighted, {}).Predict(State{0.0})), 2u);
}

TEST(FitTreeTest, RegressionLeavesPredictWeightedMean) {
  AggregatedDataset data(FeatureMask::Identity(1),
                         ActionSpec::Continuous({-5, -5}, {5, 5}));
  data.AppendMasked(State{0.0}, ContinuousAction{1.0, 2.0}, 1.0);
  data.AppendMasked(State{0.1}, ContinuousAction{3.0, 0.0}, 3.0);
  data.AppendMasked(State{1.0}, ContinuousAction{-1.0, -1.0}, 1.0);
  data.AppendMasked(State{1.1}, ContinuousAction{-1.0, -1.0}, 1.0);
  const ObliqueTree tree = FitTree(data, {2, true, false});
  EXPECT_EQ(tree.task(), TreeTask::kRegress);
  ASSERT_EQ(tree.leaf_count(), 2u);
  EXPECT_DOUBLE_EQ(tree.node(0).threshold, 0.55);
  const auto left = ContinuousValues(tree.Predict(State{0.0}));
  EXPECT_DOUBLE_EQ(left[0], 2.5);
  EXPECT_DOUBLE_EQ(left[1], 0.5);
  const auto right = ContinuousValues(tree.Predict(State{5.0}));
  EXPECT_DOUBLE_EQ(right[0], -1.0);
}

TEST(PredictTest, BoundaryRoutesLeft) {
  AggregatedDataset data = Discrete(1, 2);
  data.AppendMasked(State{0.0}, std::size_t{0}, 1.0);
  data.AppendMasked(State{1.0}, std::size_t{1}, 1.0);
  const ObliqueTree tree = FitTree(data, {});
  EXPECT_EQ(DiscreteIndex(tree.Predict(State{0.5})), 0u);
  EXPECT_EQ(DiscreteIndex(tree.Predict(State{std::nextafter(0.5, 1.0)})), 1u);
  EXPECT_EQ(CodeOf([&] { tree.Predict(State{0.5, 1.0}); }),
            ErrorCode::kArityMismatch);
}

TEST(PredictTest, SingleLeafAlwaysSameAction) {
  AggregatedDataset data = Discrete(2, 3);
  for (int k = 0; k < 5; ++k) {
    data.AppendMasked(State{double(k), double(-k)}, std::size_t{2}, 1.0);
  }
  const ObliqueTree tree = FitTree(data, {});
  ASSERT_EQ(tree.node_count(), 1u);
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    EXPECT_EQ(DiscreteIndex(tree.Predict(State{rng.Uniform(-9, 9), rng.Uniform(-9, 9)})), 2u);
  }
}

TEST(ExhaustiveTest, Errors) {
  const auto features = CandidateFeatures(2, true);
  EXPECT_EQ(CodeOf([&] { BestSplitExhaustive(Discrete(2, 2), features); }),
            ErrorCode::kEmptyDataset);
  AggregatedDataset pure = Discrete(2, 2);
  pure.AppendMasked(State{0.0, 1.0}, std::size_t{1}, 1.0);
  pure.AppendMasked(State{3.0, 1.0}, std::size_t{1}, 1.0);
  EXPECT_EQ(CodeOf([&] { BestSplitExhaustive(pure, features); }),
            ErrorCode::kNoUsefulSplit);
}

TEST(ImportanceTest, SingleSplit) {
  const AggregatedDataset data = SignOfDifference(20, 3);
  const ObliqueTree tree = FitTree(data, {2, true, false});
  const auto importance = FeatureImportance(tree);
  ASSERT_EQ(importance.size(), 1u);
  EXPECT_DOUBLE_EQ(importance.at(FeatureRef::Oblique(1, 0)), 1.0);
}

TEST(ImportanceTest, SingleLeafTree) {
  AggregatedDataset data = Discrete(1, 2);
  data.AppendMasked(State{0.0}, std::size_t{1}, 1.0);
  const ObliqueTree tree = FitTree(data, {});
  EXPECT_EQ(CodeOf([&] { FeatureImportance(tree); }), ErrorCode::kSingleLeafTree);
}

TEST(ImportanceTest, ToyPongTreeFavorsBallMinusPlayer) {
  ToyPong env;
  ToyPongTracker tracker;
  const RolloutBatch batch = Rollout(tracker, env, 5000, 4);
  const FeatureMask mask = DetectIdleFeatures(batch.states, env.state_spec()).mask;
  AggregatedDataset data(mask, env.action_spec());
  for (std::size_t k = 0; k < batch.states.size(); ++k) {
    data.Append({batch.states[k], batch.actions[k], 1.0});
  }
  const ObliqueTree tree = FitTree(data, {8, true, false});
  const auto importance = FeatureImportance(tree);
  const auto top = std::max_element(
      importance.begin(), importance.end(),
      [](const auto& a, const auto& b) { return a.second < b.second; });
  EXPECT_EQ(FeatureName(top->first, mask), "ball.y - player.y");
}

TEST(TreePolicyTest, AppliesMask) {
  const FeatureMask mask({"const", "x"}, {1});
  AggregatedDataset data(mask, ActionSpec::Discrete({"lo", "hi"}));
  data.Append({{7.0, 0.0}, std::size_t{0}, 1.0});
  data.Append({{7.0, 1.0}, std::size_t{1}, 1.0});
  const TreePolicy policy(std::make_shared<const ObliqueTree>(FitTree(data, {})),
                          mask, data.action_spec());
  EXPECT_EQ(DiscreteIndex(policy.Act(State{7.0, 0.9})), 1u);
  EXPECT_EQ(DiscreteIndex(policy.Act(State{7.0, 0.1})), 0u);
  EXPECT_EQ(CodeOf([&] {
              TreePolicy(policy.shared_tree(), mask,
                         ActionSpec::Discrete({"a", "b", "c"}));
            }),
            ErrorCode::kSpecMismatch);
}

TEST(TreeJsonTest, RoundTripIsStable) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const AggregatedDataset data = RandomDataset(rng, RandomShape(rng, 64, 5));
    const TreePolicy policy(
        std::make_shared<const ObliqueTree>(FitTree(data, {6, true, false})),
        data.mask(), data.action_spec());
    const auto j = TreePolicyToJson(policy);
    const TreePolicy copy = TreePolicyFromJson(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(TreePolicyToJson(copy).dump(), j.dump());
    for (std::size_t k = 0; k < data.size(); ++k) {
      EXPECT_EQ(copy.tree().Predict(data.row(k)), policy.tree().Predict(data.row(k)));
    }
  }
}

TEST(TreeJsonTest, MalformedTreesAreParseErrors) {
  AggregatedDataset data = Discrete(1, 2);
  data.AppendMasked(State{0.0}, std::size_t{0}, 1.0);
  data.AppendMasked(State{1.0}, std::size_t{1}, 1.0);
  const TreePolicy policy(std::make_shared<const ObliqueTree>(FitTree(data, {})),
                          data.mask(), data.action_spec());
  auto j = TreePolicyToJson(policy);
  auto bad_child = j;
  bad_child["nodes"][0]["left"] = 7;
  EXPECT_EQ(CodeOf([&] { TreePolicyFromJson(bad_child); }), ErrorCode::kParseError);
  auto bad_kind = j;
  bad_kind["nodes"][1]["kind"] = "branch";
  EXPECT_EQ(CodeOf([&] { TreePolicyFromJson(bad_kind); }), ErrorCode::kParseError);
  auto no_format = j;
  no_format.erase("format");
  EXPECT_EQ(CodeOf([&] { TreePolicyFromJson(no_format); }), ErrorCode::kParseError);
}

// ---------------------------------------------------------------------------
// Properties over random datasets.

TEST(CartProperty, NodeCountLaw) {
  Rng rng(100);
  for (int trial = 0; trial < 200; ++trial) {
    const AggregatedDataset data = RandomDataset(rng, RandomShape(rng, 120, 5));
    const std::size_t k = static_cast<std::size_t>(rng.UniformInt(2, 20));
    const ObliqueTree tree = FitTree(data, {k, rng.Bernoulli(0.7), false});
    EXPECT_EQ(tree.leaf_count(), tree.internal_count() + 1);
    EXPECT_EQ(tree.node_count(), 2 * tree.leaf_count() - 1);
    EXPECT_LE(tree.leaf_count(), k);
    EXPECT_LE(tree.depth(), k - 1);
  }
}

TEST(CartProperty, MonotoneBudget) {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const AggregatedDataset data = RandomDataset(rng, RandomShape(rng, 120, 5));
    const bool oblique = rng.Bernoulli(0.5);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t k = 2; k <= 12; ++k) {
      const double impurity = FitTree(data, {k, oblique, false}).TrainingImpurity();
      EXPECT_LE(impurity, previous + 1e-12);
      previous = impurity;
    }
  }
}

TEST(CartProperty, WeightScalingInvariance) {
  Rng rng(102);
  for (int trial = 0; trial < 100; ++trial) {
    const AggregatedDataset data = RandomDataset(rng, RandomShape(rng, 64, 4));
    const double c = rng.Bernoulli(0.5) ? rng.Uniform(0.1, 10.0)
                                        : std::ldexp(1.0, static_cast<int>(rng.UniformInt(-8, 8)));
    AggregatedDataset scaled(data.mask(), data.action_spec());
    for (std::size_t k = 0; k < data.size(); ++k) {
      const Action a = data.action_spec().is_discrete()
                           ? Action{data.label(k)}
                           : Action{ContinuousAction(data.target(k).begin(),
                                                     data.target(k).end())};
      scaled.AppendMasked(data.row(k), a, data.weight(k) * c);
    }
    const ObliqueTree a = FitTree(data, {8, true, false});
    const ObliqueTree b = FitTree(scaled, {8, true, false});
    ASSERT_EQ(a.node_count(), b.node_count()) << "trial " << trial;
    for (std::size_t i = 0; i < a.node_count(); ++i) {
      EXPECT_EQ(a.node(i).is_leaf, b.node(i).is_leaf);
      EXPECT_EQ(a.node(i).feature, b.node(i).feature);
      EXPECT_EQ(a.node(i).threshold, b.node(i).threshold);
    }
  }
}

TEST(CartProperty, PureNodesAreNeverSplit) {
  Rng rng(103);
  for (int trial = 0; trial < 100; ++trial) {
    const AggregatedDataset data = RandomDataset(rng, RandomShape(rng, 80, 4));
    FitReport report;
    FitTree(data, {16, true, true}, &report);
    for (const SplitTrace& t : report.trace) {
      std::set<std::vector<double>> labels;
      for (std::size_t row : t.samples) {
        if (data.weight(row) <= 0.0 && !report.uniform_weight_fallback) continue;
        if (data.action_spec().is_discrete()) {
          labels.insert({static_cast<double>(data.label(row))});
        } else {
          labels.insert(std::vector<double>(data.target(row).begin(),
                                            data.target(row).end()));
        }
      }
      EXPECT_GT(labels.size(), 1u);
    }
  }
}

TEST(CartProperty, RootMatchesExhaustiveSearch) {
  Rng rng(104);
  for (int trial = 0; trial < 200; ++trial) {
    const AggregatedDataset data = RandomDataset(rng, RandomShape(rng, 64, 5));
    if (!(data.total_weight() > 0.0)) continue;
    const bool oblique = rng.Bernoulli(0.7);
    const ObliqueTree tree = FitTree(data, {2, oblique, false});
    const auto features = CandidateFeatures(data.arity(), oblique);
    try {
      const SplitCandidate best = BestSplitExhaustive(data, features);
      ASSERT_FALSE(tree.node(0).is_leaf);
      EXPECT_EQ(tree.node(0).feature, best.feature);
      EXPECT_EQ(tree.node(0).threshold, best.threshold);
      EXPECT_NEAR(tree.node(0).impurity_decrease, best.impurity_decrease, 1e-9);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kNoUsefulSplit);
      EXPECT_TRUE(tree.node(0).is_leaf);
    }
  }
}

TEST(CartProperty, ThresholdsAreMidpointsOfObservedValues) {
  Rng rng(105);
  for (int trial = 0; trial < 100; ++trial) {
    const AggregatedDataset data = RandomDataset(rng, RandomShape(rng, 64, 4));
    const ObliqueTree tree = FitTree(data, {8, true, false});
    // Values of the split feature among the rows reaching each node.
    std::vector<std::set<double>> values(tree.node_count());
    for (std::size_t k = 0; k < data.size(); ++k) {
      std::size_t i = 0;
      while (!tree.node(i).is_leaf) {
        const TreeNode& n = tree.node(i);
        values[i].insert(data.Value(k, n.feature));
        i = static_cast<std::size_t>(data.Value(k, n.feature) <= n.threshold ? n.left
                                                                              : n.right);
      }
    }
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
      const TreeNode& n = tree.node(i);
      if (n.is_leaf) continue;
      const std::set<double>& node_values = values[i];
      bool found = false;
      for (auto it = node_values.begin(); std::next(it) != node_values.end(); ++it) {
        if (MidpointThreshold(*it, *std::next(it)) == n.threshold) found = true;
      }
      EXPECT_TRUE(found);
      EXPECT_GE(n.impurity_decrease, 0.0);
    }
  }
}

TEST(CartProperty, ImportancesSumToOne) {
  Rng rng(106);
  int checked = 0;
  while (checked < 100) {
    const AggregatedDataset data = RandomDataset(rng, RandomShape(rng, 64, 5));
    const ObliqueTree tree = FitTree(data, {8, true, false});
    if (tree.internal_count() == 0) continue;
    double total = 0.0;
    for (const auto& [f, v] : FeatureImportance(tree)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      total += v;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
    ++checked;
  }
}

TEST(MidpointTest, StaysBelowUpperValue) {
  EXPECT_EQ(MidpointThreshold(0.0, 1.0), 0.5);
  const double a = 1.0;
  const double b = std::nextafter(a, 2.0);
  EXPECT_EQ(MidpointThreshold(a, b), a);
  EXPECT_LT(MidpointThreshold(-1e308, 1e308), 1e308);
}

}  // namespace
}  // namespace obdistill
