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

// Weighted CART over raw and oblique (two-feature difference) splits, grown
// best-first under a leaf budget.

#ifndef OBDISTILL_CART_H_
#define OBDISTILL_CART_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "obdistill/core.h"
#include "obdistill/envs.h"

namespace obdistill {

enum class TreeTask { kClassify, kRegress };

// Gains closer than this to the best gain are ties; a split is only made if
// its gain exceeds it.
inline constexpr double kSplitTolerance = 1e-12;

struct TreeNode {
  bool is_leaf = true;
  FeatureRef feature;
  double threshold = 0.0;
  std::int32_t left = -1;
  std::int32_t right = -1;

  double weight = 0.0;    // fraction of the training weight reaching the node
  double impurity = 0.0;  // Gini (classify) or summed variance (regress)
  // Weighted impurity decrease of the split, normalized by the total training
  // weight. Zero for leaves.
  double impurity_decrease = 0.0;
  std::size_t samples = 0;

  std::size_t label = 0;      // classify: predicted class
  std::vector<double> value;  // classify: class weights; regress: mean target
};

// Binary tree stored as a preorder arena; node 0 is the root. Routing goes
// left iff feature(s) <= threshold.
class ObliqueTree {
 public:
  // Validates that the arena is a preorder binary tree whose features fit
  // `arity` and whose leaves carry `outputs` values.
  ObliqueTree(TreeTask task, std::size_t arity, std::size_t outputs,
              std::vector<TreeNode> nodes);

  TreeTask task() const { return task_; }
  std::size_t arity() const { return arity_; }
  std::size_t outputs() const { return outputs_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(std::size_t i) const { return nodes_[i]; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;
  std::size_t internal_count() const { return node_count() - leaf_count(); }
  // Edges on the longest root-to-leaf path.
  std::size_t depth() const;

  std::size_t LeafIndex(StateView masked) const;
  // Throws kArityMismatch.
  Action Predict(StateView masked) const;
  // Sum over leaves of weight x impurity.
  double TrainingImpurity() const;

 private:
  TreeTask task_;
  std::size_t arity_;
  std::size_t outputs_;
  std::vector<TreeNode> nodes_;
};

// Threshold between consecutive distinct sorted values a < b: their midpoint,
// or a itself when the midpoint rounds up to b.
inline double MidpointThreshold(double a, double b) {
  const double mid = a + (b - a) * 0.5;
  return mid < b ? mid : a;
}

struct SplitCandidate {
  FeatureRef feature;
  double threshold = 0.0;
  double impurity_decrease = 0.0;
  double left_weight = 0.0;
  double right_weight = 0.0;
};

struct FitOptions {
  std::size_t max_leaves = 8;
  bool oblique = true;
  // Record every split made, for checking against the exhaustive search.
  bool trace = false;
};

struct SplitTrace {
  std::vector<std::size_t> samples;  // dataset rows reaching the split node
  SplitCandidate split;
};

struct FitReport {
  bool uniform_weight_fallback = false;
  std::vector<SplitTrace> trace;
};

// Best-first growth: repeatedly split the frontier leaf with the largest
// weighted impurity decrease until max_leaves leaves exist or no split gains
// more than kSplitTolerance. Classification for discrete action specs,
// regression otherwise. Candidate thresholds are midpoints between
// consecutive distinct values; gains within kSplitTolerance of the best are
// broken by FeatureRef order, then by lower threshold. If every weight is
// zero, uniform weights are used instead.
// Throws kEmptyDataset, kInvalidArgument (max_leaves < 2).
ObliqueTree FitTree(const AggregatedDataset& data, const FitOptions& options,
                    FitReport* report = nullptr);

// Brute-force reference for a single split: every feature in `features`,
// every midpoint threshold, partitions evaluated directly by the routing rule.
// `samples` defaults to all rows. Throws kEmptyDataset, kNoUsefulSplit.
SplitCandidate BestSplitExhaustive(const AggregatedDataset& data,
                                   std::span<const FeatureRef> features,
                                   std::span<const std::size_t> samples = {});

// Normalized mean decrease in impurity per feature; sums to 1.
// Throws kSingleLeafTree.
std::map<FeatureRef, double> FeatureImportance(const ObliqueTree& tree);

// A fitted tree together with the mask and action space it was trained with;
// acts on unmasked states.
class TreePolicy final : public Policy {
 public:
  TreePolicy(std::shared_ptr<const ObliqueTree> tree, FeatureMask mask,
             ActionSpec action_spec);

  Action Act(StateView s) const override;

  const ObliqueTree& tree() const { return *tree_; }
  std::shared_ptr<const ObliqueTree> shared_tree() const { return tree_; }
  const FeatureMask& mask() const { return mask_; }
  const ActionSpec& action_spec() const { return action_spec_; }

 private:
  std::shared_ptr<const ObliqueTree> tree_;
  FeatureMask mask_;
  ActionSpec action_spec_;
};

nlohmann::json ActionSpecToJson(const ActionSpec& spec);
ActionSpec ActionSpecFromJson(const nlohmann::json& j);
nlohmann::json FeatureRefToJson(const FeatureRef& f);
FeatureRef FeatureRefFromJson(const nlohmann::json& j);

// Tree file: {"format", "task", "arity", "outputs", "action", "mask",
// "nodes": [preorder {kind: leaf|split, feature: {raw: i} | {oblique: [i, j]},
// threshold, action, ...}]}. Feature indices are in masked space.
nlohmann::json TreePolicyToJson(const TreePolicy& policy);
TreePolicy TreePolicyFromJson(const nlohmann::json& j);

// Human-readable name of a masked feature reference, e.g. "ball.y - player.y".
std::string FeatureName(const FeatureRef& f, const FeatureMask& mask);

// [{"feature", "ref", "importance"}] in FeatureRef order.
nlohmann::json ImportanceJson(const ObliqueTree& tree, const FeatureMask& mask);

}  // namespace obdistill

#endif  // OBDISTILL_CART_H_
