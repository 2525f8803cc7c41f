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

#include "obdistill/cart.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

#include "obdistill/error.h"
#include "obdistill/features.h"
#include "obdistill/oracle.h"

namespace obdistill {

// ---------------------------------------------------------------------------
// ObliqueTree

ObliqueTree::ObliqueTree(TreeTask task, std::size_t arity, std::size_t outputs,
                         std::vector<TreeNode> nodes)
    : task_(task), arity_(arity), outputs_(outputs), nodes_(std::move(nodes)) {
  if (nodes_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "tree has no nodes");
  }
  // Walk in preorder; every node must be visited exactly once, in order.
  std::vector<std::size_t> stack = {0};
  std::size_t expected = 0;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    if (i != expected) {
      throw Error(ErrorCode::kInvalidArgument,
                  "tree nodes are not a preorder binary tree");
    }
    ++expected;
    const TreeNode& n = nodes_[i];
    if (n.is_leaf) {
      if (n.value.size() != outputs_ ||
          (task_ == TreeTask::kClassify && n.label >= outputs_)) {
        throw Error(ErrorCode::kInvalidArgument, "malformed tree leaf");
      }
      continue;
    }
    if (n.feature.RequiredArity() > arity_) {
      throw Error(ErrorCode::kInvalidArgument,
                  "tree split references a feature beyond the arity");
    }
    if (n.left < 0 || n.right < 0 ||
        static_cast<std::size_t>(n.left) >= nodes_.size() ||
        static_cast<std::size_t>(n.right) >= nodes_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "tree child out of range");
    }
    stack.push_back(static_cast<std::size_t>(n.right));
    stack.push_back(static_cast<std::size_t>(n.left));
  }
  if (expected != nodes_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "tree has unreachable nodes");
  }
}

std::size_t ObliqueTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf; }));
}

std::size_t ObliqueTree::depth() const {
  std::vector<std::size_t> depth(nodes_.size(), 0);
  std::size_t deepest = 0;
  // Preorder: parents precede children.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    deepest = std::max(deepest, depth[i]);
    if (!nodes_[i].is_leaf) {
      depth[static_cast<std::size_t>(nodes_[i].left)] = depth[i] + 1;
      depth[static_cast<std::size_t>(nodes_[i].right)] = depth[i] + 1;
    }
  }
  return deepest;
}

std::size_t ObliqueTree::LeafIndex(StateView masked) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf) {
    const TreeNode& n = nodes_[i];
    i = static_cast<std::size_t>(n.feature.Value(masked) <= n.threshold ? n.left
                                                                        : n.right);
  }
  return i;
}

Action ObliqueTree::Predict(StateView masked) const {
  if (masked.size() != arity_) {
    throw Error(ErrorCode::kArityMismatch,
                "tree expects " + std::to_string(arity_) + " features, got " +
                    std::to_string(masked.size()));
  }
  const TreeNode& leaf = nodes_[LeafIndex(masked)];
  if (task_ == TreeTask::kClassify) return leaf.label;
  return ContinuousAction(leaf.value);
}

double ObliqueTree::TrainingImpurity() const {
  double total = 0.0;
  for (const TreeNode& n : nodes_) {
    if (n.is_leaf) total += n.weight * n.impurity;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Growth

namespace {

struct Candidate {
  double threshold;
  double gain;
  double left_weight;
  double right_weight;
};

// Label statistics of a set of rows.
struct LabelStats {
  double weight = 0.0;
  std::size_t positive = 0;  // rows with weight > 0
  // classify: per-class weight. regress: per-dim sum of w * (y - center).
  std::vector<double> first;
  // regress: per-dim sum of w * (y - center)^2.
  std::vector<double> second;
};

class Grower {
 public:
  Grower(const AggregatedDataset& data, const FitOptions& options,
         std::vector<double> weights)
      : data_(data),
        options_(options),
        weights_(std::move(weights)),
        task_(data.action_spec().is_discrete() ? TreeTask::kClassify
                                               : TreeTask::kRegress),
        outputs_(task_ == TreeTask::kClassify ? data.action_spec().num_actions()
                                              : data.action_spec().dim()),
        features_(CandidateFeatures(data.arity(), options.oblique)) {
    total_weight_ = 0.0;
    for (double w : weights_) total_weight_ += w;
  }

  ObliqueTree Grow(FitReport* report);

 private:
  struct BuildNode {
    std::vector<std::size_t> samples;
    LabelStats stats;
    std::vector<double> center;  // regress: weighted mean target
    std::optional<SplitCandidate> best;
    bool is_leaf = true;
    FeatureRef feature;
    double threshold = 0.0;
    double gain = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
  };

  BuildNode MakeNode(std::vector<std::size_t> samples) const;
  std::vector<double> CenterOf(std::span<const std::size_t> samples) const;
  void Accumulate(LabelStats& stats, std::size_t row,
                  std::span<const double> center, double sign) const;
  // Weight x impurity of a statistics block.
  double WeightedImpurity(double weight, std::span<const double> first,
                          std::span<const double> second) const;
  bool IsPure(const BuildNode& node) const;
  std::optional<SplitCandidate> FindBestSplit(const BuildNode& node) const;
  void ScanFeature(const BuildNode& node, const FeatureRef& feature,
                   std::vector<std::pair<double, std::size_t>>& column,
                   std::vector<Candidate>& keep, double& feature_best) const;
  TreeNode Finish(const BuildNode& node) const;

  const AggregatedDataset& data_;
  const FitOptions& options_;
  std::vector<double> weights_;
  TreeTask task_;
  std::size_t outputs_;
  std::vector<FeatureRef> features_;
  double total_weight_ = 0.0;
};

std::vector<double> Grower::CenterOf(std::span<const std::size_t> samples) const {
  const std::size_t dim = outputs_;
  std::vector<double> center(dim, 0.0);
  double weight = 0.0;
  for (std::size_t row : samples) weight += weights_[row];
  const bool uniform = !(weight > 0.0);
  for (std::size_t row : samples) {
    const double w = uniform ? 1.0 : weights_[row];
    const StateView y = data_.target(row);
    for (std::size_t d = 0; d < dim; ++d) center[d] += w * y[d];
  }
  const double denom = uniform ? static_cast<double>(samples.size()) : weight;
  for (double& c : center) c /= denom;
  return center;
}

void Grower::Accumulate(LabelStats& stats, std::size_t row,
                        std::span<const double> center, double sign) const {
  const double w = weights_[row];
  stats.weight += sign * w;
  if (w > 0.0) {
    if (sign > 0.0) {
      ++stats.positive;
    } else {
      --stats.positive;
    }
  }
  if (task_ == TreeTask::kClassify) {
    stats.first[data_.label(row)] += sign * w;
    return;
  }
  const StateView y = data_.target(row);
  for (std::size_t d = 0; d < outputs_; ++d) {
    const double dy = y[d] - center[d];
    stats.first[d] += sign * w * dy;
    stats.second[d] += sign * w * dy * dy;
  }
}

double Grower::WeightedImpurity(double weight, std::span<const double> first,
                                std::span<const double> second) const {
  if (!(weight > 0.0)) return 0.0;
  double total = 0.0;
  if (task_ == TreeTask::kClassify) {
    double sq = 0.0;
    for (double c : first) sq += c * c;
    total = weight - sq / weight;
  } else {
    for (std::size_t d = 0; d < outputs_; ++d) {
      total += second[d] - first[d] * first[d] / weight;
    }
  }
  return std::max(total, 0.0);
}

Grower::BuildNode Grower::MakeNode(std::vector<std::size_t> samples) const {
  BuildNode node;
  node.samples = std::move(samples);
  node.stats.first.assign(outputs_, 0.0);
  if (task_ == TreeTask::kRegress) {
    node.center = CenterOf(node.samples);
    node.stats.second.assign(outputs_, 0.0);
  }
  for (std::size_t row : node.samples) {
    Accumulate(node.stats, row, node.center, 1.0);
  }
  if (!IsPure(node)) node.best = FindBestSplit(node);
  return node;
}

bool Grower::IsPure(const BuildNode& node) const {
  if (task_ == TreeTask::kClassify) {
    std::size_t classes = 0;
    for (double c : node.stats.first) {
      if (c > 0.0) ++classes;
    }
    return classes <= 1;
  }
  std::optional<StateView> reference;
  for (std::size_t row : node.samples) {
    if (!(weights_[row] > 0.0)) continue;
    const StateView y = data_.target(row);
    if (!reference) {
      reference = y;
    } else if (!std::equal(y.begin(), y.end(), reference->begin())) {
      return false;
    }
  }
  return true;
}

void Grower::ScanFeature(const BuildNode& node, const FeatureRef& feature,
                         std::vector<std::pair<double, std::size_t>>& column,
                         std::vector<Candidate>& keep,
                         double& feature_best) const {
  column.clear();
  for (std::size_t row : node.samples) {
    column.emplace_back(data_.Value(row, feature), row);
  }
  std::sort(column.begin(), column.end());

  const double parent =
      WeightedImpurity(node.stats.weight, node.stats.first, node.stats.second);
  LabelStats left;
  left.first.assign(outputs_, 0.0);
  if (task_ == TreeTask::kRegress) left.second.assign(outputs_, 0.0);
  std::vector<double> right_first(outputs_), right_second(outputs_);

  feature_best = -std::numeric_limits<double>::infinity();
  keep.clear();
  for (std::size_t k = 0; k + 1 < column.size(); ++k) {
    Accumulate(left, column[k].second, node.center, 1.0);
    if (!(column[k].first < column[k + 1].first)) continue;
    const std::size_t right_positive = node.stats.positive - left.positive;
    if (left.positive == 0 || right_positive == 0) continue;

    const double right_weight = node.stats.weight - left.weight;
    for (std::size_t d = 0; d < outputs_; ++d) {
      right_first[d] = node.stats.first[d] - left.first[d];
      if (task_ == TreeTask::kRegress) {
        right_second[d] = node.stats.second[d] - left.second[d];
      }
    }
    const double gain =
        (parent - WeightedImpurity(left.weight, left.first, left.second) -
         WeightedImpurity(right_weight, right_first, right_second)) /
        total_weight_;
    if (gain < feature_best - kSplitTolerance) continue;
    if (gain > feature_best) {
      feature_best = gain;
      std::erase_if(keep, [&](const Candidate& c) {
        return c.gain < feature_best - kSplitTolerance;
      });
    }
    keep.push_back({MidpointThreshold(column[k].first, column[k + 1].first),
                    gain, left.weight, right_weight});
  }
}

std::optional<SplitCandidate> Grower::FindBestSplit(const BuildNode& node) const {
  // Per feature, the thresholds within tolerance of that feature's best gain,
  // in ascending order. The winner is the first candidate, in (feature,
  // threshold) order, within tolerance of the overall best.
  std::vector<std::vector<Candidate>> kept(features_.size());
  std::vector<double> feature_best(features_.size());
  std::vector<std::pair<double, std::size_t>> column;
  column.reserve(node.samples.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < features_.size(); ++f) {
    ScanFeature(node, features_[f], column, kept[f], feature_best[f]);
    best = std::max(best, feature_best[f]);
  }
  if (!(best > kSplitTolerance)) return std::nullopt;
  for (std::size_t f = 0; f < features_.size(); ++f) {
    for (const Candidate& c : kept[f]) {
      if (c.gain >= best - kSplitTolerance) {
        return SplitCandidate{features_[f], c.threshold, c.gain, c.left_weight,
                              c.right_weight};
      }
    }
  }
  return std::nullopt;
}

TreeNode Grower::Finish(const BuildNode& node) const {
  TreeNode out;
  out.is_leaf = node.is_leaf;
  out.feature = node.feature;
  out.threshold = node.threshold;
  out.samples = node.samples.size();
  out.weight = total_weight_ > 0.0 ? node.stats.weight / total_weight_ : 0.0;
  const double weighted =
      WeightedImpurity(node.stats.weight, node.stats.first, node.stats.second);
  out.impurity = node.stats.weight > 0.0 ? weighted / node.stats.weight : 0.0;
  out.impurity_decrease = node.is_leaf ? 0.0 : node.gain;
  if (task_ == TreeTask::kClassify) {
    out.value = node.stats.first;
    out.label = ArgMax(out.value);
  } else {
    // Weighted mean = center + first / weight.
    out.value = node.center;
    if (node.stats.weight > 0.0) {
      for (std::size_t d = 0; d < outputs_; ++d) {
        out.value[d] += node.stats.first[d] / node.stats.weight;
      }
    }
  }
  return out;
}

ObliqueTree Grower::Grow(FitReport* report) {
  std::vector<std::size_t> all(data_.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<BuildNode> nodes;
  nodes.push_back(MakeNode(std::move(all)));
  std::vector<std::size_t> frontier = {0};

  while (frontier.size() < options_.max_leaves) {
    // Largest gain wins; the earliest-created leaf wins ties.
    std::size_t pick = frontier.size();
    for (std::size_t f = 0; f < frontier.size(); ++f) {
      const BuildNode& n = nodes[frontier[f]];
      if (!n.best) continue;
      if (pick == frontier.size() ||
          n.best->impurity_decrease >
              nodes[frontier[pick]].best->impurity_decrease) {
        pick = f;
      }
    }
    if (pick == frontier.size()) break;

    const std::size_t id = frontier[pick];
    const SplitCandidate split = *nodes[id].best;
    std::vector<std::size_t> left, right;
    for (std::size_t row : nodes[id].samples) {
      (data_.Value(row, split.feature) <= split.threshold ? left : right)
          .push_back(row);
    }
    if (report != nullptr && options_.trace) {
      report->trace.push_back({nodes[id].samples, split});
    }
    BuildNode left_node = MakeNode(std::move(left));
    BuildNode right_node = MakeNode(std::move(right));
    BuildNode& parent = nodes[id];
    parent.is_leaf = false;
    parent.feature = split.feature;
    parent.threshold = split.threshold;
    parent.gain = split.impurity_decrease;
    parent.left = nodes.size();
    parent.right = nodes.size() + 1;
    nodes.push_back(std::move(left_node));
    nodes.push_back(std::move(right_node));

    frontier.erase(frontier.begin() + static_cast<std::ptrdiff_t>(pick));
    frontier.push_back(nodes.size() - 2);
    frontier.push_back(nodes.size() - 1);
    // Keep creation order so ties go to the oldest leaf.
    std::sort(frontier.begin(), frontier.end());
  }

  // Renumber into preorder.
  std::vector<TreeNode> arena;
  arena.reserve(nodes.size());
  struct Pending {
    std::size_t build;
    std::int32_t parent;
    bool is_left;
  };
  std::vector<Pending> stack = {{0, -1, false}};
  while (!stack.empty()) {
    const Pending item = stack.back();
    stack.pop_back();
    const auto index = static_cast<std::int32_t>(arena.size());
    arena.push_back(Finish(nodes[item.build]));
    if (item.parent >= 0) {
      auto& parent = arena[static_cast<std::size_t>(item.parent)];
      (item.is_left ? parent.left : parent.right) = index;
    }
    const BuildNode& n = nodes[item.build];
    if (!n.is_leaf) {
      stack.push_back({n.right, index, false});
      stack.push_back({n.left, index, true});
    }
  }
  return ObliqueTree(task_, data_.arity(), outputs_, std::move(arena));
}

}  // namespace

ObliqueTree FitTree(const AggregatedDataset& data, const FitOptions& options,
                    FitReport* report) {
  if (data.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "cannot fit a tree on no data");
  }
  if (options.max_leaves < 2) {
    throw Error(ErrorCode::kInvalidArgument, "max leaves must be >= 2");
  }
  std::vector<double> weights = data.weights();
  if (!(data.total_weight() > 0.0)) {
    std::fill(weights.begin(), weights.end(), 1.0);
    if (report != nullptr) report->uniform_weight_fallback = true;
  }
  Grower grower(data, options, std::move(weights));
  return grower.Grow(report);
}

// ---------------------------------------------------------------------------
// Importances

std::map<FeatureRef, double> FeatureImportance(const ObliqueTree& tree) {
  if (tree.internal_count() == 0) {
    throw Error(ErrorCode::kSingleLeafTree,
                "feature importance needs at least one split");
  }
  std::map<FeatureRef, double> importance;
  double total = 0.0;
  for (const TreeNode& n : tree.nodes()) {
    if (n.is_leaf) continue;
    importance[n.feature] += n.impurity_decrease;
    total += n.impurity_decrease;
  }
  for (auto& [feature, value] : importance) {
    value = total > 0.0 ? value / total
                        : 1.0 / static_cast<double>(importance.size());
  }
  return importance;
}

// ---------------------------------------------------------------------------
// TreePolicy

TreePolicy::TreePolicy(std::shared_ptr<const ObliqueTree> tree,
                       FeatureMask mask, ActionSpec action_spec)
    : tree_(std::move(tree)),
      mask_(std::move(mask)),
      action_spec_(std::move(action_spec)) {
  if (tree_->arity() != mask_.size()) {
    throw Error(ErrorCode::kArityMismatch,
                "tree arity does not match the feature mask");
  }
  const bool classify = tree_->task() == TreeTask::kClassify;
  if (classify != action_spec_.is_discrete() ||
      tree_->outputs() != (classify ? action_spec_.num_actions()
                                    : action_spec_.dim())) {
    throw Error(ErrorCode::kSpecMismatch,
                "tree outputs do not match the action space");
  }
}

Action TreePolicy::Act(StateView s) const {
  thread_local State masked;
  masked.resize(mask_.size());
  mask_.ApplyInto(s, masked);
  return tree_->Predict(masked);
}

std::string FeatureName(const FeatureRef& f, const FeatureMask& mask) {
  if (!f.is_oblique()) return mask.kept_name(f.first());
  return mask.kept_name(f.first()) + " - " + mask.kept_name(f.second());
}

}  // namespace obdistill
