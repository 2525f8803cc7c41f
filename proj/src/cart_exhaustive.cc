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

// Reference split search. Deliberately naive: each threshold re-routes every
// sample and recomputes both sides from scratch.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "obdistill/cart.h"
#include "obdistill/error.h"

namespace obdistill {
namespace {

// Weight x impurity of the rows in `side`.
double SideImpurity(const AggregatedDataset& data,
                    const std::vector<std::size_t>& side,
                    const std::vector<double>& weights) {
  double weight = 0.0;
  for (std::size_t row : side) weight += weights[row];
  if (!(weight > 0.0)) return 0.0;
  const ActionSpec& spec = data.action_spec();
  if (spec.is_discrete()) {
    std::vector<double> per_class(spec.num_actions(), 0.0);
    for (std::size_t row : side) per_class[data.label(row)] += weights[row];
    double gini = 1.0;
    for (double c : per_class) gini -= (c / weight) * (c / weight);
    return weight * gini;
  }
  double total = 0.0;
  for (std::size_t d = 0; d < spec.dim(); ++d) {
    double mean = 0.0;
    for (std::size_t row : side) mean += weights[row] * data.target(row)[d];
    mean /= weight;
    for (std::size_t row : side) {
      const double dy = data.target(row)[d] - mean;
      total += weights[row] * dy * dy;
    }
  }
  return total;
}

}  // namespace

SplitCandidate BestSplitExhaustive(const AggregatedDataset& data,
                                   std::span<const FeatureRef> features,
                                   std::span<const std::size_t> samples) {
  if (data.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no data to split");
  }
  std::vector<std::size_t> rows(samples.begin(), samples.end());
  if (rows.empty()) {
    rows.resize(data.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
  }
  std::vector<double> weights = data.weights();
  double total = data.total_weight();
  if (!(total > 0.0)) {
    std::fill(weights.begin(), weights.end(), 1.0);
    total = static_cast<double>(weights.size());
  }
  const double parent = SideImpurity(data, rows, weights);

  std::vector<SplitCandidate> all;
  for (const FeatureRef& f : features) {
    std::vector<double> values;
    for (std::size_t row : rows) values.push_back(data.Value(row, f));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
      const double threshold = MidpointThreshold(values[k], values[k + 1]);
      std::vector<std::size_t> left, right;
      bool left_positive = false, right_positive = false;
      for (std::size_t row : rows) {
        if (data.Value(row, f) <= threshold) {
          left.push_back(row);
          left_positive = left_positive || weights[row] > 0.0;
        } else {
          right.push_back(row);
          right_positive = right_positive || weights[row] > 0.0;
        }
      }
      if (!left_positive || !right_positive) continue;
      SplitCandidate c;
      c.feature = f;
      c.threshold = threshold;
      c.impurity_decrease = (parent - SideImpurity(data, left, weights) -
                             SideImpurity(data, right, weights)) /
                            total;
      for (std::size_t row : left) c.left_weight += weights[row];
      for (std::size_t row : right) c.right_weight += weights[row];
      all.push_back(c);
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  for (const SplitCandidate& c : all) best = std::max(best, c.impurity_decrease);
  if (all.empty() || !(best > kSplitTolerance)) {
    throw Error(ErrorCode::kNoUsefulSplit, "no split reduces impurity");
  }
  // `all` is already in (feature, threshold) order.
  for (const SplitCandidate& c : all) {
    if (c.impurity_decrease >= best - kSplitTolerance) return c;
  }
  throw Error(ErrorCode::kNoUsefulSplit, "no split reduces impurity");
}

}  // namespace obdistill
