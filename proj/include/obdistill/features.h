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

// Idle-feature masking and oblique (pairwise difference) feature expansion.

#ifndef OBDISTILL_FEATURES_H_
#define OBDISTILL_FEATURES_H_

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"
#include "obdistill/core.h"

namespace obdistill {

struct IdleFeatureReport {
  FeatureMask mask;
  std::vector<double> ranges;  // max - min per original feature on the probe
  bool all_idle = false;       // nothing varied; the mask keeps everything
};

// Keeps the features whose range over the probe exceeds `epsilon`.
// Throws kEmptyProbe on fewer than two states.
IdleFeatureReport DetectIdleFeatures(std::span<const State> probe,
                                     const StateSpec& spec,
                                     double epsilon = 1e-9);

// Number of lower-triangle pairs, m(m-1)/2.
constexpr std::size_t ObliqueCount(std::size_t m) {
  return m < 2 ? 0 : m * (m - 1) / 2;
}
// Raw plus oblique candidates, m + m(m-1)/2.
constexpr std::size_t FeatureCount(std::size_t m) {
  return m + ObliqueCount(m);
}

// Pairwise differences in row-major lower-triangle order:
//   (1,0), (2,0), (2,1), (3,0), ...  entry (i, j) = s_i - s_j.
// Throws kArityTooSmall for fewer than two features.
std::vector<double> ExpandOblique(StateView masked);

// The k-th pair of the enumeration above.
FeatureRef ObliquePair(std::size_t k);

// Raw features 0..m-1 followed, if enabled, by the oblique pairs in the same
// order as ExpandOblique. This is also FeatureRef's ordering.
std::vector<FeatureRef> CandidateFeatures(std::size_t m, bool oblique);

// {"original_p", "kept", "dropped", "ranges"}.
nlohmann::json MaskReportJson(const IdleFeatureReport& report);

}  // namespace obdistill

#endif  // OBDISTILL_FEATURES_H_
