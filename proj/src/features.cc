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

#include "obdistill/features.h"

#include <algorithm>
#include <cmath>

#include "obdistill/error.h"

namespace obdistill {

IdleFeatureReport DetectIdleFeatures(std::span<const State> probe,
                                     const StateSpec& spec, double epsilon) {
  if (probe.size() < 2) {
    throw Error(ErrorCode::kEmptyProbe,
                "idle-feature detection needs at least 2 probe states");
  }
  const std::size_t p = spec.size();
  std::vector<double> lo(p, 0.0), hi(p, 0.0);
  for (std::size_t n = 0; n < probe.size(); ++n) {
    ValidateState(probe[n], p);
    for (std::size_t i = 0; i < p; ++i) {
      const double v = probe[n][i];
      if (n == 0 || v < lo[i]) lo[i] = v;
      if (n == 0 || v > hi[i]) hi[i] = v;
    }
  }
  IdleFeatureReport report;
  report.ranges.resize(p);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < p; ++i) {
    report.ranges[i] = hi[i] - lo[i];
    if (report.ranges[i] > epsilon) keep.push_back(i);
  }
  if (keep.empty()) {
    report.all_idle = true;
    report.mask = FeatureMask::Identity(spec.feature_names);
  } else {
    report.mask = FeatureMask(spec.feature_names, std::move(keep));
  }
  return report;
}

std::vector<double> ExpandOblique(StateView masked) {
  const std::size_t m = masked.size();
  if (m < 2) {
    throw Error(ErrorCode::kArityTooSmall,
                "oblique expansion needs at least 2 features");
  }
  std::vector<double> out;
  out.reserve(ObliqueCount(m));
  for (std::size_t i = 1; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) out.push_back(masked[i] - masked[j]);
  }
  return out;
}

FeatureRef ObliquePair(std::size_t k) {
  // Row i holds i pairs and starts at offset i(i-1)/2.
  auto i = static_cast<std::size_t>(
      (1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(k))) / 2.0);
  while (i * (i - 1) / 2 > k) --i;
  while ((i + 1) * i / 2 <= k) ++i;
  return FeatureRef::Oblique(i, k - i * (i - 1) / 2);
}

std::vector<FeatureRef> CandidateFeatures(std::size_t m, bool oblique) {
  std::vector<FeatureRef> out;
  out.reserve(oblique ? FeatureCount(m) : m);
  for (std::size_t i = 0; i < m; ++i) out.push_back(FeatureRef::Raw(i));
  if (oblique) {
    for (std::size_t i = 1; i < m; ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        out.push_back(FeatureRef::Oblique(i, j));
      }
    }
  }
  return out;
}

nlohmann::json MaskReportJson(const IdleFeatureReport& report) {
  const FeatureMask& mask = report.mask;
  nlohmann::json kept = nlohmann::json::array();
  for (std::size_t i : mask.keep()) {
    kept.push_back({{"index", i}, {"name", mask.original_names()[i]}});
  }
  nlohmann::json dropped = nlohmann::json::array();
  for (std::size_t i : mask.dropped()) {
    dropped.push_back({{"index", i}, {"name", mask.original_names()[i]}});
  }
  nlohmann::json ranges = nlohmann::json::object();
  for (std::size_t i = 0; i < mask.original_p(); ++i) {
    ranges[mask.original_names()[i]] = report.ranges[i];
  }
  return {{"original_p", mask.original_p()},
          {"kept_count", mask.size()},
          {"candidate_features", FeatureCount(mask.size())},
          {"original_candidate_features", FeatureCount(mask.original_p())},
          {"kept", kept},
          {"dropped", dropped},
          {"ranges", ranges},
          {"all_idle_warning", report.all_idle}};
}

}  // namespace obdistill
