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

#include "obdistill/core.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "obdistill/error.h"

namespace obdistill {

std::string_view ToString(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kArityMismatch: return "ArityMismatch";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kEnvironmentFault: return "EnvironmentFault";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kUnknownActivation: return "UnknownActivation";
    case ErrorCode::kNotStochastic: return "NotStochastic";
    case ErrorCode::kEmptyProbe: return "EmptyProbe";
    case ErrorCode::kArityTooSmall: return "ArityTooSmall";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kNoUsefulSplit: return "NoUsefulSplit";
    case ErrorCode::kSingleLeafTree: return "SingleLeafTree";
    case ErrorCode::kQUnavailable: return "QUnavailable";
    case ErrorCode::kSpecMismatch: return "SpecMismatch";
    case ErrorCode::kNameArityMismatch: return "NameArityMismatch";
    case ErrorCode::kSyntaxError: return "SyntaxError";
    case ErrorCode::kUnknownFeatureName: return "UnknownFeatureName";
    case ErrorCode::kUnknownActionName: return "UnknownActionName";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

std::optional<std::size_t> StateSpec::Find(std::string_view name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i) {
    if (feature_names[i] == name) return i;
  }
  return std::nullopt;
}

void ValidateState(StateView values, std::size_t expected_p) {
  if (values.size() != expected_p || expected_p == 0) {
    throw Error(ErrorCode::kArityMismatch,
                "state has " + std::to_string(values.size()) +
                    " values, expected " + std::to_string(expected_p));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw Error(ErrorCode::kNonFiniteValue,
                  "state value " + std::to_string(i) + " is not finite");
    }
  }
}

std::size_t DiscreteIndex(const Action& a) {
  if (const auto* index = std::get_if<std::size_t>(&a)) return *index;
  throw Error(ErrorCode::kSpecMismatch, "expected a discrete action");
}

const ContinuousAction& ContinuousValues(const Action& a) {
  if (const auto* v = std::get_if<ContinuousAction>(&a)) return *v;
  throw Error(ErrorCode::kSpecMismatch, "expected a continuous action");
}

ActionSpec ActionSpec::Discrete(std::vector<std::string> names) {
  if (names.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument,
                "discrete action space needs at least 2 actions");
  }
  ActionSpec spec;
  spec.kind_ = Kind::kDiscrete;
  spec.names_ = std::move(names);
  return spec;
}

ActionSpec ActionSpec::Continuous(std::vector<double> low,
                                  std::vector<double> high) {
  if (low.empty() || low.size() != high.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "continuous action bounds must be nonempty and paired");
  }
  for (std::size_t d = 0; d < low.size(); ++d) {
    if (!(low[d] < high[d])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "continuous action bound lo must be < hi");
    }
  }
  ActionSpec spec;
  spec.kind_ = Kind::kContinuous;
  spec.low_ = std::move(low);
  spec.high_ = std::move(high);
  return spec;
}

std::optional<std::size_t> ActionSpec::FindAction(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

void ActionSpec::ValidateAction(const Action& a) const {
  if (is_discrete()) {
    const auto* index = std::get_if<std::size_t>(&a);
    if (index == nullptr || *index >= names_.size()) {
      throw Error(ErrorCode::kSpecMismatch, "invalid discrete action");
    }
    return;
  }
  const auto* v = std::get_if<ContinuousAction>(&a);
  if (v == nullptr || v->size() != low_.size()) {
    throw Error(ErrorCode::kSpecMismatch, "invalid continuous action");
  }
  for (double x : *v) {
    if (!std::isfinite(x)) {
      throw Error(ErrorCode::kNonFiniteValue, "continuous action not finite");
    }
  }
}

void ValidateTransition(const Transition& t, std::size_t p,
                        const ActionSpec& spec) {
  ValidateState(t.state, p);
  spec.ValidateAction(t.oracle_action);
  if (!std::isfinite(t.weight) || t.weight < 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "transition weight must be finite and >= 0");
  }
}

FeatureRef FeatureRef::Raw(std::size_t i) {
  FeatureRef f;
  f.kind_ = Kind::kRaw;
  f.first_ = static_cast<std::uint32_t>(i);
  return f;
}

FeatureRef FeatureRef::Oblique(std::size_t a, std::size_t b) {
  if (a == b) {
    throw Error(ErrorCode::kInvalidArgument,
                "oblique feature needs two distinct indices");
  }
  FeatureRef f;
  f.kind_ = Kind::kOblique;
  f.first_ = static_cast<std::uint32_t>(std::max(a, b));
  f.second_ = static_cast<std::uint32_t>(std::min(a, b));
  return f;
}

FeatureMask::FeatureMask(std::vector<std::string> original_names,
                         std::vector<std::size_t> keep)
    : original_names_(std::move(original_names)), keep_(std::move(keep)) {
  if (keep_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "feature mask keeps nothing");
  }
  for (std::size_t k = 0; k < keep_.size(); ++k) {
    if (keep_[k] >= original_names_.size() ||
        (k > 0 && keep_[k] <= keep_[k - 1])) {
      throw Error(ErrorCode::kInvalidArgument,
                  "feature mask indices must be increasing and in range");
    }
  }
}

FeatureMask FeatureMask::Identity(std::vector<std::string> original_names) {
  std::vector<std::size_t> keep(original_names.size());
  std::iota(keep.begin(), keep.end(), std::size_t{0});
  return FeatureMask(std::move(original_names), std::move(keep));
}

FeatureMask FeatureMask::Identity(std::size_t p) {
  std::vector<std::string> names;
  names.reserve(p);
  for (std::size_t i = 0; i < p; ++i) names.push_back("f" + std::to_string(i));
  return Identity(std::move(names));
}

std::vector<std::size_t> FeatureMask::dropped() const {
  std::vector<std::size_t> out;
  std::size_t k = 0;
  for (std::size_t i = 0; i < original_p(); ++i) {
    if (k < keep_.size() && keep_[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

State FeatureMask::Apply(StateView full) const {
  State out(keep_.size());
  ApplyInto(full, out);
  return out;
}

void FeatureMask::ApplyInto(StateView full, std::span<double> out) const {
  if (full.size() != original_p()) {
    throw Error(ErrorCode::kArityMismatch,
                "state has " + std::to_string(full.size()) +
                    " values, mask expects " + std::to_string(original_p()));
  }
  for (std::size_t k = 0; k < keep_.size(); ++k) out[k] = full[keep_[k]];
}

AggregatedDataset::AggregatedDataset(FeatureMask mask, ActionSpec action_spec)
    : mask_(std::move(mask)), action_spec_(std::move(action_spec)) {}

void AggregatedDataset::Append(const Transition& t) {
  ValidateTransition(t, mask_.original_p(), action_spec_);
  const std::size_t offset = values_.size();
  values_.resize(offset + arity());
  mask_.ApplyInto(t.state, std::span<double>(values_.data() + offset, arity()));
  if (action_spec_.is_discrete()) {
    labels_.push_back(DiscreteIndex(t.oracle_action));
  } else {
    const auto& v = ContinuousValues(t.oracle_action);
    targets_.insert(targets_.end(), v.begin(), v.end());
  }
  weights_.push_back(t.weight);
}

void AggregatedDataset::AppendMasked(StateView masked, const Action& action,
                                     double weight) {
  ValidateState(masked, arity());
  action_spec_.ValidateAction(action);
  if (!std::isfinite(weight) || weight < 0.0) {
    throw Error(ErrorCode::kInvalidArgument,
                "transition weight must be finite and >= 0");
  }
  values_.insert(values_.end(), masked.begin(), masked.end());
  if (action_spec_.is_discrete()) {
    labels_.push_back(DiscreteIndex(action));
  } else {
    const auto& v = ContinuousValues(action);
    targets_.insert(targets_.end(), v.begin(), v.end());
  }
  weights_.push_back(weight);
}

std::vector<double> AggregatedDataset::ObliqueValues(std::size_t k) const {
  const StateView s = row(k);
  std::vector<double> out;
  out.reserve(arity() * (arity() - 1) / 2);
  for (std::size_t i = 1; i < arity(); ++i) {
    for (std::size_t j = 0; j < i; ++j) out.push_back(s[i] - s[j]);
  }
  return out;
}

double AggregatedDataset::total_weight() const {
  double total = 0.0;
  for (double w : weights_) total += w;
  return total;
}

std::string_view ToString(Subroutine s) {
  switch (s) {
    case Subroutine::kAuto: return "auto";
    case Subroutine::kDagger: return "dagger";
    case Subroutine::kQDagger: return "qdagger";
  }
  return "auto";
}

std::optional<Subroutine> ParseSubroutine(std::string_view s) {
  if (s == "auto") return Subroutine::kAuto;
  if (s == "dagger") return Subroutine::kDagger;
  if (s == "qdagger") return Subroutine::kQDagger;
  return std::nullopt;
}

void DistillConfig::Validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::kInvalidArgument, what);
  };
  if (max_leaves < 2) fail("max leaves K must be >= 2");
  if (iterations < 1) fail("iterations N must be >= 1");
  if (transitions < 1) fail("transitions t must be >= 1");
  if (eval_episodes < 1) fail("eval episodes must be >= 1");
  if (!(idle_epsilon >= 0.0) || !std::isfinite(idle_epsilon)) {
    fail("idle epsilon must be finite and >= 0");
  }
  if (jobs < 1) fail("jobs must be >= 1");
}

}  // namespace obdistill
