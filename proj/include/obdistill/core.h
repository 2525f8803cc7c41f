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

// Domain types shared by every module: states, actions, split features,
// feature masks, the aggregated imitation dataset and the run configuration.

#ifndef OBDISTILL_CORE_H_
#define OBDISTILL_CORE_H_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace obdistill {

using State = std::vector<double>;
using StateView = std::span<const double>;

// Names of the p state features, e.g. "ball.y". A state vector is a plain
// `State` whose arity matches the spec it came from.
struct StateSpec {
  std::vector<std::string> feature_names;

  std::size_t size() const { return feature_names.size(); }
  std::optional<std::size_t> Find(std::string_view name) const;
};

// Throws kArityMismatch / kNonFiniteValue.
void ValidateState(StateView values, std::size_t expected_p);

using ContinuousAction = std::vector<double>;
// Discrete actions are indices; continuous actions are vectors.
using Action = std::variant<std::size_t, ContinuousAction>;

inline bool IsDiscrete(const Action& a) {
  return std::holds_alternative<std::size_t>(a);
}
std::size_t DiscreteIndex(const Action& a);
const ContinuousAction& ContinuousValues(const Action& a);

class ActionSpec {
 public:
  enum class Kind { kDiscrete, kContinuous };

  // n >= 2 names.
  static ActionSpec Discrete(std::vector<std::string> names);
  // One [lo, hi] interval per dimension, lo < hi.
  static ActionSpec Continuous(std::vector<double> low,
                               std::vector<double> high);

  Kind kind() const { return kind_; }
  bool is_discrete() const { return kind_ == Kind::kDiscrete; }
  std::size_t num_actions() const { return names_.size(); }
  // Output dimension of the tree learner: n classes or dim(A).
  std::size_t dim() const { return is_discrete() ? 1 : low_.size(); }
  const std::vector<std::string>& action_names() const { return names_; }
  const std::vector<double>& low() const { return low_; }
  const std::vector<double>& high() const { return high_; }

  std::optional<std::size_t> FindAction(std::string_view name) const;
  // Throws kSpecMismatch if `a` is not an action of this space.
  void ValidateAction(const Action& a) const;

  bool operator==(const ActionSpec&) const = default;

 private:
  Kind kind_ = Kind::kDiscrete;
  std::vector<std::string> names_;
  std::vector<double> low_;
  std::vector<double> high_;
};

struct Transition {
  State state;
  Action oracle_action;
  double weight = 1.0;
};

void ValidateTransition(const Transition& t, std::size_t p,
                        const ActionSpec& spec);

// A split feature over a (masked) state: either a raw coordinate s_i or the
// difference s_i - s_j of two coordinates. Oblique references are kept in
// canonical lower-triangle form (i > j), so Oblique(a, b) == Oblique(b, a).
// Ordering is Raw before Oblique, then by indices.
class FeatureRef {
 public:
  enum class Kind : std::uint8_t { kRaw = 0, kOblique = 1 };

  FeatureRef() = default;
  static FeatureRef Raw(std::size_t i);
  static FeatureRef Oblique(std::size_t a, std::size_t b);

  Kind kind() const { return kind_; }
  bool is_oblique() const { return kind_ == Kind::kOblique; }
  std::size_t first() const { return first_; }
  // Subtracted index; only meaningful for oblique references.
  std::size_t second() const { return second_; }

  double Value(StateView s) const {
    return is_oblique() ? s[first_] - s[second_] : s[first_];
  }
  // Largest state index referenced plus one.
  std::size_t RequiredArity() const { return first_ + 1; }

  auto operator<=>(const FeatureRef&) const = default;

 private:
  Kind kind_ = Kind::kRaw;
  std::uint32_t first_ = 0;
  std::uint32_t second_ = 0;
};

// Kept raw feature indices, strictly increasing, relative to the original
// state spec.
class FeatureMask {
 public:
  FeatureMask() = default;
  FeatureMask(std::vector<std::string> original_names,
              std::vector<std::size_t> keep);
  static FeatureMask Identity(std::vector<std::string> original_names);
  // Identity mask over generic names f0..f{p-1}.
  static FeatureMask Identity(std::size_t p);

  std::size_t original_p() const { return original_names_.size(); }
  std::size_t size() const { return keep_.size(); }
  const std::vector<std::size_t>& keep() const { return keep_; }
  const std::vector<std::string>& original_names() const {
    return original_names_;
  }
  std::vector<std::size_t> dropped() const;
  // Name of the k-th kept feature.
  const std::string& kept_name(std::size_t k) const {
    return original_names_[keep_[k]];
  }
  std::size_t original_index(std::size_t k) const { return keep_[k]; }

  State Apply(StateView full) const;
  void ApplyInto(StateView full, std::span<double> out) const;

  bool operator==(const FeatureMask&) const = default;

 private:
  std::vector<std::string> original_names_;
  std::vector<std::size_t> keep_;
};

// Growing imitation dataset. States are stored masked, row-major; oblique
// values are derived on demand, never materialized.
class AggregatedDataset {
 public:
  AggregatedDataset(FeatureMask mask, ActionSpec action_spec);

  // Appends a transition whose state is in the original (unmasked) space.
  void Append(const Transition& t);
  // Appends an already-masked row.
  void AppendMasked(StateView masked, const Action& action, double weight);

  std::size_t size() const { return weights_.size(); }
  bool empty() const { return weights_.empty(); }
  std::size_t arity() const { return mask_.size(); }
  const FeatureMask& mask() const { return mask_; }
  const ActionSpec& action_spec() const { return action_spec_; }

  StateView row(std::size_t k) const {
    return {values_.data() + k * arity(), arity()};
  }
  double Value(std::size_t k, const FeatureRef& f) const {
    return f.Value(row(k));
  }
  std::vector<double> ObliqueValues(std::size_t k) const;

  std::size_t label(std::size_t k) const { return labels_[k]; }
  StateView target(std::size_t k) const {
    return {targets_.data() + k * action_spec_.dim(), action_spec_.dim()};
  }
  double weight(std::size_t k) const { return weights_[k]; }
  const std::vector<double>& weights() const { return weights_; }
  double total_weight() const;

 private:
  FeatureMask mask_;
  ActionSpec action_spec_;
  std::vector<double> values_;
  std::vector<std::size_t> labels_;
  std::vector<double> targets_;
  std::vector<double> weights_;
};

enum class Subroutine { kAuto, kDagger, kQDagger };
enum class WeightRule { kMeanMinusMin, kMaxMinusMin };

std::string_view ToString(Subroutine s);
std::optional<Subroutine> ParseSubroutine(std::string_view s);

struct DistillConfig {
  std::size_t max_leaves = 8;          // K
  std::size_t iterations = 10;         // N
  std::size_t transitions = 10000;     // t
  std::uint64_t seed = 0;
  Subroutine subroutine = Subroutine::kAuto;
  std::size_t eval_episodes = 10;
  bool oblique = true;
  WeightRule weight_rule = WeightRule::kMeanMinusMin;
  double idle_epsilon = 1e-9;
  std::size_t jobs = 1;

  // Throws kInvalidArgument.
  void Validate() const;
};

}  // namespace obdistill

#endif  // OBDISTILL_CORE_H_
