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

// Dagger / Q-Dagger aggregation loop: roll out, relabel with the oracle,
// weight, aggregate, refit, and keep the best evaluated tree.

#ifndef OBDISTILL_IMITATION_H_
#define OBDISTILL_IMITATION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "obdistill/cart.h"
#include "obdistill/core.h"
#include "obdistill/envs.h"
#include "obdistill/error.h"
#include "obdistill/features.h"
#include "obdistill/oracle.h"

namespace obdistill {

struct SubroutineChoice {
  Subroutine subroutine = Subroutine::kDagger;  // kDagger or kQDagger
  // Source of Q-values under kQDagger: the oracle itself or its log-policy.
  std::shared_ptr<const Oracle> q_source;
};

// kAuto picks Q-Dagger iff the oracle has Q-values and actions are discrete.
// Forcing Q-Dagger on a stochastic oracle uses log pi as Q.
// Throws kQUnavailable.
SubroutineChoice SelectSubroutine(std::shared_ptr<const Oracle> oracle,
                                  const ActionSpec& action_spec,
                                  Subroutine requested);

// Weight of one state from its Q row: mean - min, or max - min.
double QWeight(std::span<const double> q, WeightRule rule);

// One weight per state: all 1 under Dagger, QWeight under Q-Dagger.
// Throws kQUnavailable if Q-Dagger is asked of an oracle without Q-values.
std::vector<double> ComputeSampleWeights(std::span<const State> states,
                                         const Oracle& q_source,
                                         Subroutine subroutine,
                                         WeightRule rule);

struct IterationRecord {
  std::size_t dataset_size = 0;
  double fit_seconds = 0.0;
  double eval_mean = 0.0;
  double eval_std = 0.0;
  std::size_t leaves = 0;
  bool uniform_weight_fallback = false;
};

struct ImitationRun {
  DistillConfig config;
  std::string env_name;
  std::string oracle_name;
  Subroutine subroutine = Subroutine::kDagger;
  ActionSpec action_spec;
  IdleFeatureReport mask_report;
  std::vector<std::shared_ptr<const ObliqueTree>> trees;
  std::vector<IterationRecord> iterations;
  std::vector<double> eval_scores;
  std::size_t best_index = 0;
  ReturnStats oracle_eval;
  double normalized_score = 0.0;  // best eval mean / oracle eval mean
  std::size_t dataset_final_size = 0;
  std::vector<std::string> warnings;
  bool complete = false;

  const FeatureMask& mask() const { return mask_report.mask; }
  TreePolicy best_policy() const;
};

// Observation points for tests.
struct DistillHooks {
  // Called with the policy about to generate iteration i's states (1-based).
  std::function<void(std::size_t, const Policy&)> on_rollout;
  // Called after iteration i's batch has been aggregated.
  std::function<void(std::size_t, const AggregatedDataset&)> on_aggregate;
};

// A failure inside the loop; carries whatever had been completed.
class DistillError : public Error {
 public:
  DistillError(ErrorCode code, const std::string& message, ImitationRun partial)
      : Error(code, message), partial_(std::move(partial)) {}
  const ImitationRun& partial() const { return partial_; }

 private:
  ImitationRun partial_;
};

// Probe rollout with the oracle fixes the feature mask. Iteration 1 rolls
// out the oracle, iteration i > 1 the previous tree; every state is relabeled
// by the oracle, weighted, aggregated and a tree is refit. All trees and the
// oracle are evaluated on the same episode seeds; the best mean wins, later
// iterations on ties.
// Throws kInvalidArgument, kQUnavailable, or DistillError for failures after
// the loop has started.
ImitationRun Distill(std::shared_ptr<const Oracle> oracle,
                     const Environment& env, const DistillConfig& config,
                     const DistillHooks& hooks = {});

// Fraction of steps, over states visited by `a`, where `b` takes the same
// action (continuous: within 1e-6 in L-infinity). Throws kSpecMismatch.
double ActionAgreement(const Policy& a, const Policy& b, const Environment& env,
                       std::size_t episodes, std::uint64_t seed);

// Seeds used by Distill, exposed so evaluations can be reproduced.
std::uint64_t ProbeSeed(std::uint64_t run_seed);
std::uint64_t IterationSeed(std::uint64_t run_seed, std::size_t iteration);
std::uint64_t EvaluationSeed(std::uint64_t run_seed);

nlohmann::json DistillConfigToJson(const DistillConfig& config);
// {"env", "oracle", "subroutine", "config", "mask", "iterations": [...],
//  "best_index", "oracle_eval", "normalized_score", "dataset_final_size",
//  "warnings", "complete"}.
nlohmann::json RunReportJson(const ImitationRun& run);

// {"name", "p", "feature_names", "action", "max_episode_steps"}.
nlohmann::json EnvironmentInfoJson(const Environment& env);

// Transition lists: [{"state": [...], "action": i | [...], "weight": w}].
nlohmann::json TransitionsToJson(std::span<const Transition> transitions);
std::vector<Transition> TransitionsFromJson(const nlohmann::json& j);

}  // namespace obdistill

#endif  // OBDISTILL_IMITATION_H_
