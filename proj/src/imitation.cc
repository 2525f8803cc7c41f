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

#include "obdistill/imitation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace obdistill {

using nlohmann::json;

SubroutineChoice SelectSubroutine(std::shared_ptr<const Oracle> oracle,
                                  const ActionSpec& action_spec,
                                  Subroutine requested) {
  SubroutineChoice choice;
  switch (requested) {
    case Subroutine::kDagger:
      return choice;
    case Subroutine::kAuto:
      if (oracle->has_q() && action_spec.is_discrete()) {
        choice.subroutine = Subroutine::kQDagger;
        choice.q_source = std::move(oracle);
      }
      return choice;
    case Subroutine::kQDagger:
      break;
  }
  if (!action_spec.is_discrete()) {
    throw Error(ErrorCode::kQUnavailable,
                "Q-Dagger needs a discrete action space");
  }
  choice.subroutine = Subroutine::kQDagger;
  if (oracle->has_q()) {
    choice.q_source = std::move(oracle);
  } else if (oracle->has_log_policy()) {
    choice.q_source = QFromLogPolicy(std::move(oracle));
  } else {
    throw Error(ErrorCode::kQUnavailable,
                oracle->name() + " has neither Q-values nor a log-policy");
  }
  return choice;
}

double QWeight(std::span<const double> q, WeightRule rule) {
  if (q.empty()) throw Error(ErrorCode::kQUnavailable, "empty Q row");
  double lo = q[0], hi = q[0], sum = 0.0;
  for (double v : q) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kNonFiniteValue, "non-finite Q-value");
    }
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  if (lo == hi) return 0.0;
  const double top = rule == WeightRule::kMeanMinusMin
                         ? sum / static_cast<double>(q.size())
                         : hi;
  return std::max(top - lo, 0.0);
}

std::vector<double> ComputeSampleWeights(std::span<const State> states,
                                         const Oracle& q_source,
                                         Subroutine subroutine,
                                         WeightRule rule) {
  std::vector<double> weights(states.size(), 1.0);
  if (subroutine != Subroutine::kQDagger) return weights;
  if (!q_source.has_q()) {
    throw Error(ErrorCode::kQUnavailable,
                q_source.name() + " exposes no Q-values");
  }
  for (std::size_t k = 0; k < states.size(); ++k) {
    weights[k] = QWeight(q_source.QValues(states[k]), rule);
  }
  return weights;
}

TreePolicy ImitationRun::best_policy() const {
  if (trees.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "run produced no trees");
  }
  return TreePolicy(trees[best_index], mask(), action_spec);
}

std::uint64_t ProbeSeed(std::uint64_t run_seed) {
  return DeriveSeed(run_seed, kProbeStream);
}
std::uint64_t IterationSeed(std::uint64_t run_seed, std::size_t iteration) {
  return DeriveSeed(run_seed, kIterationStream, iteration);
}
std::uint64_t EvaluationSeed(std::uint64_t run_seed) {
  return DeriveSeed(run_seed, kEvaluationStream);
}

namespace {

void SelectBest(ImitationRun& run) {
  run.best_index = 0;
  for (std::size_t i = 1; i < run.eval_scores.size(); ++i) {
    if (run.eval_scores[i] >= run.eval_scores[run.best_index]) {
      run.best_index = i;
    }
  }
  const double best = run.eval_scores.empty()
                          ? std::numeric_limits<double>::quiet_NaN()
                          : run.eval_scores[run.best_index];
  run.normalized_score = best / run.oracle_eval.mean;
}

}  // namespace

ImitationRun Distill(std::shared_ptr<const Oracle> oracle,
                     const Environment& env, const DistillConfig& config,
                     const DistillHooks& hooks) {
  config.Validate();
  const ActionSpec& action_spec = env.action_spec();
  const SubroutineChoice choice =
      SelectSubroutine(oracle, action_spec, config.subroutine);

  ImitationRun run;
  run.config = config;
  run.env_name = env.name();
  run.oracle_name = oracle->name();
  run.subroutine = choice.subroutine;
  run.action_spec = action_spec;

  auto fail = [&run](const Error& e) {
    return DistillError(e.code(), e.what(), run);
  };

  auto local = env.Clone();
  try {
    const RolloutBatch probe =
        Rollout(*oracle, *local, config.transitions, ProbeSeed(config.seed));
    run.mask_report = DetectIdleFeatures(probe.states, env.state_spec(),
                                         config.idle_epsilon);
    if (run.mask_report.all_idle) {
      run.warnings.push_back("no feature varied during the probe rollout");
    }

    AggregatedDataset data(run.mask(), action_spec);
    const FitOptions fit_options{config.max_leaves, config.oblique, false};
    for (std::size_t i = 1; i <= config.iterations; ++i) {
      std::unique_ptr<TreePolicy> previous;
      const Policy* rollout_policy = oracle.get();
      if (i > 1) {
        previous = std::make_unique<TreePolicy>(run.trees.back(), run.mask(),
                                                action_spec);
        rollout_policy = previous.get();
      }
      if (hooks.on_rollout) hooks.on_rollout(i, *rollout_policy);
      const RolloutBatch batch = Rollout(*rollout_policy, *local,
                                         config.transitions,
                                         IterationSeed(config.seed, i));
      const std::vector<double> weights =
          choice.subroutine == Subroutine::kQDagger
              ? ComputeSampleWeights(batch.states, *choice.q_source,
                                     choice.subroutine, config.weight_rule)
              : std::vector<double>(batch.states.size(), 1.0);
      for (std::size_t k = 0; k < batch.states.size(); ++k) {
        Transition t{batch.states[k], oracle->Act(batch.states[k]), weights[k]};
        data.Append(t);
      }
      if (hooks.on_aggregate) hooks.on_aggregate(i, data);

      IterationRecord record;
      record.dataset_size = data.size();
      FitReport report;
      const auto start = std::chrono::steady_clock::now();
      auto tree =
          std::make_shared<const ObliqueTree>(FitTree(data, fit_options, &report));
      record.fit_seconds = std::chrono::duration<double>(
                               std::chrono::steady_clock::now() - start)
                               .count();
      record.leaves = tree->leaf_count();
      record.uniform_weight_fallback = report.uniform_weight_fallback;
      if (report.uniform_weight_fallback) {
        run.warnings.push_back("iteration " + std::to_string(i) +
                               ": all sample weights were zero, fit with "
                               "uniform weights");
      }
      run.trees.push_back(std::move(tree));
      run.iterations.push_back(record);
    }
    run.dataset_final_size = data.size();

    const std::uint64_t eval_seed = EvaluationSeed(config.seed);
    for (std::size_t i = 0; i < run.trees.size(); ++i) {
      const TreePolicy policy(run.trees[i], run.mask(), action_spec);
      const ReturnStats stats = EvaluateReturn(policy, env, config.eval_episodes,
                                               eval_seed, config.jobs);
      run.iterations[i].eval_mean = stats.mean;
      run.iterations[i].eval_std = stats.std;
      run.eval_scores.push_back(stats.mean);
    }
    run.oracle_eval = EvaluateReturn(*oracle, env, config.eval_episodes,
                                     eval_seed, config.jobs);
  } catch (const DistillError&) {
    throw;
  } catch (const Error& e) {
    throw fail(e);
  }
  SelectBest(run);
  if (!(run.oracle_eval.mean > 0.0)) {
    run.warnings.push_back(
        "oracle mean return is not positive; the normalized score is not a "
        "fraction of oracle performance");
  }
  run.complete = true;
  return run;
}

double ActionAgreement(const Policy& a, const Policy& b, const Environment& env,
                       std::size_t episodes, std::uint64_t seed) {
  if (episodes < 1) {
    throw Error(ErrorCode::kInvalidArgument, "agreement needs >= 1 episode");
  }
  const ActionSpec& spec = env.action_spec();
  auto local = env.Clone();
  std::size_t steps = 0, agree = 0;
  for (std::size_t e = 0; e < episodes; ++e) {
    State state = local->Reset(DeriveSeed(seed, e));
    for (;;) {
      const Action x = a.Act(state);
      const Action y = b.Act(state);
      spec.ValidateAction(x);
      spec.ValidateAction(y);
      ++steps;
      if (spec.is_discrete()) {
        agree += DiscreteIndex(x) == DiscreteIndex(y) ? 1 : 0;
      } else {
        const auto& u = ContinuousValues(x);
        const auto& v = ContinuousValues(y);
        double gap = 0.0;
        for (std::size_t d = 0; d < u.size(); ++d) {
          gap = std::max(gap, std::abs(u[d] - v[d]));
        }
        agree += gap <= 1e-6 ? 1 : 0;
      }
      StepResult step = local->Step(x);
      if (step.done) break;
      state = std::move(step.state);
    }
  }
  return static_cast<double>(agree) / static_cast<double>(steps);
}

json DistillConfigToJson(const DistillConfig& config) {
  return {{"max_leaves", config.max_leaves},
          {"iterations", config.iterations},
          {"transitions", config.transitions},
          {"seed", config.seed},
          {"subroutine", std::string(ToString(config.subroutine))},
          {"eval_episodes", config.eval_episodes},
          {"oblique", config.oblique},
          {"weight_rule", config.weight_rule == WeightRule::kMeanMinusMin
                              ? "mean-min"
                              : "max-min"},
          {"idle_epsilon", config.idle_epsilon},
          {"jobs", config.jobs}};
}

json RunReportJson(const ImitationRun& run) {
  json iterations = json::array();
  for (std::size_t i = 0; i < run.iterations.size(); ++i) {
    const IterationRecord& r = run.iterations[i];
    iterations.push_back({{"iteration", i + 1},
                          {"dataset_size", r.dataset_size},
                          {"eval_mean", r.eval_mean},
                          {"eval_std", r.eval_std},
                          {"leaves", r.leaves},
                          {"uniform_weight_fallback", r.uniform_weight_fallback}});
  }
  auto finite_or_null = [](double x) -> json {
    return std::isfinite(x) ? json(x) : json(nullptr);
  };
  return {{"env", run.env_name},
          {"oracle", run.oracle_name},
          {"subroutine", std::string(ToString(run.subroutine))},
          {"config", DistillConfigToJson(run.config)},
          {"mask", MaskReportJson(run.mask_report)},
          {"iterations", std::move(iterations)},
          {"best_index", run.best_index},
          {"oracle_eval",
           {{"mean", run.oracle_eval.mean}, {"std", run.oracle_eval.std}}},
          {"normalized_score", finite_or_null(run.normalized_score)},
          {"dataset_final_size", run.dataset_final_size},
          {"warnings", run.warnings},
          {"complete", run.complete}};
}

json EnvironmentInfoJson(const Environment& env) {
  return {{"name", env.name()},
          {"p", env.state_spec().size()},
          {"feature_names", env.state_spec().feature_names},
          {"action", ActionSpecToJson(env.action_spec())},
          {"max_episode_steps", env.max_episode_steps()}};
}

json TransitionsToJson(std::span<const Transition> transitions) {
  json out = json::array();
  for (const Transition& t : transitions) {
    json action = IsDiscrete(t.oracle_action)
                      ? json(DiscreteIndex(t.oracle_action))
                      : json(ContinuousValues(t.oracle_action));
    out.push_back(
        {{"state", t.state}, {"action", std::move(action)}, {"weight", t.weight}});
  }
  return out;
}

std::vector<Transition> TransitionsFromJson(const json& j) {
  if (!j.is_array()) {
    throw Error(ErrorCode::kParseError, "transitions must be an array");
  }
  std::vector<Transition> out;
  try {
    for (const json& r : j) {
      Transition t;
      t.state = r.at("state").get<State>();
      const json& a = r.at("action");
      if (a.is_array()) {
        t.oracle_action = a.get<ContinuousAction>();
      } else {
        t.oracle_action = a.get<std::size_t>();
      }
      t.weight = r.value("weight", 1.0);
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("bad transition: ") + e.what());
  }
  return out;
}

}  // namespace obdistill
