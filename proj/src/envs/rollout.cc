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

#include <algorithm>
#include <cmath>
#include <exception>
#include <future>
#include <memory>
#include <string>
#include <vector>

#include "obdistill/envs.h"
#include "obdistill/error.h"

namespace obdistill {

namespace {

double RunEpisode(const Policy& policy, Environment& env, std::uint64_t seed) {
  State state = env.Reset(seed);
  double total = 0.0;
  for (;;) {
    StepResult step = env.Step(policy.Act(state));
    total += step.reward;
    if (step.done) break;
    state = std::move(step.state);
  }
  return total;
}

}  // namespace

RolloutBatch Rollout(const Policy& policy, Environment& env, std::size_t t,
                     std::uint64_t seed) {
  if (t < 1) throw Error(ErrorCode::kInvalidArgument, "rollout needs t >= 1");
  RolloutBatch batch;
  batch.states.reserve(t);
  batch.actions.reserve(t);
  const std::size_t p = env.state_spec().size();
  while (batch.states.size() < t) {
    State state = env.Reset(DeriveSeed(seed, batch.episodes));
    ++batch.episodes;
    for (;;) {
      ValidateState(state, p);
      Action action = policy.Act(state);
      batch.states.push_back(state);
      batch.actions.push_back(action);
      if (batch.states.size() == t) break;
      StepResult step = env.Step(action);
      if (step.done) break;
      state = std::move(step.state);
    }
  }
  return batch;
}

ReturnStats EvaluateReturn(const Policy& policy, const Environment& env,
                           std::size_t episodes, std::uint64_t seed,
                           std::size_t jobs) {
  if (episodes < 1) {
    throw Error(ErrorCode::kInvalidArgument, "evaluation needs >= 1 episode");
  }
  ReturnStats stats;
  stats.per_episode.assign(episodes, 0.0);
  jobs = std::clamp<std::size_t>(jobs, 1, episodes);

  if (jobs == 1) {
    auto local = env.Clone();
    for (std::size_t e = 0; e < episodes; ++e) {
      stats.per_episode[e] = RunEpisode(policy, *local, DeriveSeed(seed, e));
    }
  } else {
    // Worker w handles episodes w, w + jobs, ...; each writes its own slots.
    std::vector<std::future<void>> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
      workers.push_back(std::async(std::launch::async, [&, w] {
        auto local = env.Clone();
        for (std::size_t e = w; e < episodes; e += jobs) {
          stats.per_episode[e] = RunEpisode(policy, *local, DeriveSeed(seed, e));
        }
      }));
    }
    std::exception_ptr failure;
    for (auto& worker : workers) {
      try {
        worker.get();
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  }

  double sum = 0.0;
  for (double r : stats.per_episode) sum += r;
  stats.mean = sum / static_cast<double>(episodes);
  if (episodes > 1) {
    double sq = 0.0;
    for (double r : stats.per_episode) sq += (r - stats.mean) * (r - stats.mean);
    stats.std = std::sqrt(sq / static_cast<double>(episodes - 1));
  }
  return stats;
}

}  // namespace obdistill
