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

#ifndef OBDISTILL_SEED_H_
#define OBDISTILL_SEED_H_

#include <cstdint>
#include <random>

namespace obdistill {

// SplitMix64 finalizer.
std::uint64_t MixSeed(std::uint64_t x);

// Seed fan-out used everywhere a run seed spawns sub-streams:
//   DeriveSeed(base, a, b) = mix(mix(mix(base) ^ a) ^ b)
// Probe rollouts, per-iteration rollouts, per-episode resets and evaluation
// episodes all draw from distinct (a, b) coordinates of the same run seed.
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t a,
                         std::uint64_t b = 0);

// Stream identifiers for DeriveSeed's first coordinate.
inline constexpr std::uint64_t kProbeStream = 0x70726f6265ULL;
inline constexpr std::uint64_t kIterationStream = 0x69746572ULL;
inline constexpr std::uint64_t kEvaluationStream = 0x6576616cULL;

// Platform-stable random draws on top of std::mt19937_64. The standard
// distributions are implementation-defined, so they are avoided wherever a
// trajectory must be byte-stable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1).
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [lo, hi].
  std::int64_t UniformInt(std::int64_t lo, std::int64_t hi);
  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace obdistill

#endif  // OBDISTILL_SEED_H_
