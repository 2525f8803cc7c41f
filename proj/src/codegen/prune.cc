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

#include <limits>
#include <map>
#include <utility>

#include "obdistill/codegen.h"

namespace obdistill {
namespace {

// Bounds known for one expression along a path.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  bool lo_open = true;
  double hi = std::numeric_limits<double>::infinity();
  bool hi_open = true;
};

// Expression key with a - b and b - a folded together.
using Key = std::pair<std::size_t, std::size_t>;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Rewrites `c` over the canonical expression: v <op> t with v = sign * e.
struct Canonical {
  Key key;
  Comparator op;
  double threshold;
};

Comparator Mirror(Comparator c) {
  switch (c) {
    case Comparator::kLe: return Comparator::kGe;
    case Comparator::kLt: return Comparator::kGt;
    case Comparator::kGt: return Comparator::kLt;
    case Comparator::kGe: return Comparator::kLe;
  }
  return c;
}

Canonical Canonicalize(const Condition& c) {
  const FeatureExpr& e = c.expr;
  if (!e.rhs) return {{e.lhs, kNone}, c.op, c.threshold};
  if (e.lhs > *e.rhs) return {{e.lhs, *e.rhs}, c.op, c.threshold};
  // b - a <op> t  <=>  a - b <mirror op> -t; exact in floating point.
  return {{*e.rhs, e.lhs}, Mirror(c.op), -c.threshold};
}

// True / false if the interval decides `v op t`, nullopt otherwise.
std::optional<bool> Decide(const Interval& r, Comparator op, double t) {
  switch (op) {
    case Comparator::kLe:
      if (r.hi <= t) return true;
      if (r.lo > t || (r.lo == t && r.lo_open)) return false;
      return std::nullopt;
    case Comparator::kLt:
      if (r.hi < t || (r.hi == t && r.hi_open)) return true;
      if (r.lo >= t) return false;
      return std::nullopt;
    case Comparator::kGt:
      if (auto d = Decide(r, Comparator::kLe, t)) return !*d;
      return std::nullopt;
    case Comparator::kGe:
      if (auto d = Decide(r, Comparator::kLt, t)) return !*d;
      return std::nullopt;
  }
  return std::nullopt;
}

void TightenUpper(Interval& r, double t, bool open) {
  if (t < r.hi || (t == r.hi && open && !r.hi_open)) {
    r.hi = t;
    r.hi_open = open;
  }
}

void TightenLower(Interval& r, double t, bool open) {
  if (t > r.lo || (t == r.lo && open && !r.lo_open)) {
    r.lo = t;
    r.lo_open = open;
  }
}

// Interval after learning that `v op t` is `holds`.
Interval Restrict(Interval r, Comparator op, double t, bool holds) {
  if (!holds) {
    switch (op) {
      case Comparator::kLe: op = Comparator::kGt; break;
      case Comparator::kLt: op = Comparator::kGe; break;
      case Comparator::kGt: op = Comparator::kLe; break;
      case Comparator::kGe: op = Comparator::kLt; break;
    }
  }
  switch (op) {
    case Comparator::kLe: TightenUpper(r, t, false); break;
    case Comparator::kLt: TightenUpper(r, t, true); break;
    case Comparator::kGt: TightenLower(r, t, true); break;
    case Comparator::kGe: TightenLower(r, t, false); break;
  }
  return r;
}

class Pruner {
 public:
  explicit Pruner(PruneStats& stats) : stats_(stats) {}

  ProgramNodePtr Run(const ProgramNodePtr& n) {
    if (n->is_return()) return n;
    const IfNode& branch = n->as_if();
    const Canonical c = Canonicalize(branch.condition);
    const Interval known = Lookup(c.key);
    if (auto decided = Decide(known, c.op, c.threshold)) {
      ++stats_.decided_conditions;
      return Run(*decided ? branch.then_branch : branch.else_branch);
    }
    ProgramNodePtr then_branch =
        With(c.key, Restrict(known, c.op, c.threshold, true),
             branch.then_branch);
    ProgramNodePtr else_branch =
        With(c.key, Restrict(known, c.op, c.threshold, false),
             branch.else_branch);
    if (SameProgram(then_branch, else_branch)) {
      ++stats_.merged_branches;
      return then_branch;
    }
    if (then_branch == branch.then_branch && else_branch == branch.else_branch) {
      return n;
    }
    return MakeIf(branch.condition, std::move(then_branch),
                  std::move(else_branch));
  }

 private:
  Interval Lookup(const Key& key) const {
    auto it = known_.find(key);
    return it == known_.end() ? Interval{} : it->second;
  }

  ProgramNodePtr With(const Key& key, const Interval& r,
                      const ProgramNodePtr& n) {
    auto it = known_.find(key);
    std::optional<Interval> saved;
    if (it != known_.end()) saved = it->second;
    known_[key] = r;
    ProgramNodePtr out = Run(n);
    if (saved) {
      known_[key] = *saved;
    } else {
      known_.erase(key);
    }
    return out;
  }

  PruneStats& stats_;
  std::map<Key, Interval> known_;
};

}  // namespace

Program PruneProgram(const Program& program, PruneStats* stats) {
  PruneStats local;
  PruneStats& s = stats != nullptr ? *stats : local;
  s = PruneStats{};
  ProgramNodePtr root = program.root();
  for (;;) {
    ++s.passes;
    const std::size_t before = s.merged_branches + s.decided_conditions;
    Pruner pruner(s);
    root = pruner.Run(root);
    if (s.merged_branches + s.decided_conditions == before) break;
  }
  return Program(program.feature_names(), program.action_spec(), root);
}

}  // namespace obdistill
