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

// Tree programs: conversion from fitted trees, exact pruning, text emission,
// parsing of (possibly hand-edited) program text, and execution.

#ifndef OBDISTILL_CODEGEN_H_
#define OBDISTILL_CODEGEN_H_

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "obdistill/cart.h"
#include "obdistill/core.h"
#include "obdistill/envs.h"

namespace obdistill {

enum class Comparator { kLe, kLt, kGt, kGe };

std::string_view ToString(Comparator c);

// s[lhs], or s[lhs] - s[rhs]; indices into the original (unmasked) state.
struct FeatureExpr {
  std::size_t lhs = 0;
  std::optional<std::size_t> rhs;

  double Value(StateView s) const { return rhs ? s[lhs] - s[*rhs] : s[lhs]; }
  bool operator==(const FeatureExpr&) const = default;
};

struct Condition {
  FeatureExpr expr;
  Comparator op = Comparator::kLe;
  double threshold = 0.0;

  bool Holds(StateView s) const;
  bool operator==(const Condition&) const = default;
};

struct ProgramNode;
using ProgramNodePtr = std::shared_ptr<const ProgramNode>;

struct IfNode {
  Condition condition;
  ProgramNodePtr then_branch;
  ProgramNodePtr else_branch;
};

struct ReturnNode {
  Action action;
};

struct ProgramNode {
  std::variant<IfNode, ReturnNode> node;

  bool is_return() const { return std::holds_alternative<ReturnNode>(node); }
  const IfNode& as_if() const { return std::get<IfNode>(node); }
  const ReturnNode& as_return() const { return std::get<ReturnNode>(node); }
};

ProgramNodePtr MakeIf(Condition condition, ProgramNodePtr then_branch,
                      ProgramNodePtr else_branch);
ProgramNodePtr MakeReturn(Action action);

// Structural equality of two program trees.
bool SameProgram(const ProgramNodePtr& a, const ProgramNodePtr& b);

struct ProgramStats {
  std::size_t ifs = 0;
  std::size_t returns = 0;
  std::size_t depth = 0;  // conditions on the longest path
};

// A program over the original state features. Sub-trees may be shared.
class Program {
 public:
  // Throws kInvalidArgument if a condition or action does not fit the names.
  Program(std::vector<std::string> feature_names, ActionSpec action_spec,
          ProgramNodePtr root);

  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }
  const ActionSpec& action_spec() const { return action_spec_; }
  const ProgramNodePtr& root() const { return root_; }

  // Throws kArityMismatch.
  Action Execute(StateView s) const;
  ProgramStats Stats() const;
  // Names of the features used by some condition, in index order.
  std::vector<std::size_t> ReferencedFeatures() const;

  bool operator==(const Program& other) const;

 private:
  std::vector<std::string> feature_names_;
  ActionSpec action_spec_;
  ProgramNodePtr root_;
};

// Internal node -> If (feature <= threshold), leaf -> Return. Masked feature
// references are mapped back to original indices.
// Throws kNameArityMismatch if the mask or action space does not cover the
// tree.
Program TreeToProgram(const ObliqueTree& tree, const FeatureMask& mask,
                      const ActionSpec& action_spec);
Program TreeToProgram(const TreePolicy& policy);

struct PruneStats {
  std::size_t merged_branches = 0;     // ifs with identical branches
  std::size_t decided_conditions = 0;  // ifs implied by enclosing conditions
  std::size_t passes = 0;
};

// Exact simplification to a fixpoint: an if whose branches are identical
// becomes that branch, and an if whose condition is implied (or refuted) by
// the conditions on its path is replaced by the branch taken.
Program PruneProgram(const Program& program, PruneStats* stats = nullptr);

// Python-compatible source:
//   def play(player, enemy, ball):
//       if ball.y - player.y <= -0.01:
//           return "DOWN"
//       else:
//           ...
// Thresholds use the shortest decimal that reads back as the same double.
std::string EmitProgram(const Program& program,
                        std::string_view function_name = "play");

// Shortest round-trip decimal, always with a '.' or exponent.
std::string FormatNumber(double x);

// Parses program text against the given state and action names. Accepts the
// emitted grammar plus hand edits: comparators <=, <, >, >=; "a > b" as
// "a - b > 0"; literals on either side; elif; inline bodies after ':';
// an if without else falling through to the statements after it; '#'
// comments; several functions, where `return name(args)` continues in
// function `name`. The entry point is `play` if present, else the first
// function.
// Throws kSyntaxError (with line:column), kUnknownFeatureName,
// kUnknownActionName, kNameArityMismatch.
Program ParseProgram(std::string_view text,
                     const std::vector<std::string>& feature_names,
                     const ActionSpec& action_spec);

// {"format", "features", "action", "root": {"if": {...}} | {"return": ...}}.
nlohmann::json ProgramToJson(const Program& program);
Program ProgramFromJson(const nlohmann::json& j);

class ProgramPolicy final : public Policy {
 public:
  explicit ProgramPolicy(Program program) : program_(std::move(program)) {}
  Action Act(StateView s) const override { return program_.Execute(s); }
  const Program& program() const { return program_; }

 private:
  Program program_;
};

}  // namespace obdistill

#endif  // OBDISTILL_CODEGEN_H_
