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
#include <map>
#include <set>
#include <string>
#include <utility>

#include "obdistill/codegen.h"
#include "obdistill/error.h"

namespace obdistill {

std::string_view ToString(Comparator c) {
  switch (c) {
    case Comparator::kLe: return "<=";
    case Comparator::kLt: return "<";
    case Comparator::kGt: return ">";
    case Comparator::kGe: return ">=";
  }
  return "?";
}

bool Condition::Holds(StateView s) const {
  const double v = expr.Value(s);
  switch (op) {
    case Comparator::kLe: return v <= threshold;
    case Comparator::kLt: return v < threshold;
    case Comparator::kGt: return v > threshold;
    case Comparator::kGe: return v >= threshold;
  }
  return false;
}

ProgramNodePtr MakeIf(Condition condition, ProgramNodePtr then_branch,
                      ProgramNodePtr else_branch) {
  return std::make_shared<const ProgramNode>(ProgramNode{
      IfNode{condition, std::move(then_branch), std::move(else_branch)}});
}

ProgramNodePtr MakeReturn(Action action) {
  return std::make_shared<const ProgramNode>(
      ProgramNode{ReturnNode{std::move(action)}});
}

bool SameProgram(const ProgramNodePtr& a, const ProgramNodePtr& b) {
  if (a == b) return true;
  if (a->is_return() != b->is_return()) return false;
  if (a->is_return()) return a->as_return().action == b->as_return().action;
  const IfNode& x = a->as_if();
  const IfNode& y = b->as_if();
  return x.condition == y.condition && SameProgram(x.then_branch, y.then_branch) &&
         SameProgram(x.else_branch, y.else_branch);
}

Program::Program(std::vector<std::string> feature_names, ActionSpec action_spec,
                 ProgramNodePtr root)
    : feature_names_(std::move(feature_names)),
      action_spec_(std::move(action_spec)),
      root_(std::move(root)) {
  if (!root_) throw Error(ErrorCode::kInvalidArgument, "empty program");
  std::set<const ProgramNode*> seen;
  std::vector<const ProgramNode*> stack = {root_.get()};
  const std::size_t p = feature_names_.size();
  while (!stack.empty()) {
    const ProgramNode* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    if (n->is_return()) {
      try {
        action_spec_.ValidateAction(n->as_return().action);
      } catch (const Error& e) {
        throw Error(ErrorCode::kInvalidArgument,
                    std::string("program returns an invalid action: ") +
                        e.what());
      }
      continue;
    }
    const IfNode& branch = n->as_if();
    const FeatureExpr& e = branch.condition.expr;
    if (e.lhs >= p || (e.rhs && (*e.rhs >= p || *e.rhs == e.lhs))) {
      throw Error(ErrorCode::kInvalidArgument,
                  "program condition references an unknown feature");
    }
    if (!std::isfinite(branch.condition.threshold)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "program threshold must be finite");
    }
    if (!branch.then_branch || !branch.else_branch) {
      throw Error(ErrorCode::kInvalidArgument, "if without both branches");
    }
    stack.push_back(branch.then_branch.get());
    stack.push_back(branch.else_branch.get());
  }
}

Action Program::Execute(StateView s) const {
  if (s.size() != feature_names_.size()) {
    throw Error(ErrorCode::kArityMismatch,
                "program expects " + std::to_string(feature_names_.size()) +
                    " features, got " + std::to_string(s.size()));
  }
  const ProgramNode* n = root_.get();
  while (!n->is_return()) {
    const IfNode& branch = n->as_if();
    n = branch.condition.Holds(s) ? branch.then_branch.get()
                                  : branch.else_branch.get();
  }
  return n->as_return().action;
}

ProgramStats Program::Stats() const {
  std::map<const ProgramNode*, ProgramStats> memo;
  auto visit = [&memo](auto& self, const ProgramNode* n) -> ProgramStats {
    if (auto it = memo.find(n); it != memo.end()) return it->second;
    ProgramStats out;
    if (n->is_return()) {
      out.returns = 1;
    } else {
      const ProgramStats a = self(self, n->as_if().then_branch.get());
      const ProgramStats b = self(self, n->as_if().else_branch.get());
      out.ifs = 1 + a.ifs + b.ifs;
      out.returns = a.returns + b.returns;
      out.depth = 1 + std::max(a.depth, b.depth);
    }
    memo.emplace(n, out);
    return out;
  };
  return visit(visit, root_.get());
}

std::vector<std::size_t> Program::ReferencedFeatures() const {
  std::set<std::size_t> used;
  std::set<const ProgramNode*> seen;
  std::vector<const ProgramNode*> stack = {root_.get()};
  while (!stack.empty()) {
    const ProgramNode* n = stack.back();
    stack.pop_back();
    if (n->is_return() || !seen.insert(n).second) continue;
    const FeatureExpr& e = n->as_if().condition.expr;
    used.insert(e.lhs);
    if (e.rhs) used.insert(*e.rhs);
    stack.push_back(n->as_if().then_branch.get());
    stack.push_back(n->as_if().else_branch.get());
  }
  return {used.begin(), used.end()};
}

bool Program::operator==(const Program& other) const {
  return feature_names_ == other.feature_names_ &&
         action_spec_ == other.action_spec_ && SameProgram(root_, other.root_);
}

Program TreeToProgram(const ObliqueTree& tree, const FeatureMask& mask,
                      const ActionSpec& action_spec) {
  if (mask.size() != tree.arity()) {
    throw Error(ErrorCode::kNameArityMismatch,
                "tree uses " + std::to_string(tree.arity()) +
                    " features but the mask names " +
                    std::to_string(mask.size()));
  }
  const bool classify = tree.task() == TreeTask::kClassify;
  if (classify != action_spec.is_discrete() ||
      tree.outputs() !=
          (classify ? action_spec.num_actions() : action_spec.dim())) {
    throw Error(ErrorCode::kNameArityMismatch,
                "action names do not cover the tree outputs");
  }
  // Preorder arena: children always follow their parent, so build backwards.
  std::vector<ProgramNodePtr> built(tree.node_count());
  for (std::size_t i = tree.node_count(); i-- > 0;) {
    const TreeNode& n = tree.node(i);
    if (n.is_leaf) {
      built[i] = classify ? MakeReturn(n.label) : MakeReturn(n.value);
      continue;
    }
    FeatureExpr expr{mask.original_index(n.feature.first()), std::nullopt};
    if (n.feature.is_oblique()) {
      expr.rhs = mask.original_index(n.feature.second());
    }
    built[i] = MakeIf({expr, Comparator::kLe, n.threshold},
                      built[static_cast<std::size_t>(n.left)],
                      built[static_cast<std::size_t>(n.right)]);
  }
  return Program(mask.original_names(), action_spec, built[0]);
}

Program TreeToProgram(const TreePolicy& policy) {
  return TreeToProgram(policy.tree(), policy.mask(), policy.action_spec());
}

}  // namespace obdistill
