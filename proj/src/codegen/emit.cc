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
#include <charconv>
#include <string>
#include <utility>

#include "obdistill/codegen.h"
#include "obdistill/error.h"

namespace obdistill {

using nlohmann::json;

std::string FormatNumber(double x) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), x);
  std::string out(buf, result.ptr);
  if (out.find_first_of(".eni") == std::string::npos) out += ".0";
  return out;
}

namespace {

constexpr const char* kProgramFormat = "obdistill-program/1";

std::string Quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string ExprText(const FeatureExpr& e,
                     const std::vector<std::string>& names) {
  if (!e.rhs) return names[e.lhs];
  return names[e.lhs] + " - " + names[*e.rhs];
}

std::string ActionText(const Action& a, const ActionSpec& spec) {
  if (IsDiscrete(a)) return Quote(spec.action_names()[DiscreteIndex(a)]);
  std::string out = "[";
  const auto& v = ContinuousValues(a);
  for (std::size_t d = 0; d < v.size(); ++d) {
    if (d > 0) out += ", ";
    out += FormatNumber(v[d]);
  }
  return out + "]";
}

void EmitNode(const ProgramNode& n, const Program& program, int depth,
              std::string& out) {
  const std::string indent(static_cast<std::size_t>(depth) * 4, ' ');
  if (n.is_return()) {
    out += indent + "return " +
           ActionText(n.as_return().action, program.action_spec()) + "\n";
    return;
  }
  const IfNode& branch = n.as_if();
  out += indent + "if " +
         ExprText(branch.condition.expr, program.feature_names()) + " " +
         std::string(ToString(branch.condition.op)) + " " +
         FormatNumber(branch.condition.threshold) + ":\n";
  EmitNode(*branch.then_branch, program, depth + 1, out);
  out += indent + "else:\n";
  EmitNode(*branch.else_branch, program, depth + 1, out);
}

json ActionJson(const Action& a, const ActionSpec& spec) {
  if (IsDiscrete(a)) return spec.action_names()[DiscreteIndex(a)];
  return ContinuousValues(a);
}

json NodeJson(const ProgramNode& n, const Program& program) {
  if (n.is_return()) {
    return {{"return", ActionJson(n.as_return().action, program.action_spec())}};
  }
  const IfNode& branch = n.as_if();
  const FeatureExpr& e = branch.condition.expr;
  json cond = {{"lhs", program.feature_names()[e.lhs]},
               {"op", std::string(ToString(branch.condition.op))},
               {"threshold", branch.condition.threshold}};
  if (e.rhs) cond["rhs"] = program.feature_names()[*e.rhs];
  return {{"if", cond},
          {"then", NodeJson(*branch.then_branch, program)},
          {"else", NodeJson(*branch.else_branch, program)}};
}

std::size_t FeatureIndex(const std::vector<std::string>& names,
                         const std::string& name) {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw Error(ErrorCode::kUnknownFeatureName, "unknown feature \"" + name + "\"");
}

ProgramNodePtr NodeFromJson(const json& j, const std::vector<std::string>& names,
                            const ActionSpec& spec) {
  if (!j.is_object()) throw Error(ErrorCode::kParseError, "bad program node");
  if (j.contains("return")) {
    const json& r = j.at("return");
    if (r.is_string()) {
      const auto name = r.get<std::string>();
      auto index = spec.FindAction(name);
      if (!index) {
        throw Error(ErrorCode::kUnknownActionName,
                    "unknown action \"" + name + "\"");
      }
      return MakeReturn(*index);
    }
    return MakeReturn(r.get<ContinuousAction>());
  }
  const json& c = j.at("if");
  Condition cond;
  cond.expr.lhs = FeatureIndex(names, c.at("lhs").get<std::string>());
  if (c.contains("rhs")) {
    cond.expr.rhs = FeatureIndex(names, c.at("rhs").get<std::string>());
  }
  const auto op = c.at("op").get<std::string>();
  if (op == "<=") {
    cond.op = Comparator::kLe;
  } else if (op == "<") {
    cond.op = Comparator::kLt;
  } else if (op == ">") {
    cond.op = Comparator::kGt;
  } else if (op == ">=") {
    cond.op = Comparator::kGe;
  } else {
    throw Error(ErrorCode::kParseError, "unknown comparator \"" + op + "\"");
  }
  cond.threshold = c.at("threshold").get<double>();
  return MakeIf(cond, NodeFromJson(j.at("then"), names, spec),
                NodeFromJson(j.at("else"), names, spec));
}

}  // namespace

std::string EmitProgram(const Program& program, std::string_view function_name) {
  // One parameter per object prefix ("ball" for "ball.y"), in order.
  std::vector<std::string> params;
  for (const std::string& name : program.feature_names()) {
    std::string prefix = name.substr(0, name.find('.'));
    if (std::find(params.begin(), params.end(), prefix) == params.end()) {
      params.push_back(std::move(prefix));
    }
  }
  std::string out = "def " + std::string(function_name) + "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i > 0) out += ", ";
    out += params[i];
  }
  out += "):\n";
  EmitNode(*program.root(), program, 1, out);
  return out;
}

json ProgramToJson(const Program& program) {
  return {{"format", kProgramFormat},
          {"features", program.feature_names()},
          {"action", ActionSpecToJson(program.action_spec())},
          {"root", NodeJson(*program.root(), program)}};
}

Program ProgramFromJson(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kProgramFormat) {
      throw Error(ErrorCode::kParseError, "not a program file");
    }
    auto names = j.at("features").get<std::vector<std::string>>();
    ActionSpec spec = ActionSpecFromJson(j.at("action"));
    ProgramNodePtr root = NodeFromJson(j.at("root"), names, spec);
    return Program(std::move(names), std::move(spec), std::move(root));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("bad program: ") + e.what());
  }
}

}  // namespace obdistill
