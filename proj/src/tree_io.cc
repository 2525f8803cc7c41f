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

#include <string>

#include "obdistill/cart.h"
#include "obdistill/error.h"

namespace obdistill {
namespace {

using nlohmann::json;

constexpr const char* kTreeFormat = "obdistill-tree/1";

template <typename T>
T Get(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::kParseError,
                std::string("missing field \"") + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("bad field \"") + key + "\": " + e.what());
  }
}

json MaskToJson(const FeatureMask& mask) {
  return {{"original_names", mask.original_names()}, {"keep", mask.keep()}};
}

FeatureMask MaskFromJson(const json& j) {
  try {
    return FeatureMask(Get<std::vector<std::string>>(j, "original_names"),
                       Get<std::vector<std::size_t>>(j, "keep"));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    throw Error(ErrorCode::kParseError, std::string("bad mask: ") + e.what());
  }
}

}  // namespace

json ActionSpecToJson(const ActionSpec& spec) {
  if (spec.is_discrete()) {
    return {{"kind", "discrete"}, {"names", spec.action_names()}};
  }
  return {{"kind", "continuous"}, {"low", spec.low()}, {"high", spec.high()}};
}

ActionSpec ActionSpecFromJson(const json& j) {
  const auto kind = Get<std::string>(j, "kind");
  try {
    if (kind == "discrete") {
      return ActionSpec::Discrete(Get<std::vector<std::string>>(j, "names"));
    }
    if (kind == "continuous") {
      return ActionSpec::Continuous(Get<std::vector<double>>(j, "low"),
                                    Get<std::vector<double>>(j, "high"));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    throw Error(ErrorCode::kParseError,
                std::string("bad action space: ") + e.what());
  }
  throw Error(ErrorCode::kParseError, "unknown action kind \"" + kind + "\"");
}

json FeatureRefToJson(const FeatureRef& f) {
  if (f.is_oblique()) return {{"oblique", {f.first(), f.second()}}};
  return {{"raw", f.first()}};
}

FeatureRef FeatureRefFromJson(const json& j) {
  if (j.is_object() && j.contains("raw")) {
    return FeatureRef::Raw(Get<std::size_t>(j, "raw"));
  }
  if (j.is_object() && j.contains("oblique")) {
    const auto pair = Get<std::vector<std::size_t>>(j, "oblique");
    if (pair.size() != 2 || pair[0] == pair[1]) {
      throw Error(ErrorCode::kParseError, "oblique feature needs two indices");
    }
    return FeatureRef::Oblique(pair[0], pair[1]);
  }
  throw Error(ErrorCode::kParseError, "feature must be {raw} or {oblique}");
}

json TreePolicyToJson(const TreePolicy& policy) {
  const ObliqueTree& tree = policy.tree();
  json nodes = json::array();
  for (const TreeNode& n : tree.nodes()) {
    json node = {{"kind", n.is_leaf ? "leaf" : "split"},
                 {"samples", n.samples},
                 {"weight", n.weight},
                 {"impurity", n.impurity}};
    if (n.is_leaf) {
      if (tree.task() == TreeTask::kClassify) {
        node["action"] = n.label;
        node["class_weights"] = n.value;
      } else {
        node["value"] = n.value;
      }
    } else {
      node["feature"] = FeatureRefToJson(n.feature);
      node["name"] = FeatureName(n.feature, policy.mask());
      node["threshold"] = n.threshold;
      node["impurity_decrease"] = n.impurity_decrease;
      node["left"] = n.left;
      node["right"] = n.right;
    }
    nodes.push_back(std::move(node));
  }
  return {{"format", kTreeFormat},
          {"task", tree.task() == TreeTask::kClassify ? "classify" : "regress"},
          {"arity", tree.arity()},
          {"outputs", tree.outputs()},
          {"action", ActionSpecToJson(policy.action_spec())},
          {"mask", MaskToJson(policy.mask())},
          {"nodes", std::move(nodes)}};
}

TreePolicy TreePolicyFromJson(const json& j) {
  if (Get<std::string>(j, "format") != kTreeFormat) {
    throw Error(ErrorCode::kParseError, "not a tree file");
  }
  const auto task_name = Get<std::string>(j, "task");
  if (task_name != "classify" && task_name != "regress") {
    throw Error(ErrorCode::kParseError, "unknown task \"" + task_name + "\"");
  }
  const TreeTask task =
      task_name == "classify" ? TreeTask::kClassify : TreeTask::kRegress;
  const json raw_nodes = Get<json>(j, "nodes");
  if (!raw_nodes.is_array()) {
    throw Error(ErrorCode::kParseError, "\"nodes\" must be an array");
  }
  std::vector<TreeNode> nodes;
  for (const json& r : raw_nodes) {
    TreeNode n;
    const auto kind = Get<std::string>(r, "kind");
    if (kind != "leaf" && kind != "split") {
      throw Error(ErrorCode::kParseError, "unknown node kind \"" + kind + "\"");
    }
    n.is_leaf = kind == "leaf";
    n.samples = Get<std::size_t>(r, "samples");
    n.weight = Get<double>(r, "weight");
    n.impurity = Get<double>(r, "impurity");
    if (n.is_leaf) {
      if (task == TreeTask::kClassify) {
        n.label = Get<std::size_t>(r, "action");
        n.value = Get<std::vector<double>>(r, "class_weights");
      } else {
        n.value = Get<std::vector<double>>(r, "value");
      }
    } else {
      n.feature = FeatureRefFromJson(Get<json>(r, "feature"));
      n.threshold = Get<double>(r, "threshold");
      n.impurity_decrease = Get<double>(r, "impurity_decrease");
      n.left = Get<std::int32_t>(r, "left");
      n.right = Get<std::int32_t>(r, "right");
    }
    nodes.push_back(std::move(n));
  }
  try {
    auto tree = std::make_shared<const ObliqueTree>(
        task, Get<std::size_t>(j, "arity"), Get<std::size_t>(j, "outputs"),
        std::move(nodes));
    return TreePolicy(std::move(tree), MaskFromJson(Get<json>(j, "mask")),
                      ActionSpecFromJson(Get<json>(j, "action")));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError) throw;
    throw Error(ErrorCode::kParseError, std::string("bad tree: ") + e.what());
  }
}

json ImportanceJson(const ObliqueTree& tree, const FeatureMask& mask) {
  json out = json::array();
  for (const auto& [feature, value] : FeatureImportance(tree)) {
    out.push_back({{"feature", FeatureName(feature, mask)},
                   {"ref", FeatureRefToJson(feature)},
                   {"importance", value}});
  }
  return out;
}

}  // namespace obdistill
