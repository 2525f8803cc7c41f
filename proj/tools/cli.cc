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

#include "cli.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "obdistill/cart.h"
#include "obdistill/codegen.h"
#include "obdistill/core.h"
#include "obdistill/envs.h"
#include "obdistill/error.h"
#include "obdistill/features.h"
#include "obdistill/imitation.h"
#include "obdistill/oracle.h"

namespace obdistill {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Raised for bad flags or config values; exit status 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json ReadJson(const fs::path& path) {
  try {
    return json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
  }
}

// Writes next to the target and renames over it.
void WriteAtomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot rename " + tmp.string() + ": " + ec.message());
  }
}

std::string Pretty(const json& j) { return j.dump(2) + "\n"; }

std::string Trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// key=value lines; '#' starts a comment. Values fill options not given as
// flags, so flags take precedence.
void ApplyConfigFile(CLI::App& sub, const std::string& path) {
  std::istringstream in(ReadFile(path));
  std::string raw;
  std::size_t number = 0;
  while (std::getline(in, raw)) {
    ++number;
    std::string line = Trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path + ":" + std::to_string(number);
    if (eq == std::string::npos) {
      throw UsageError(where + ": expected key=value");
    }
    const std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key == "config") throw UsageError(where + ": config files do not nest");
    CLI::Option* option = nullptr;
    try {
      option = sub.get_option("--" + key);
    } catch (const CLI::OptionNotFound&) {
      throw UsageError(where + ": unknown key \"" + key + "\"");
    }
    if (option->count() > 0) continue;
    option->add_result(value);
    option->run_callback();
  }
}

std::uint64_t ParseSeed(const std::string& text, const std::string& what) {
  std::uint64_t value = 0;
  const auto result =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw UsageError(what + " must be an unsigned 64-bit integer, got \"" +
                     text + "\"");
  }
  return value;
}

// --seed, unless OBDISTILL_SEED is set.
std::uint64_t ResolveSeed(std::uint64_t flag) {
  if (const char* env = std::getenv("OBDISTILL_SEED"); env != nullptr && *env) {
    return ParseSeed(env, "OBDISTILL_SEED");
  }
  return flag;
}

struct LoadedPolicy {
  std::shared_ptr<const Policy> policy;
  std::string kind;  // oracle, tree or program
  std::optional<TreePolicy> tree;
  std::optional<Program> program;
};

void CheckTreeMatchesEnv(const TreePolicy& tree, const Environment& env) {
  if (tree.mask().original_names() != env.state_spec().feature_names ||
      !(tree.action_spec() == env.action_spec())) {
    throw Error(ErrorCode::kSpecMismatch,
                "tree was not trained on " + env.name());
  }
}

void CheckProgramMatchesEnv(const Program& program, const Environment& env) {
  if (program.feature_names() != env.state_spec().feature_names ||
      !(program.action_spec() == env.action_spec())) {
    throw Error(ErrorCode::kSpecMismatch,
                "program was not written for " + env.name());
  }
}

// builtin:NAME, an oracle/tree/program JSON file, or program text (.py, .txt).
LoadedPolicy LoadPolicy(const std::string& spec, const Environment& env) {
  LoadedPolicy out;
  if (spec.rfind("builtin:", 0) == 0) {
    out.policy = ResolveOracle(spec);
    out.kind = "oracle";
    return out;
  }
  const fs::path path(spec);
  const std::string ext = path.extension().string();
  if (ext == ".py" || ext == ".txt") {
    out.program = ParseProgram(ReadFile(path), env.state_spec().feature_names,
                               env.action_spec());
    out.policy = std::make_shared<ProgramPolicy>(*out.program);
    out.kind = "program";
    return out;
  }
  if (ext != ".json") {
    throw Error(ErrorCode::kIoError,
                "unsupported policy file \"" + spec +
                    "\" (expected .json, .py, .txt or builtin:NAME)");
  }
  const json j = ReadJson(path);
  const std::string format =
      j.is_object() && j.contains("format") && j["format"].is_string()
          ? j["format"].get<std::string>()
          : "";
  if (format == "obdistill-tree/1") {
    out.tree = TreePolicyFromJson(j);
    CheckTreeMatchesEnv(*out.tree, env);
    out.policy = std::make_shared<TreePolicy>(*out.tree);
    out.kind = "tree";
  } else if (format == "obdistill-program/1") {
    out.program = ProgramFromJson(j);
    CheckProgramMatchesEnv(*out.program, env);
    out.policy = std::make_shared<ProgramPolicy>(*out.program);
    out.kind = "program";
  } else {
    out.policy = std::shared_ptr<const Oracle>(OracleFromJson(j));
    out.kind = "oracle";
  }
  return out;
}

json StatsJson(const ReturnStats& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"returns", s.per_episode}};
}

json NullableRatio(double num, double den) {
  const double r = num / den;
  return std::isfinite(r) ? json(r) : json(nullptr);
}

// ---------------------------------------------------------------------------
// distill

struct DistillFlags {
  std::string env = "toypong";
  std::string oracle;
  std::string out;
  std::size_t leaves = 8;
  std::size_t iters = 10;
  std::size_t transitions = 10000;
  std::uint64_t seed = 0;
  std::string subroutine = "auto";
  std::size_t episodes = 10;
  bool oblique = true;
  std::string weight_rule = "mean-min";
  double idle_epsilon = 1e-9;
  std::size_t jobs = 1;
  bool sticky = false;
};

int RunDistill(const DistillFlags& f, std::ostream& out) {
  DistillConfig config;
  config.max_leaves = f.leaves;
  config.iterations = f.iters;
  config.transitions = f.transitions;
  config.seed = ResolveSeed(f.seed);
  config.subroutine = *ParseSubroutine(f.subroutine);
  config.eval_episodes = f.episodes;
  config.oblique = f.oblique;
  config.weight_rule = f.weight_rule == "max-min" ? WeightRule::kMaxMinusMin
                                                  : WeightRule::kMeanMinusMin;
  config.idle_epsilon = f.idle_epsilon;
  config.jobs = f.jobs;

  EnvOptions env_options;
  env_options.sticky_actions = f.sticky;
  auto env = MakeEnvironment(f.env, env_options);
  auto oracle = ResolveOracle(f.oracle);

  const fs::path dir(f.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create " + dir.string() + ": " + ec.message());
  }

  ImitationRun run;
  try {
    run = Distill(oracle, *env, config);
  } catch (const DistillError& e) {
    WriteAtomic(dir / "run_report.json", Pretty(RunReportJson(e.partial())));
    throw;
  }

  const TreePolicy best = run.best_policy();
  PruneStats prune_stats;
  const Program program = PruneProgram(TreeToProgram(best), &prune_stats);
  json importances = json::array();
  if (best.tree().internal_count() > 0) {
    importances = ImportanceJson(best.tree(), best.mask());
  } else {
    run.warnings.push_back("best tree is a single leaf; no importances");
  }

  json report = RunReportJson(run);
  report["program"] = {{"ifs", program.Stats().ifs},
                       {"returns", program.Stats().returns},
                       {"depth", program.Stats().depth},
                       {"merged_branches", prune_stats.merged_branches},
                       {"decided_conditions", prune_stats.decided_conditions}};

  WriteAtomic(dir / "tree.json", Pretty(TreePolicyToJson(best)));
  WriteAtomic(dir / "program.py", EmitProgram(program));
  WriteAtomic(dir / "program_ast.json", Pretty(ProgramToJson(program)));
  WriteAtomic(dir / "mask_report.json", Pretty(MaskReportJson(run.mask_report)));
  WriteAtomic(dir / "importances.json", Pretty(importances));
  WriteAtomic(dir / "run_report.json", Pretty(report));

  // Timings stay out of the artifacts so that reruns are byte-identical.
  json fit_seconds = json::array();
  for (const IterationRecord& r : run.iterations) fit_seconds.push_back(r.fit_seconds);
  out << Pretty({{"out", dir.string()},
                 {"best_index", run.best_index},
                 {"best_eval_mean", run.eval_scores[run.best_index]},
                 {"oracle_eval_mean", run.oracle_eval.mean},
                 {"normalized_score", report["normalized_score"]},
                 {"leaves", best.tree().leaf_count()},
                 {"fit_seconds", fit_seconds},
                 {"warnings", run.warnings}});
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalFlags {
  std::string env = "toypong";
  std::string policy;
  std::string baseline;
  std::string compare;
  std::size_t episodes = 10;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool sticky = false;
};

int RunEval(const EvalFlags& f, std::ostream& out) {
  EnvOptions env_options;
  env_options.sticky_actions = f.sticky;
  auto env = MakeEnvironment(f.env, env_options);
  const std::uint64_t seed = ResolveSeed(f.seed);
  const LoadedPolicy policy = LoadPolicy(f.policy, *env);
  const ReturnStats stats =
      EvaluateReturn(*policy.policy, *env, f.episodes, seed, f.jobs);
  json report = {{"env", env->name()},
                 {"policy", f.policy},
                 {"kind", policy.kind},
                 {"episodes", f.episodes},
                 {"seed", seed},
                 {"return", StatsJson(stats)}};
  if (!f.baseline.empty()) {
    const LoadedPolicy baseline = LoadPolicy(f.baseline, *env);
    const ReturnStats base =
        EvaluateReturn(*baseline.policy, *env, f.episodes, seed, f.jobs);
    report["baseline"] = {{"policy", f.baseline}, {"return", StatsJson(base)}};
    report["normalized_score"] = NullableRatio(stats.mean, base.mean);
  }
  if (!f.compare.empty()) {
    const LoadedPolicy other = LoadPolicy(f.compare, *env);
    report["compare"] = {
        {"policy", f.compare},
        {"return", StatsJson(EvaluateReturn(*other.policy, *env, f.episodes,
                                            seed, f.jobs))},
        {"agreement",
         ActionAgreement(*policy.policy, *other.policy, *env, f.episodes, seed)}};
  }
  out << Pretty(report);
  return 0;
}

// ---------------------------------------------------------------------------
// bench-inference

struct BenchFlags {
  std::string env = "toypong";
  std::string policy;
  std::string oracle;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
};

json LatencyJson(std::vector<double> micros) {
  double sum = 0.0;
  for (double m : micros) sum += m;
  std::sort(micros.begin(), micros.end());
  auto quantile = [&micros](double q) {
    const auto k = static_cast<std::size_t>(
        q * static_cast<double>(micros.size() - 1) + 0.5);
    return micros[std::min(k, micros.size() - 1)];
  };
  return {{"mean_us", sum / static_cast<double>(micros.size())},
          {"p50_us", quantile(0.5)},
          {"p99_us", quantile(0.99)}};
}

// Per-call latency of `policy` on every state; actions go to `actions`.
std::vector<double> TimeCalls(const Policy& policy,
                              const std::vector<State>& states,
                              std::vector<Action>& actions) {
  using Clock = std::chrono::steady_clock;
  std::vector<double> micros;
  micros.reserve(states.size());
  actions.clear();
  actions.reserve(states.size());
  for (const State& s : states) {
    const auto start = Clock::now();
    Action a = policy.Act(s);
    const auto stop = Clock::now();
    micros.push_back(std::chrono::duration<double, std::micro>(stop - start)
                         .count());
    actions.push_back(std::move(a));
  }
  return micros;
}

int RunBench(const BenchFlags& f, std::ostream& out) {
  auto env = MakeEnvironment(f.env);
  const std::uint64_t seed = ResolveSeed(f.seed);
  const LoadedPolicy loaded = LoadPolicy(f.policy, *env);

  // Valid states: those visited by the policy itself.
  const std::vector<State> states =
      Rollout(*loaded.policy, *env, f.samples, seed).states;

  json reps = json::object();
  std::vector<Action> first, second;
  std::optional<double> agreement;
  if (loaded.tree) {
    const ProgramPolicy program(PruneProgram(TreeToProgram(*loaded.tree)));
    reps["tree"] = LatencyJson(TimeCalls(*loaded.policy, states, first));
    reps["program"] = LatencyJson(TimeCalls(program, states, second));
    std::size_t same = 0;
    for (std::size_t k = 0; k < states.size(); ++k) {
      same += first[k] == second[k] ? 1 : 0;
    }
    agreement = static_cast<double>(same) / static_cast<double>(states.size());
  } else {
    reps[loaded.kind] = LatencyJson(TimeCalls(*loaded.policy, states, first));
  }
  if (!f.oracle.empty()) {
    const LoadedPolicy oracle = LoadPolicy(f.oracle, *env);
    reps["oracle"] = LatencyJson(TimeCalls(*oracle.policy, states, second));
  }
  json report = {{"env", env->name()},
                 {"policy", f.policy},
                 {"samples", states.size()},
                 {"seed", seed},
                 {"latency", reps}};
  if (agreement) report["tree_program_agreement"] = *agreement;
  out << Pretty(report);
  return 0;
}

// ---------------------------------------------------------------------------
// mask-report, importances

struct MaskFlags {
  std::string env = "toypong";
  std::string oracle;
  std::size_t transitions = 10000;
  std::uint64_t seed = 0;
  double idle_epsilon = 1e-9;
};

int RunMaskReport(const MaskFlags& f, std::ostream& out) {
  auto env = MakeEnvironment(f.env);
  auto oracle = ResolveOracle(f.oracle);
  const RolloutBatch probe =
      Rollout(*oracle, *env, f.transitions, ProbeSeed(ResolveSeed(f.seed)));
  out << Pretty(MaskReportJson(
      DetectIdleFeatures(probe.states, env->state_spec(), f.idle_epsilon)));
  return 0;
}

int RunImportances(const std::string& tree_path, std::ostream& out) {
  const TreePolicy tree = TreePolicyFromJson(ReadJson(tree_path));
  out << Pretty(ImportanceJson(tree.tree(), tree.mask()));
  return 0;
}

void PrintError(std::ostream& err, std::string_view code,
                const std::string& message, const json& extra = nullptr) {
  json j = {{"error", {{"code", code}, {"message", message}}}};
  if (!extra.is_null()) j["error"]["partial_run"] = extra;
  err << j.dump() << "\n";
}

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app("Distill policies into oblique decision trees and programs.",
               "obdistill");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  auto positive = CLI::PositiveNumber;
  std::map<CLI::App*, std::string> configs;
  auto add_config = [&configs](CLI::App* sub) {
    sub->add_option("--config", configs[sub],
                    "key=value file; flags take precedence");
  };
  std::string seed_text;
  auto add_seed = [&seed_text](CLI::App* sub) {
    sub->add_option("--seed", seed_text,
                    "run seed (OBDISTILL_SEED overrides)");
  };
  const auto envs = EnvironmentNames();

  DistillFlags distill;
  auto* d = app.add_subcommand("distill", "run the imitation loop");
  d->add_option("--env", distill.env, "environment")
      ->check(CLI::IsMember(envs))
      ->capture_default_str();
  d->add_option("--oracle", distill.oracle, "builtin:NAME or oracle file")
      ->required();
  d->add_option("--out", distill.out, "artifact directory")->required();
  d->add_option("--leaves", distill.leaves, "max leaves K")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1} << 20))
      ->capture_default_str();
  d->add_option("--iters", distill.iters, "iterations N")
      ->check(positive)
      ->capture_default_str();
  d->add_option("--transitions", distill.transitions, "transitions per iteration")
      ->check(positive)
      ->capture_default_str();
  add_seed(d);
  d->add_option("--subroutine", distill.subroutine)
      ->check(CLI::IsMember({"auto", "dagger", "qdagger"}))
      ->capture_default_str();
  d->add_option("--episodes", distill.episodes, "evaluation episodes per tree")
      ->check(positive)
      ->capture_default_str();
  d->add_flag("--oblique,!--no-oblique", distill.oblique,
              "pairwise-difference features");
  d->add_option("--weight-rule", distill.weight_rule)
      ->check(CLI::IsMember({"mean-min", "max-min"}))
      ->capture_default_str();
  d->add_option("--idle-epsilon", distill.idle_epsilon)
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  d->add_option("--jobs", distill.jobs)->check(positive)->capture_default_str();
  d->add_flag("--sticky", distill.sticky, "sticky actions (p = 0.25)");
  add_config(d);

  EvalFlags eval;
  auto* e = app.add_subcommand("eval", "evaluate a policy");
  e->add_option("--env", eval.env)->check(CLI::IsMember(envs))
      ->capture_default_str();
  e->add_option("--policy", eval.policy, "tree/program/oracle file or builtin:NAME")
      ->required();
  e->add_option("--baseline", eval.baseline, "oracle for the normalized score");
  e->add_option("--compare", eval.compare, "policy to measure agreement with");
  e->add_option("--episodes", eval.episodes)->check(positive)
      ->capture_default_str();
  add_seed(e);
  e->add_option("--jobs", eval.jobs)->check(positive)->capture_default_str();
  e->add_flag("--sticky", eval.sticky, "sticky actions (p = 0.25)");
  add_config(e);

  BenchFlags bench;
  auto* b = app.add_subcommand("bench-inference", "per-call inference latency");
  b->add_option("--env", bench.env)->check(CLI::IsMember(envs))
      ->capture_default_str();
  b->add_option("--policy", bench.policy)->required();
  b->add_option("--oracle", bench.oracle, "also time this oracle");
  b->add_option("--samples", bench.samples, "states to time (>= 1000)")
      ->check(CLI::Range(std::size_t{1000}, std::size_t{100000000}))
      ->capture_default_str();
  add_seed(b);
  add_config(b);

  MaskFlags mask;
  auto* m = app.add_subcommand("mask-report", "idle features of a probe rollout");
  m->add_option("--env", mask.env)->check(CLI::IsMember(envs))
      ->capture_default_str();
  m->add_option("--oracle", mask.oracle)->required();
  m->add_option("--transitions", mask.transitions)->check(positive)
      ->capture_default_str();
  add_seed(m);
  m->add_option("--idle-epsilon", mask.idle_epsilon)
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  add_config(m);

  std::string tree_path;
  auto* im = app.add_subcommand("importances", "feature importances of a tree");
  im->add_option("--tree", tree_path, "tree.json")->required();
  add_config(im);

  std::string info_env = "toypong";
  auto* info = app.add_subcommand("env-info", "environment metadata");
  info->add_option("--env", info_env)->check(CLI::IsMember(envs))
      ->capture_default_str();

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);

  try {
    try {
      app.parse(args);
      CLI::App* sub = app.get_subcommands().front();
      if (configs.count(sub) && !configs[sub].empty()) {
        ApplyConfigFile(*sub, configs[sub]);
      }
      const std::uint64_t seed =
          seed_text.empty() ? 0 : ParseSeed(seed_text, "--seed");
      distill.seed = eval.seed = bench.seed = seed;
      mask.seed = seed;
    } catch (const CLI::Success& x) {
      return app.exit(x, out, err);
    } catch (const CLI::ParseError& e) {
      throw UsageError(e.what());
    }
    if (d->parsed()) return RunDistill(distill, out);
    if (e->parsed()) return RunEval(eval, out);
    if (b->parsed()) return RunBench(bench, out);
    if (m->parsed()) return RunMaskReport(mask, out);
    if (info->parsed()) {
      out << Pretty(EnvironmentInfoJson(*MakeEnvironment(info_env)));
      return 0;
    }
    return RunImportances(tree_path, out);
  } catch (const UsageError& x) {
    PrintError(err, "UsageError", x.what());
    return 2;
  } catch (const DistillError& x) {
    PrintError(err, ToString(x.code()), x.what(), RunReportJson(x.partial()));
    return 1;
  } catch (const Error& x) {
    PrintError(err, ToString(x.code()), x.what());
    return 1;
  } catch (const json::exception& x) {
    PrintError(err, "ParseError", x.what());
    return 1;
  } catch (const std::exception& x) {
    PrintError(err, "Internal", x.what());
    return 1;
  }
}

}  // namespace obdistill
