#include "dualtrack/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>

#include <CLI11.hpp>

#include "dualtrack/dataset.hpp"
#include "dualtrack/harness.hpp"

namespace dualtrack {

namespace fs = std::filesystem;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string script_path;
  std::string api_base;
  std::string out_dir;
  std::optional<std::int64_t> budget;
  std::optional<bool> cache;
  std::optional<int> max_retries;
  std::optional<int> threshold;
  std::optional<int> max_steps;
  std::optional<int> workers;
};

void add_common_flags(CLI::App& cmd, CommonFlags& flags) {
  cmd.add_option("--config", flags.config_path, "JSON run configuration");
  cmd.add_option("--script", flags.script_path, "Scripted replies or trace to replay instead of a live endpoint");
  cmd.add_option("--api-base", flags.api_base, "Chat-completion endpoint base URL");
  cmd.add_option("--out", flags.out_dir, "Output directory");
  cmd.add_option("--budget", flags.budget, "Token budget per problem");
  cmd.add_flag("--cache{true},--no-cache{false}", flags.cache, "Enable or disable the rejection cache");
  cmd.add_option("--max-retries", flags.max_retries, "Retries per step before a forced accept");
  cmd.add_option("--threshold", flags.threshold, "Accept a step when its score is above this value");
  cmd.add_option("--max-steps", flags.max_steps, "Maximum accepted steps per problem");
  cmd.add_option("--workers", flags.workers, "Problems solved concurrently");
}

// Precedence: flags > environment > file.
RunConfig resolve_config(const CommonFlags& flags, const EnvLookup& env) {
  RunConfig config = flags.config_path.empty() ? RunConfig{} : RunConfig::load(flags.config_path);
  config.apply_env(env);
  if (!flags.api_base.empty()) config.api_base = flags.api_base;
  if (!flags.out_dir.empty()) config.output_dir = flags.out_dir;
  if (flags.budget) config.solver.token_budget = *flags.budget;
  if (flags.cache) config.solver.cache_enabled = *flags.cache;
  if (flags.max_retries) config.solver.max_retries_per_step = *flags.max_retries;
  if (flags.threshold) config.solver.accept_threshold = *flags.threshold;
  if (flags.max_steps) config.solver.max_steps = *flags.max_steps;
  if (flags.workers) config.workers = *flags.workers;
  config.validate(flags.script_path.empty());
  return config;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::data_error, "cannot read '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::data_error, "'" + path + "' is not valid JSON: " + e.what());
  }
}

// A fixture is a single script (or trace), or {"scripts": {id: script|trace}}.
class ScriptLibrary {
 public:
  explicit ScriptLibrary(const nlohmann::json& doc) {
    if (doc.is_object() && doc.contains("scripts")) {
      for (const auto& [id, entry] : doc.at("scripts").items()) by_id_.emplace(id, Script::from_json(entry));
    } else {
      shared_ = Script::from_json(doc);
    }
  }

  Script for_problem(const Problem& problem) const {
    if (shared_) return *shared_;
    auto it = by_id_.find(problem.id);
    if (it == by_id_.end()) throw Error(ErrorCode::data_error, "script fixture has no entry for '" + problem.id + "'");
    return it->second;
  }

 private:
  std::optional<Script> shared_;
  std::map<std::string, Script> by_id_;
};

BackendFactory make_factory(const RunConfig& config, const std::string& script_path) {
  if (!script_path.empty()) {
    auto library = std::make_shared<ScriptLibrary>(read_json_file(script_path));
    return [library](const Problem& problem) {
      auto backend = std::make_shared<ScriptedBackend>(library->for_problem(problem));
      return BackendPair{backend, backend};
    };
  }
  auto live = std::make_shared<HttpBackend>(config.http_config());
  return [live](const Problem&) { return BackendPair{live, live}; };
}

std::vector<Problem> load_problems(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::data_error, "cannot read problems file '" + path + "'");
  auto problems = read_problems(in);
  if (problems.empty()) throw Error(ErrorCode::data_error, "problems file '" + path + "' is empty");
  for (const auto& p : problems) {
    if (!p.gold_answer) throw Error(ErrorCode::data_error, "problem '" + p.id + "' has no gold answer");
  }
  return problems;
}

void print_trace(const SolveTrace& trace, std::ostream& out) {
  for (const auto& e : trace.events) {
    const auto& p = e.payload;
    switch (e.kind) {
      case EventKind::generated:
        if (p.contains("step")) {
          const auto& step = p["step"];
          const auto kind = step["kind"].get<std::string>() == "final" ? kFinalPrefix : kStepPrefix;
          out << "[step " << e.slot << "] " << kind << ' ' << step["text"].get<std::string>() << '\n';
        } else {
          out << "[step " << e.slot << "] unusable output: " << p["malformed"].get<std::string>() << '\n';
        }
        break;
      case EventKind::cache_rejected:
        out << "    cache " << p["decision"].get<std::string>() << " [" << p["fingerprint"].get<std::string>()
            << "] score 0\n";
        break;
      case EventKind::evaluated:
        out << "    score " << p["score"].get<int>() << ": " << p["feedback"].get<std::string>() << '\n';
        break;
      case EventKind::retried:
        out << "    retry " << p["retries"].get<int>();
        if (!p["hint"].is_null()) out << " with hint: " << p["hint"].get<std::string>();
        out << '\n';
        break;
      case EventKind::accepted: out << "    accepted\n"; break;
      case EventKind::forced_accept: out << "    forced accept\n"; break;
      case EventKind::budget_stop:
        out << "budget exhausted: spent " << p["spent"] << " of " << p["limit"] << " tokens\n";
        break;
      case EventKind::step_limit_stop: out << "step limit reached\n"; break;
      case EventKind::finished: break;
    }
  }
  out << "outcome: " << to_string(trace.outcome) << '\n';
  if (!trace.error.empty()) out << "error: " << trace.error << '\n';
  if (trace.final_answer) out << "final answer: " << trace.final_answer->str() << '\n';
  out << "tokens: " << trace.ledger.spent_total() << " (decomposer " << trace.ledger.spent(Role::decomposer)
      << ", evaluator " << trace.ledger.spent(Role::evaluator) << ")\n";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << text;
}

int cmd_prep(const std::string& input, const std::string& output, double split, std::uint64_t seed, bool prm,
             std::ostream& out) {
  std::ifstream in(input);
  if (!in) throw Error(ErrorCode::data_error, "cannot read input file '" + input + "'");
  fs::create_directories(output);

  if (prm) {
    const auto records = read_prm(in);
    std::string text;
    for (const auto& r : records) {
      text += nlohmann::ordered_json{{"text", r.text}, {"rating", r.rating}, {"score", r.mapped_score}}.dump() + "\n";
    }
    write_file(fs::path(output) / "ratings.jsonl", text);
    out << "ratings: " << records.size() << '\n';
    return kExitOk;
  }

  const auto examples = read_gsm8k(in);
  const auto prepared = prepare_instances(examples, split, seed);
  std::string train;
  for (const auto& i : prepared.train) train += serialize_instance(i) + "\n";
  std::string validation;
  for (const auto& i : prepared.validation) validation += serialize_instance(i) + "\n";
  write_file(fs::path(output) / "train.jsonl", train);
  write_file(fs::path(output) / "validation.jsonl", validation);
  write_file(fs::path(output) / "stats.json", prepared.stats.to_json().dump(2) + "\n");

  const auto& s = prepared.stats;
  out << "examples: " << s.examples << '\n'
      << "instances: " << s.instances << '\n'
      << "train: " << s.train_instances << " instances (" << s.train_examples << " examples)\n"
      << "validation: " << s.validation_instances << " instances (" << s.validation_examples << " examples)\n"
      << "mean steps per example: " << s.mean_steps_per_example << '\n';
  return kExitOk;
}

int cmd_solve(const std::string& question, const std::optional<std::string>& gold, const std::string& trace_path,
              bool print_json, const CommonFlags& flags, const EnvLookup& env, std::ostream& out) {
  const RunConfig config = resolve_config(flags, env);
  Problem problem{"adhoc", question, std::nullopt};
  if (trim(problem.question).empty()) throw Error(ErrorCode::data_error, "question is empty");
  if (gold) problem.gold_answer = normalize_answer(*gold);

  auto backends = make_factory(config, flags.script_path)(problem);
  const SolveTrace trace = solve(problem, config.solver, *backends.decomposer, *backends.evaluator);

  out << "config hash: " << config.hash() << '\n';
  if (print_json) {
    out << trace.to_json().dump(2) << '\n';
  } else {
    print_trace(trace, out);
  }
  if (!trace_path.empty()) write_file(trace_path, trace.to_json().dump(2) + "\n");

  if (trace.outcome == Outcome::solved) return kExitOk;
  if (trace.outcome == Outcome::backend_failure) return kExitBackendFailure;
  return kExitUnsolved;
}

int cmd_bench(const std::string& problems_path, const std::string& method, const CommonFlags& flags,
              const EnvLookup& env, std::ostream& out) {
  RunConfig config = resolve_config(flags, env);
  if (!problems_path.empty()) config.problems_path = problems_path;
  if (config.problems_path.empty()) throw Error(ErrorCode::invalid_config, "data.problems (or --problems) is required");
  const auto problems = load_problems(config.problems_path);

  const std::string hash = config.hash();
  const fs::path run_dir = make_run_dir(config.output_dir, hash);
  BenchOptions options;
  options.method = method;
  options.workers = config.workers;
  options.trace_dir = run_dir / "traces";

  const auto report = run_benchmark(problems, config.solver, make_factory(config, flags.script_path), options);
  write_results_jsonl(run_dir / "results.jsonl", report.results);
  write_summary_csv(run_dir / "summary.csv", std::span(&report.summary, 1));
  write_file(run_dir / "summary.json",
             nlohmann::json{{"config", config.to_json()}, {"config_hash", hash}, {"rows", {report.summary.to_json()}}}
                     .dump(2) +
                 "\n");

  std::size_t failures = 0;
  for (const auto& r : report.results) failures += r.outcome == Outcome::backend_failure ? 1 : 0;

  out << "config hash: " << hash << '\n';
  out << format_table(std::span(&report.summary, 1));
  out << "accuracy: " << format_accuracy(report.summary) << '\n';
  if (failures > 0) out << "backend failures: " << failures << " (scored as incorrect)\n";
  out << "run directory: " << run_dir.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const std::string& problems_path, const std::vector<std::int64_t>& budgets, const std::string& method,
              const CommonFlags& flags, const EnvLookup& env, std::ostream& out) {
  RunConfig config = resolve_config(flags, env);
  if (!problems_path.empty()) config.problems_path = problems_path;
  if (config.problems_path.empty()) throw Error(ErrorCode::invalid_config, "data.problems (or --problems) is required");
  const auto problems = load_problems(config.problems_path);

  // The budget grid is part of what the run directory identifies.
  const std::string hash = config_hash({{"config", config.hash()}, {"sweep_budgets", budgets}});
  const fs::path run_dir = make_run_dir(config.output_dir, hash);
  BenchOptions options;
  options.method = method;
  options.workers = config.workers;
  options.trace_dir = run_dir / "traces";

  const auto rows = budget_sweep(problems, budgets, config.solver, make_factory(config, flags.script_path), options);
  write_summary_csv(run_dir / "summary.csv", rows);
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) rows_json.push_back(r.to_json());
  write_file(run_dir / "summary.json",
             nlohmann::json{{"config", config.to_json()}, {"config_hash", hash}, {"rows", rows_json}}.dump(2) + "\n");

  out << "config hash: " << hash << '\n';
  out << format_table(rows);
  out << "run directory: " << run_dir.string() << '\n';
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_config: return kExitConfigError;
    case ErrorCode::backend_error:
    case ErrorCode::timeout:
    case ErrorCode::script_exhausted: return kExitBackendFailure;
    default: return kExitDataError;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
  CLI::App app{"Decomposer/Evaluator step-controlled reasoning runner", "dualtrack"};
  app.require_subcommand(1);

  std::string prep_input;
  std::string prep_output;
  double prep_split = 0.05;
  std::uint64_t prep_seed = 0;
  bool prep_prm = false;
  auto* prep = app.add_subcommand("prep", "Convert GSM8K solutions into next-step training records");
  prep->add_option("--input", prep_input, "GSM8K JSON-lines file")->required();
  prep->add_option("--output", prep_output, "Output directory")->required();
  prep->add_option("--split", prep_split, "Fraction of examples held out for validation")->check(CLI::Range(0.0, 1.0));
  prep->add_option("--seed", prep_seed, "Split seed");
  prep->add_flag("--prm", prep_prm, "Input holds PRM-style {text, rating} records");

  CommonFlags solve_flags;
  std::string question;
  std::optional<std::string> gold;
  std::string trace_path;
  bool print_json = false;
  auto* solve_cmd = app.add_subcommand("solve", "Solve one problem and print the step trace");
  solve_cmd->add_option("question", question, "Problem text")->required();
  solve_cmd->add_option("--gold", gold, "Gold answer, recorded in the trace");
  solve_cmd->add_option("--trace", trace_path, "Write the JSON trace here");
  solve_cmd->add_flag("--json", print_json, "Print the JSON trace instead of the summary");
  add_common_flags(*solve_cmd, solve_flags);

  CommonFlags bench_flags;
  std::string bench_problems;
  std::string bench_method = "dualtrack";
  auto* bench = app.add_subcommand("bench", "Run a benchmark and report accuracy with Wilson intervals");
  bench->add_option("--problems", bench_problems, "Problems JSON-lines file");
  bench->add_option("--method", bench_method, "Method label for the report");
  add_common_flags(*bench, bench_flags);

  CommonFlags sweep_flags;
  std::string sweep_problems;
  std::string sweep_method = "dualtrack";
  std::vector<std::int64_t> budgets;
  auto* sweep = app.add_subcommand("sweep", "Run the benchmark over token budgets with the cache on and off");
  sweep->add_option("--problems", sweep_problems, "Problems JSON-lines file");
  sweep->add_option("--method", sweep_method, "Method label for the report");
  sweep->add_option("--budgets", budgets, "Comma-separated token budgets")->delimiter(',')->required();
  add_common_flags(*sweep, sweep_flags);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (prep->parsed()) return cmd_prep(prep_input, prep_output, prep_split, prep_seed, prep_prm, out);
    if (solve_cmd->parsed()) return cmd_solve(question, gold, trace_path, print_json, solve_flags, env, out);
    if (bench->parsed()) return cmd_bench(bench_problems, bench_method, bench_flags, env, out);
    if (sweep->parsed()) {
      if (budgets.empty()) {
        err << "error: --budgets needs at least one value\n";
        return kExitConfigError;
      }
      return cmd_sweep(sweep_problems, budgets, sweep_method, sweep_flags, env, out);
    }
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << "error [IoError]: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitConfigError;
}

}  // namespace dualtrack
