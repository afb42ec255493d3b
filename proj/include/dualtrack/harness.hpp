#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualtrack/agents.hpp"
#include "dualtrack/solver.hpp"

namespace dualtrack {

struct WilsonInterval {
  double p_hat = 0.0;
  std::int64_t n = 0;
  double z = 1.96;
  // Center of the interval before clamping.
  double p_tilde = 0.0;
  double half_width = 0.0;
  double low = 0.0;
  double high = 0.0;
};

// Wilson score interval for `correct` successes out of `n`, clamped to [0, 1].
// Throws InvalidCounts unless n >= 1 and 0 <= correct <= n.
WilsonInterval wilson_interval(std::int64_t correct, std::int64_t n, double z = 1.96);

struct RunResult {
  std::string problem_id;
  std::optional<CanonicalNumber> predicted;
  CanonicalNumber gold = CanonicalNumber::from_literal("0");
  bool correct = false;
  std::int64_t tokens_spent = 0;
  std::int64_t decomposer_calls = 0;
  std::int64_t evaluator_calls = 0;
  Outcome outcome = Outcome::backend_failure;
  std::string trace_path;

  nlohmann::json to_json() const;
  static RunResult from_json(const nlohmann::json& doc);
};

// One row of the report table.
struct Summary {
  std::string method;
  std::int64_t budget = 0;
  bool cache = false;
  std::int64_t correct = 0;
  std::int64_t n = 0;
  double accuracy = 0.0;
  WilsonInterval ci;
  double mean_tokens = 0.0;
  std::int64_t evaluator_calls = 0;

  nlohmann::json to_json() const;
};

Summary summarize(std::span<const RunResult> results, std::string method, std::int64_t budget, bool cache);

struct BackendPair {
  std::shared_ptr<Backend> decomposer;
  std::shared_ptr<Backend> evaluator;
};

// Called once per solve. Scripted factories hand out fresh single-owner
// backends; live factories may return one shared HTTP backend.
using BackendFactory = std::function<BackendPair(const Problem&)>;

struct BenchOptions {
  std::string method = "dualtrack";
  int workers = 1;
  // When set, one trace file per problem is written here.
  std::optional<std::filesystem::path> trace_dir;
};

struct BenchReport {
  std::vector<RunResult> results;
  Summary summary;
};

RunResult score_trace(const SolveTrace& trace, const CanonicalNumber& gold);

BenchReport run_benchmark(std::span<const Problem> problems, const SolverConfig& config,
                          const BackendFactory& backends, const BenchOptions& options = {});

// Every budget is run with the cache off and then on. Traces for each cell go
// to <trace_dir>/budget-<B>-<cache|nocache>/ when a trace directory is set.
std::vector<Summary> budget_sweep(std::span<const Problem> problems, std::span<const std::int64_t> budgets,
                                  const SolverConfig& config, const BackendFactory& backends,
                                  const BenchOptions& options = {});

std::string csv_header();
std::string csv_row(const Summary& summary);
void write_summary_csv(const std::filesystem::path& path, std::span<const Summary> rows);
void write_results_jsonl(const std::filesystem::path& path, std::span<const RunResult> results);
std::vector<RunResult> read_results_jsonl(const std::filesystem::path& path);

// "72.0% [58.3%, 82.5%]"
std::string format_accuracy(const Summary& summary);
std::string format_table(std::span<const Summary> rows);

// 16 hex digits identifying a configuration document.
std::string config_hash(const nlohmann::json& config);
// <base>/<YYYYmmdd-HHMMSS>-<hash>, created on disk.
std::filesystem::path make_run_dir(const std::filesystem::path& base, const std::string& hash);

}  // namespace dualtrack
