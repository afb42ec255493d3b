#include "dualtrack/harness.hpp"

#include <atomic>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "dualtrack/dataset.hpp"

namespace dualtrack {

namespace fs = std::filesystem;

WilsonInterval wilson_interval(std::int64_t correct, std::int64_t n, double z) {
  if (n < 1 || correct < 0 || correct > n) {
    throw Error(ErrorCode::invalid_counts,
                "wilson_interval needs n >= 1 and 0 <= correct <= n (got " + std::to_string(correct) + "/" +
                    std::to_string(n) + ")");
  }
  WilsonInterval ci;
  ci.n = n;
  ci.z = z;
  const double nd = static_cast<double>(n);
  const double z2 = z * z;
  ci.p_hat = static_cast<double>(correct) / nd;
  const double denom = 1.0 + z2 / nd;
  ci.p_tilde = (ci.p_hat + z2 / (2.0 * nd)) / denom;
  ci.half_width = z * std::sqrt(ci.p_hat * (1.0 - ci.p_hat) / nd + z2 / (4.0 * nd * nd)) / denom;
  ci.low = std::clamp(ci.p_tilde - ci.half_width, 0.0, 1.0);
  ci.high = std::clamp(ci.p_tilde + ci.half_width, 0.0, 1.0);
  return ci;
}

nlohmann::json RunResult::to_json() const {
  return {
      {"problem_id", problem_id},
      {"predicted", predicted ? nlohmann::json(predicted->str()) : nlohmann::json(nullptr)},
      {"gold", gold.str()},
      {"correct", correct},
      {"tokens_spent", tokens_spent},
      {"decomposer_calls", decomposer_calls},
      {"evaluator_calls", evaluator_calls},
      {"outcome", to_string(outcome)},
      {"trace_path", trace_path},
  };
}

RunResult RunResult::from_json(const nlohmann::json& doc) {
  RunResult r;
  r.problem_id = doc.at("problem_id").get<std::string>();
  if (!doc.at("predicted").is_null()) r.predicted = CanonicalNumber::from_literal(doc["predicted"].get<std::string>());
  r.gold = CanonicalNumber::from_literal(doc.at("gold").get<std::string>());
  r.correct = doc.at("correct").get<bool>();
  r.tokens_spent = doc.at("tokens_spent").get<std::int64_t>();
  r.decomposer_calls = doc.at("decomposer_calls").get<std::int64_t>();
  r.evaluator_calls = doc.at("evaluator_calls").get<std::int64_t>();
  r.outcome = outcome_from_string(doc.at("outcome").get<std::string>());
  r.trace_path = doc.at("trace_path").get<std::string>();
  return r;
}

nlohmann::json Summary::to_json() const {
  return {
      {"method", method},
      {"budget", budget},
      {"cache", cache},
      {"correct", correct},
      {"n", n},
      {"accuracy", accuracy},
      {"ci_low", ci.low},
      {"ci_high", ci.high},
      {"mean_tokens", mean_tokens},
      {"evaluator_calls", evaluator_calls},
  };
}

Summary summarize(std::span<const RunResult> results, std::string method, std::int64_t budget, bool cache) {
  Summary s;
  s.method = std::move(method);
  s.budget = budget;
  s.cache = cache;
  s.n = static_cast<std::int64_t>(results.size());
  std::int64_t tokens = 0;
  for (const auto& r : results) {
    s.correct += r.correct ? 1 : 0;
    tokens += r.tokens_spent;
    s.evaluator_calls += r.evaluator_calls;
  }
  s.ci = wilson_interval(s.correct, s.n);
  s.accuracy = static_cast<double>(s.correct) / static_cast<double>(s.n);
  s.mean_tokens = static_cast<double>(tokens) / static_cast<double>(s.n);
  return s;
}

RunResult score_trace(const SolveTrace& trace, const CanonicalNumber& gold) {
  RunResult r;
  r.problem_id = trace.problem_id;
  r.predicted = trace.final_answer;
  r.gold = gold;
  r.correct = trace.outcome == Outcome::solved && trace.final_answer && *trace.final_answer == gold;
  r.tokens_spent = trace.ledger.spent_total();
  r.decomposer_calls = static_cast<std::int64_t>(trace.decomposer_calls());
  r.evaluator_calls = static_cast<std::int64_t>(trace.evaluator_calls());
  r.outcome = trace.outcome;
  return r;
}

namespace {

std::string file_stem_for(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool safe = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out += safe ? c : '_';
  }
  return out.empty() ? "problem" : out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path.string());
  out << text;
}

}  // namespace

BenchReport run_benchmark(std::span<const Problem> problems, const SolverConfig& config,
                          const BackendFactory& backends, const BenchOptions& options) {
  if (problems.empty()) throw Error(ErrorCode::invalid_counts, "benchmark needs at least one problem");
  for (const auto& p : problems) {
    if (!p.gold_answer) throw Error(ErrorCode::data_error, "problem '" + p.id + "' has no gold answer");
  }
  config.validate();
  if (options.workers < 1) throw Error(ErrorCode::invalid_config, "workers must be >= 1");
  if (options.trace_dir) fs::create_directories(*options.trace_dir);

  std::vector<RunResult> results(problems.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= problems.size()) return;
      try {
        const Problem& problem = problems[i];
        BackendPair pair = backends(problem);
        const SolveTrace trace = solve(problem, config, *pair.decomposer, *pair.evaluator);
        RunResult result = score_trace(trace, *problem.gold_answer);
        if (options.trace_dir) {
          const fs::path path = *options.trace_dir / (file_stem_for(problem.id) + ".json");
          write_text(path, trace.to_json().dump(2) + "\n");
          result.trace_path = path.string();
        }
        results[i] = std::move(result);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(problems.size());
      }
    }
  };

  const auto worker_count = std::min<std::size_t>(static_cast<std::size_t>(options.workers), problems.size());
  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(worker_count);
    for (std::size_t w = 0; w < worker_count; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  BenchReport report;
  report.summary = summarize(results, options.method, config.token_budget, config.cache_enabled);
  report.results = std::move(results);
  return report;
}

std::vector<Summary> budget_sweep(std::span<const Problem> problems, std::span<const std::int64_t> budgets,
                                  const SolverConfig& config, const BackendFactory& backends,
                                  const BenchOptions& options) {
  if (budgets.empty()) throw Error(ErrorCode::invalid_config, "budget sweep needs at least one budget");
  for (auto b : budgets) {
    if (b <= 0) throw Error(ErrorCode::invalid_config, "sweep budgets must be positive");
  }
  std::vector<Summary> rows;
  rows.reserve(budgets.size() * 2);
  for (auto budget : budgets) {
    for (bool cache : {false, true}) {
      SolverConfig cell = config;
      cell.token_budget = budget;
      cell.cache_enabled = cache;
      BenchOptions cell_options = options;
      if (options.trace_dir) {
        cell_options.trace_dir =
            *options.trace_dir / ("budget-" + std::to_string(budget) + (cache ? "-cache" : "-nocache"));
      }
      rows.push_back(run_benchmark(problems, cell, backends, cell_options).summary);
    }
  }
  return rows;
}

std::string csv_header() {
  return "method,budget,cache,correct,n,accuracy,ci_low,ci_high,mean_tokens,evaluator_calls";
}

std::string csv_row(const Summary& s) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), ",%lld,%s,%lld,%lld,%.3f,%.3f,%.3f,%.1f,%lld", static_cast<long long>(s.budget),
                s.cache ? "on" : "off", static_cast<long long>(s.correct), static_cast<long long>(s.n), s.accuracy,
                s.ci.low, s.ci.high, s.mean_tokens, static_cast<long long>(s.evaluator_calls));
  std::string method = s.method;
  if (method.find_first_of(",\"\n") != std::string::npos) {
    std::string quoted = "\"";
    for (char c : method) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    method = quoted + "\"";
  }
  return method + buf;
}

void write_summary_csv(const fs::path& path, std::span<const Summary> rows) {
  std::string text = csv_header() + "\n";
  for (const auto& row : rows) text += csv_row(row) + "\n";
  write_text(path, text);
}

void write_results_jsonl(const fs::path& path, std::span<const RunResult> results) {
  std::string text;
  for (const auto& r : results) text += r.to_json().dump() + "\n";
  write_text(path, text);
}

std::vector<RunResult> read_results_jsonl(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::vector<RunResult> results;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    results.push_back(RunResult::from_json(nlohmann::json::parse(line)));
  }
  return results;
}

std::string format_accuracy(const Summary& s) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.1f%% [%.1f%%, %.1f%%]", s.accuracy * 100.0, s.ci.low * 100.0,
                s.ci.high * 100.0);
  return buf;
}

std::string format_table(std::span<const Summary> rows) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-14s %8s %6s %9s  %-22s %11s %10s\n", "method", "budget", "cache", "correct",
                "accuracy [95% CI]", "mean_tokens", "eval_calls");
  out += buf;
  for (const auto& s : rows) {
    const std::string fraction = std::to_string(s.correct) + "/" + std::to_string(s.n);
    std::snprintf(buf, sizeof(buf), "%-14s %8lld %6s %9s  %-22s %11.1f %10lld\n", s.method.c_str(),
                  static_cast<long long>(s.budget), s.cache ? "on" : "off", fraction.c_str(),
                  format_accuracy(s).c_str(), s.mean_tokens, static_cast<long long>(s.evaluator_calls));
    out += buf;
  }
  return out;
}

std::string config_hash(const nlohmann::json& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

fs::path make_run_dir(const fs::path& base, const std::string& hash) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y%m%d-%H%M%S", &tm);
  const std::string name = std::string(stamp) + "-" + hash;
  fs::create_directories(base);
  // Same config within the same second: number the later runs.
  fs::path dir = base / name;
  for (int n = 2; !fs::create_directory(dir); ++n) dir = base / (name + "-" + std::to_string(n));
  return dir;
}

}  // namespace dualtrack
