#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rstsim/machine.hpp"
#include "rstsim/metrics.hpp"
#include "rstsim/reuse.hpp"
#include "rstsim/timing.hpp"
#include "rstsim/workloads.hpp"

namespace rst {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One point of a memory-budget sweep: L1 capacity (each of I and D) and
// trace-table entries.
struct SweepPoint {
  std::uint32_t l1_bytes = 32 * 1024;
  std::uint32_t table_entries = 512;
  std::string label() const;
  friend bool operator==(const SweepPoint&, const SweepPoint&) = default;
};

struct GenerateRequest {
  WorkloadTag kind = WorkloadTag::LoopHeavy;
  unsigned size = 0;
  friend bool operator==(const GenerateRequest&, const GenerateRequest&) = default;
};

struct ExperimentConfig {
  std::vector<std::string> workloads;  // built-in names; "all" or empty: the whole suite
  std::vector<GenerateRequest> generate;
  std::vector<std::string> policies;
  std::string reference_policy = "RST";
  std::uint64_t max_ops = 1'000'000;
  std::uint64_t fast_forward = 10'000;
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency
  std::size_t log_window = 0;
  TimingConfig timing;
  std::optional<unsigned> input_scope;
  std::optional<unsigned> output_scope;
  std::optional<unsigned> branch_limit;
  std::optional<TableGeometry> trace_table;
  std::optional<TableGeometry> instr_table;
  std::vector<SweepPoint> sweep;

  // Throws ConfigError.
  void validate() const;
};

struct ConfigKey {
  std::string_view name;
  std::string_view help;
};
// Every key accepted in a config file. Each may also be set through the
// environment as RSTSIM_<NAME IN UPPER CASE>, which wins over the file.
const std::vector<ConfigKey>& config_keys();
std::string env_var_name(std::string_view key);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
std::optional<std::string> process_env(const std::string& name);

// `key = value` lines, `#` comments. Throws ConfigError naming the line.
ExperimentConfig parse_config(std::string_view text, const EnvLookup& env = process_env);
ExperimentConfig load_config(const std::filesystem::path& path,
                             const EnvLookup& env = process_env);
// Defaults plus environment overrides, for runs without a config file.
ExperimentConfig default_config(const EnvLookup& env = process_env);

// A preset with the config's scope and geometry overrides applied. Throws
// ConfigError for an unknown name.
ReusePolicy resolve_policy(const ExperimentConfig& config, std::string_view name);
std::vector<Workload> resolve_workloads(const ExperimentConfig& config);

struct RunRecord {
  std::string workload;
  std::string policy;  // row label; carries the sweep point when sweeping
  SimStats stats;
  bool oracle_ok = true;
  bool halted = true;
  std::string table_dump;
  std::vector<LogRecord> log;
};

struct ExperimentResult {
  std::vector<MetricRow> rows;          // listed policies only
  std::vector<AggregateRow> aggregates;
  std::vector<RunRecord> runs;          // every simulation, hidden ones included
  bool oracle_ok() const;
};

// Simulates every (workload, policy, sweep point), checks each final state
// against run_reference, and derives metric rows against Baseline and the
// reference policy of the same workload and sweep point. Rows run in
// parallel; the result does not depend on the thread count.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::vector<Workload>& workloads);
ExperimentResult run_experiment(const ExperimentConfig& config);

// report.csv, report.json and stats.csv. Throws std::runtime_error on IO
// failure.
void write_reports(const ExperimentResult& result, const std::filesystem::path& dir);

}  // namespace rst
