#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rstsim/isa.hpp"
#include "rstsim/stats.hpp"

namespace rst {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Stats labelled with the workload they came from.
struct TaggedStats {
  std::string workload;
  SimStats stats;
};

// Instruction mix over micro-ops: memory (MemAccess + AddrCalc), branch,
// alu (AddSub + OtherIntAlu), other (Float, Syscall, Halt).
struct MixFractions {
  double memory = 0;
  double branch = 0;
  double alu = 0;
  double other = 0;
  friend bool operator==(const MixFractions&, const MixFractions&) = default;
};

struct MetricRow {
  std::string workload;
  std::string policy;
  std::uint64_t cycles = 0;
  double speedup = 0;
  double rr = 0;
  std::optional<double> ei;  // absent when rr == 0
  std::uint64_t table_accesses = 0;
  double access_reduction = 0;
  MixFractions mix;
  bool oracle_ok = true;  // JSON only
  friend bool operator==(const MetricRow&, const MetricRow&) = default;
};

struct AggregateRow {
  std::string policy;
  std::size_t workloads = 0;
  double hm_speedup = 0;
  std::optional<double> hm_ei;  // absent unless every row has an EI
  friend bool operator==(const AggregateRow&, const AggregateRow&) = default;
};

// Reused / executed micro-ops of the subset's classes; 0 when none executed.
double reuse_rate(const SimStats& stats, const DomainSubset& subset);
std::optional<double> efficiency_index(double speedup, double rr);
// baseline.cycles / mode.cycles. Throws MetricError on zero cycles.
double speedup(const SimStats& baseline, const SimStats& mode);
// Also throws when the workloads differ.
double speedup(const TaggedStats& baseline, const TaggedStats& mode);
// 1 - restricted / reference table accesses. Throws when reference is 0.
double access_reduction(const SimStats& reference, const SimStats& restricted);
// Throws when no micro-op was committed.
MixFractions mix_distribution(const SimStats& stats);
// Throws on an empty input or any non-positive value.
double harmonic_mean(std::span<const double> values);

std::vector<AggregateRow> aggregate(const std::vector<MetricRow>& rows);

std::string csv_header();
std::string to_csv(const std::vector<MetricRow>& rows);
std::vector<MetricRow> parse_csv(const std::string& text);

std::string to_json(const std::vector<MetricRow>& rows,
                    const std::vector<AggregateRow>& aggregates);
struct Report {
  std::vector<MetricRow> rows;
  std::vector<AggregateRow> aggregates;
};
Report parse_json(const std::string& text);

}  // namespace rst
