#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rstsim/cache.hpp"
#include "rstsim/isa.hpp"

namespace rst {

using ClassCounts = std::array<std::uint64_t, kNumClasses>;

struct SimStats {
  std::uint64_t cycles = 0;

  std::uint64_t dyn_ops = 0;  // committed micro-ops, executed or reused
  ClassCounts dyn_ops_by_class{};
  std::uint64_t reused_ops = 0;
  ClassCounts reused_ops_by_class{};

  std::uint64_t traces_captured = 0;
  std::uint64_t trace_table_accesses = 0;
  std::uint64_t instr_table_accesses = 0;
  std::uint64_t regular_hits = 0;
  std::uint64_t speculative_hits = 0;
  std::uint64_t misspeculations = 0;

  std::uint64_t branches_predicted = 0;
  std::uint64_t branch_mispredictions = 0;

  CacheCounters l1i;
  CacheCounters l1d;
  CacheCounters l2;
  CacheCounters l3;

  double energy_per_access = 0.0;
  double energy_proxy = 0.0;  // table_accesses() * energy_per_access

  std::uint64_t table_accesses() const {
    return trace_table_accesses + instr_table_accesses;
  }
  std::uint64_t table_hits() const { return regular_hits + speculative_hits; }

  friend bool operator==(const SimStats&, const SimStats&) = default;
};

// Counter-wise difference (a measurement window). Energy is recomputed.
SimStats operator-(const SimStats& later, const SimStats& earlier);

// Nested JSON mirroring the field list.
std::string to_json(const SimStats& stats);
SimStats stats_from_json(const std::string& text);

// Flat CSV: stats_csv_header() names every column of stats_csv_row().
std::string stats_csv_header();
std::string stats_csv_row(const SimStats& stats);

}  // namespace rst
