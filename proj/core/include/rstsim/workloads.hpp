#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rstsim/isa.hpp"

namespace rst {

enum class WorkloadTag : std::uint8_t {
  LoopHeavy,
  Loopless,
  BranchHeavy,
  MemoryHeavy,
  Redundant,
  Varying,
};

std::string_view to_string(WorkloadTag t);
std::optional<WorkloadTag> tag_from_string(std::string_view s);
const std::vector<WorkloadTag>& all_workload_tags();

struct Workload {
  std::string name;
  Program program;
  std::set<WorkloadTag> tags;
  // Registers checked against the reference run when the workload is built.
  std::optional<std::map<RegIndex, Word>> expected_final;
  // Micro-op budget within which the program is known to halt.
  std::uint64_t op_bound = 0;
};

// Fixed inputs in the loop body: r9 ends at 8 * iterations.
Workload redundant_loop(unsigned iterations = 5000);
// A loaded value feeds the body and changes every few iterations.
Workload varying_loop(unsigned iterations = 2000);
// Straight-line code with forward branches only.
Workload loopless_straightline(unsigned instructions = 20000, std::uint64_t seed = 11);
// Data-dependent forward branches over a random array.
Workload branchy(unsigned iterations = 2000, std::uint64_t seed = 23);
// Dependent loads around a shuffled ring that outgrows the caches.
Workload pointer_chase(unsigned steps = 4000, std::uint64_t seed = 5);
// Memory/branch/alu/other proportions near 33/14/51/1 percent.
Workload mixed(unsigned iterations = 1500);

// The suite above with default sizes. Throws std::logic_error if any
// workload misses its expected final registers.
std::vector<Workload> builtin_workloads();
std::optional<Workload> find_builtin(std::string_view name);

inline constexpr unsigned kMinGenerateSize = 1;
inline constexpr unsigned kMaxGenerateSize = 100000;

// Deterministic in (kind, size, seed). Throws std::invalid_argument for an
// unknown kind or a size outside [kMinGenerateSize, kMaxGenerateSize].
Workload generate(WorkloadTag kind, unsigned size, std::uint64_t seed);
Workload generate(std::string_view kind, unsigned size, std::uint64_t seed);

}  // namespace rst
