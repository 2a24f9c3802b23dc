#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rstsim/cache.hpp"
#include "rstsim/isa.hpp"
#include "rstsim/machine.hpp"
#include "rstsim/predictor.hpp"
#include "rstsim/reuse.hpp"
#include "rstsim/stats.hpp"

namespace rst {

struct FunctionalUnits {
  unsigned alu = 2;
  unsigned memory = 2;
  unsigned mul = 1;
  friend bool operator==(const FunctionalUnits&, const FunctionalUnits&) = default;
};

struct TimingConfig {
  unsigned width = 4;
  FunctionalUnits fu{};
  unsigned frontend_depth = 10;
  unsigned branch_mispredict_penalty = 10;
  unsigned reuse_hit_latency = 1;
  unsigned rollback_penalty = 10;
  unsigned window = 128;  // in-flight instructions between fetch and completion
  unsigned mul_latency = 3;
  unsigned fadd_latency = 2;
  CacheConfig cache{};
  PredictorConfig predictor{};
  double read_energy = 327.7;            // per table read, branch fields present
  double read_energy_no_branch = 320.6;  // per table read, branch fields removed

  // Throws std::invalid_argument.
  void validate() const;
  friend bool operator==(const TimingConfig&, const TimingConfig&) = default;
};

struct SimOptions {
  std::uint64_t max_ops = 1'000'000;
  std::uint64_t fast_forward = 0;
  std::size_t log_window = 0;  // 0: no dynamic log
};

struct SimResult {
  SimStats stats;
  MachineState final_state;
  bool halted = false;
  std::vector<LogRecord> log;
  std::string table_dump;
};

// Cycle-approximate execution of a program under a reuse policy. The final
// architectural state always equals run_reference's.
//
// Timing rules, all in cycles:
//  * Fetch supplies up to `width` instructions per cycle, stops a group at a
//    predicted-taken branch or a reused trace holding a taken branch, and
//    stalls on I-cache misses. A reused trace takes one fetch slot.
//    An instruction may not be fetched until the one `window` places earlier
//    has completed.
//  * A micro-op issues no earlier than fetch + frontend_depth and its
//    operands' ready cycles, into the first cycle with a free issue slot and
//    a free unit of its kind (alu: int, branch, address calc, fadd; mul;
//    memory). Latencies: 1, mul_latency, fadd_latency, cache access.
//  * A mispredicted branch resumes issue at resolve + mispredict penalty.
//  * At a trace start the tables are consulted with registers whose ready
//    cycle is later than fetch + frontend_depth marked unknown. A hit makes
//    the outputs ready reuse_hit_latency cycles later and uses no unit.
//  * A speculative hit resolves when its assumed inputs become ready; a
//    mismatch restores the checkpoint, and issue resumes at resolve +
//    rollback_penalty with lookup at that pc suppressed once.
class Simulator {
 public:
  Simulator(const Program& program, ReusePolicy policy, TimingConfig timing,
            SimOptions options);
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  SimResult run();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

SimResult simulate(const Program& program, const ReusePolicy& policy,
                   const TimingConfig& timing, const SimOptions& options = {});

// Bits in one trace-table entry: pc, npc, input and output contexts of
// (5-bit register index + value) each, and bm/btk only when branches are in
// the reuse domain.
std::uint64_t entry_bits(const ReusePolicy& policy, unsigned value_width = 32,
                         unsigned address_width = 32);

// Energy charged per table read under a policy.
double read_energy(const TimingConfig& timing, const ReusePolicy& policy);

}  // namespace rst
