#pragma once

#include <array>
#include <bitset>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rstsim/isa.hpp"
#include "rstsim/machine.hpp"

namespace rst {

enum class ReuseMode : std::uint8_t { Baseline, DTM, RST };
enum class LoopGateMode : std::uint8_t { Always, InsideLoopsOnly, OutsideLoopsOnly };
enum class TableMode : std::uint8_t { Unified, Split };

std::string_view to_string(ReuseMode m);
std::string_view to_string(LoopGateMode m);
std::string_view to_string(TableMode m);

struct TableGeometry {
  std::uint32_t entries = 512;
  std::uint32_t assoc = 4;
  std::uint32_t sets() const { return entries / assoc; }
  friend bool operator==(const TableGeometry&, const TableGeometry&) = default;
};

struct ReusePolicy {
  std::string name = "Baseline";
  ReuseMode mode = ReuseMode::Baseline;
  DomainSubset subset{SubsetName::O};
  LoopGateMode loop_gate = LoopGateMode::Always;
  unsigned input_scope = 2;
  unsigned output_scope = 1;
  unsigned branch_limit = 4;
  TableMode table_mode = TableMode::Unified;
  TableGeometry trace_table{512, 4};  // Memo_Table_T (the only table when unified)
  TableGeometry instr_table{1024, 4};  // Memo_Table_G, split mode only

  // Throws std::invalid_argument on an inconsistent geometry.
  void validate() const;
  friend bool operator==(const ReusePolicy&, const ReusePolicy&) = default;
};

// Unified table, input/output scopes 2/1, 512 entries 4-way.
ReusePolicy first_set_geometry(ReusePolicy p);
// Split tables, scopes 4/4, T 512x4, G 1024x4.
ReusePolicy second_set_geometry(ReusePolicy p);

// Named presets: Baseline, DTM, RST, RST-Loop, RST-Out-Of-Loop (first-set
// geometry) and RST-O, RST-B, RST-A, RST-M, RST-NotB, RST-NotA, RST-NotM
// (second-set geometry).
std::optional<ReusePolicy> preset_policy(std::string_view name);
std::vector<std::string> preset_policy_names();

using RegisterMask = std::bitset<kNumRegs + 1>;

// One memoization table row. Length-1 rows are instruction entries.
struct TraceEntry {
  Addr pc = 0;
  Addr npc = 0;
  std::vector<RegIndex> icr;
  std::vector<Word> icv;
  std::vector<RegIndex> ocr;
  std::vector<Word> ocv;
  std::uint32_t bm = 0;   // bit k set: the trace holds a k-th branch
  std::uint32_t btk = 0;  // bit k set: that branch was taken
  std::uint32_t len = 0;  // micro-op count
  std::array<std::uint32_t, kNumClasses> class_counts{};

  // The trace ends on the address calculation of a load or store; npc is
  // that instruction and ocr holds kAddrLatch.
  bool ends_in_addr_calc() const;
  unsigned branch_count() const;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

using InstrEntry = TraceEntry;

class LoopGate {
 public:
  struct Region {
    Addr lo = 0;
    Addr hi = 0;
    friend auto operator<=>(const Region&, const Region&) = default;
  };

  // Records (target, branch pc) for a taken backward branch.
  void update(const MicroOp& op);
  void update(const StepResult& step);

  bool inside_loop(Addr pc) const;
  bool allows(const ReusePolicy& policy, Addr pc) const;
  const std::vector<Region>& regions() const { return regions_; }

  friend bool operator==(const LoopGate&, const LoopGate&) = default;

 private:
  void add(Addr lo, Addr hi);
  std::vector<Region> regions_;  // sorted, unique
};

inline LoopGate gate_update(LoopGate gate, const StepResult& step) {
  gate.update(step);
  return gate;
}
inline bool gate_allows(const LoopGate& gate, const ReusePolicy& policy, Addr pc) {
  return gate.allows(policy, pc);
}

// Builds traces from the committed micro-op stream.
//
// A micro-op joins the open trace when its class is in the policy's domain,
// the gate allows its pc, its loop membership matches the trace start, and
// the scopes and branch limit still hold. Otherwise the open trace is
// finalized first, and the micro-op may start a new one.
class TraceBuilder {
 public:
  std::optional<TraceEntry> feed(const MicroOp& op, const ReusePolicy& policy,
                                 const LoopGate& gate);
  std::vector<TraceEntry> feed(const StepResult& step, const ReusePolicy& policy,
                               const LoopGate& gate);
  std::optional<TraceEntry> flush();

  bool building() const { return open_; }
  std::uint32_t length() const { return trace_.len; }

 private:
  bool fits(const MicroOp& op, const ReusePolicy& policy) const;
  void start(const MicroOp& op, bool inside);
  void append(const MicroOp& op);

  bool open_ = false;
  bool inside_ = false;
  TraceEntry trace_;
  std::vector<std::pair<RegIndex, Word>> written_;  // first-write order
};

struct LookupResult {
  enum class Kind : std::uint8_t { Miss, RegularHit, SpeculativeHit };
  Kind kind = Kind::Miss;
  TraceEntry entry;
  std::vector<RegValue> assumed;  // unknown inputs with their stored values
  bool from_instr_table = false;

  bool hit() const { return kind != Kind::Miss; }
};

class ReuseTable {
 public:
  explicit ReuseTable(TableGeometry geometry);

  const TableGeometry& geometry() const { return geometry_; }
  std::uint32_t set_index(Addr pc) const { return (pc / 4) % sets_.size(); }

  // Searches the pc's set, MRU first. A regular hit needs every input known
  // and equal; a speculative hit (allowed only when speculate is true) needs
  // every known input equal and at least one unknown. A hit becomes MRU.
  LookupResult lookup(Addr pc, std::span<const Word> regs,
                      const RegisterMask& unknown, bool speculate);

  // Inserts at MRU; an entry with the same pc and input context is refreshed
  // in place of duplication. Returns the evicted LRU entry, if any.
  std::optional<TraceEntry> insert(TraceEntry entry);

  std::uint64_t accesses() const { return accesses_; }
  std::size_t occupancy(std::uint32_t set) const { return sets_.at(set).size(); }
  const std::vector<TraceEntry>& ways(std::uint32_t set) const { return sets_.at(set); }
  std::size_t size() const;

  // `set way pc npc len icr/icv,.. ocr/ocv,.. bm btk`, hex, one line per
  // entry, ways listed MRU first.
  void dump(std::ostream& os) const;

 private:
  TableGeometry geometry_;
  std::vector<std::vector<TraceEntry>> sets_;
  std::uint64_t accesses_ = 0;
};

LookupResult table_lookup(ReuseTable& table, Addr pc, std::span<const Word> regs,
                          const RegisterMask& unknown, const ReusePolicy& policy);
std::optional<TraceEntry> table_insert(ReuseTable& table, TraceEntry entry);

struct ReuseSummary {
  Addr next_pc = 0;
  std::uint32_t bm = 0;
  std::uint32_t btk = 0;
  std::uint32_t reused_ops = 0;
  std::array<std::uint32_t, kNumClasses> reused_by_class{};
};

// Writes the entry's live-outs to the register file and sets pc = npc.
ReuseSummary apply_reuse(MachineState& state, const TraceEntry& entry);

struct PendingSpeculation {
  Checkpoint checkpoint;
  TraceEntry entry;
  std::vector<RegValue> assumed;
  std::uint64_t issue_seq = 0;
};

enum class SpeculationVerdict : std::uint8_t { Confirmed, Mispredicted };

// All-or-nothing comparison of assumed against resolved register values.
SpeculationVerdict validate_speculation(const PendingSpeculation& pending,
                                        std::span<const Word> actuals);

struct EngineCounters {
  std::uint64_t trace_table_accesses = 0;
  std::uint64_t instr_table_accesses = 0;
  std::uint64_t regular_hits = 0;
  std::uint64_t speculative_hits = 0;
};

// Memo tables, loop gate and trace builder bound to one policy.
class ReuseEngine {
 public:
  explicit ReuseEngine(ReusePolicy policy);

  const ReusePolicy& policy() const { return policy_; }
  const LoopGate& gate() const { return gate_; }
  bool enabled() const { return policy_.mode != ReuseMode::Baseline; }

  // Whether a lookup may start at this instruction.
  bool may_lookup(const Instruction& instr) const;

  // Split mode consults Memo_Table_T, then Memo_Table_G on a miss.
  LookupResult lookup(Addr pc, std::span<const Word> regs,
                      const RegisterMask& unknown, bool allow_speculation);

  // Feeds one committed micro-op to the builder and the gate. Returns the
  // number of traces finalized (0 or 1).
  unsigned commit(const MicroOp& op);

  // While held, finalized traces are buffered instead of inserted.
  void hold_inserts() { holding_ = true; }
  void release_inserts();
  void drop_held_inserts();

  struct Snapshot {
    TraceBuilder builder;
    LoopGate gate;
  };
  Snapshot save() const { return {builder_, gate_}; }
  void restore(const Snapshot& s);

  const EngineCounters& counters() const { return counters_; }
  const ReuseTable& trace_table() const { return trace_table_; }
  const std::optional<ReuseTable>& instr_table() const { return instr_table_; }
  void dump(std::ostream& os) const;

 private:
  void insert(TraceEntry entry);

  ReusePolicy policy_;
  ReuseTable trace_table_;
  std::optional<ReuseTable> instr_table_;
  LoopGate gate_;
  TraceBuilder builder_;
  EngineCounters counters_;
  bool holding_ = false;
  std::vector<TraceEntry> held_;
};

}  // namespace rst
