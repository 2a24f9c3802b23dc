#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "rstsim/isa.hpp"

namespace rst {

struct RegValue {
  RegIndex reg = 0;
  Word value = 0;
  friend bool operator==(const RegValue&, const RegValue&) = default;
};

// Fixed-capacity list of register/value pairs (an instruction reads at most
// two registers and writes at most one).
class RegValues {
 public:
  static constexpr std::size_t kCapacity = 2;

  void push(RegIndex reg, Word value) {
    if (size_ == kCapacity) throw std::logic_error("RegValues overflow");
    items_[size_++] = {reg, value};
  }
  bool contains(RegIndex reg) const {
    for (std::size_t i = 0; i < size_; ++i)
      if (items_[i].reg == reg) return true;
    return false;
  }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  const RegValue& operator[](std::size_t i) const { return items_[i]; }
  const RegValue* begin() const { return items_.data(); }
  const RegValue* end() const { return items_.data() + size_; }

  friend bool operator==(const RegValues& a, const RegValues& b) {
    if (a.size_ != b.size_) return false;
    for (std::size_t i = 0; i < a.size_; ++i)
      if (!(a.items_[i] == b.items_[i])) return false;
    return true;
  }

 private:
  std::array<RegValue, kCapacity> items_{};
  std::size_t size_ = 0;
};

enum class MemKind : std::uint8_t { Read, Write };

struct MemEffect {
  Addr address = 0;
  Word value = 0;
  MemKind kind = MemKind::Read;
  friend bool operator==(const MemEffect&, const MemEffect&) = default;
};

class MachineFault : public std::runtime_error {
 public:
  MachineFault(Addr pc, const std::string& what);
  Addr pc() const { return pc_; }

 private:
  Addr pc_;
};

struct Checkpoint {
  std::array<Word, kNumRegs> regs{};
  Addr pc = 0;
  bool halted = false;
  std::uint64_t dyn_count = 0;
  std::size_t journal_mark = 0;
};

class MachineState {
 public:
  MachineState() = default;
  static MachineState boot(const Program& program);

  // Register file plus pc, with an empty memory image.
  static MachineState registers_only(const MachineState& other);

  Word reg(RegIndex r) const { return r == 0 ? 0 : regs_[r]; }
  void set_reg(RegIndex r, Word value) {
    if (r != 0 && r < kNumRegs) regs_[r] = value;
  }
  const std::array<Word, kNumRegs>& regs() const { return regs_; }

  Word load(Addr addr) const {
    auto it = mem_.find(addr);
    return it == mem_.end() ? 0 : it->second;
  }
  void store(Addr addr, Word value);
  const std::unordered_map<Addr, Word>& memory() const { return mem_; }

  Addr pc = 0;
  bool halted = false;
  std::uint64_t dyn_count = 0;

  friend Checkpoint snapshot(MachineState& state);
  friend void restore(MachineState& state, const Checkpoint& cp);
  // Drops the undo journal; outstanding checkpoints become invalid.
  void release_journal() {
    journal_.clear();
    journaling_ = false;
  }
  std::size_t journal_size() const { return journal_.size(); }

  // Architectural comparison: registers, memory (zero default), pc, halted.
  friend bool operator==(const MachineState& a, const MachineState& b);

 private:
  struct JournalEntry {
    Addr addr;
    std::optional<Word> old;
  };

  std::array<Word, kNumRegs> regs_{};
  std::unordered_map<Addr, Word> mem_;
  std::vector<JournalEntry> journal_;
  bool journaling_ = false;
};

Checkpoint snapshot(MachineState& state);
void restore(MachineState& state, const Checkpoint& cp);

struct StepResult {
  Instruction executed;
  ClassList classes;
  RegValues inputs;   // operand order, r0 omitted
  RegValues outputs;  // r0 writes omitted
  std::optional<bool> branch_taken;
  Addr next_pc = 0;
  std::optional<MemEffect> mem_effect;

  friend bool operator==(const StepResult&, const StepResult&) = default;
};

// Executes one instruction at state.pc. Throws MachineFault on a bad pc or
// an unaligned / out-of-range data access. Halt leaves pc in place.
StepResult step(MachineState& state, const Program& program);

// Effective address of a load or store given the current registers.
Addr effective_address(const MachineState& state, const Instruction& instr);

// One classified micro-operation. Loads and stores split into an AddrCalc
// writing kAddrLatch and a MemAccess reading it.
struct MicroOp {
  Addr pc = 0;
  Opcode op = Opcode::Halt;
  InstrClass cls = InstrClass::Halt;
  RegValues inputs;
  RegValues outputs;
  std::optional<bool> branch_taken;
  Addr target = 0;   // resolved target for branches
  Addr next_pc = 0;  // pc after this micro-op (the same pc for an AddrCalc)
  std::optional<MemEffect> mem_effect;

  bool ends_instruction() const { return cls != InstrClass::AddrCalc; }
  friend bool operator==(const MicroOp&, const MicroOp&) = default;
};

class MicroOps {
 public:
  void push(const MicroOp& op) { items_[size_++] = op; }
  std::size_t size() const { return size_; }
  const MicroOp& operator[](std::size_t i) const { return items_[i]; }
  const MicroOp* begin() const { return items_.data(); }
  const MicroOp* end() const { return items_.data() + size_; }

 private:
  std::array<MicroOp, 2> items_{};
  std::size_t size_ = 0;
};

MicroOps decompose(const StepResult& step);

struct ReferenceRun {
  MachineState state;
  std::deque<StepResult> log;
  bool halted = false;  // false: max_ops reached first (non-termination)
};

// Steps until halt or until max_ops micro-operations have executed. When
// log_window is set, only the last log_window steps are kept; 0 disables
// logging.
ReferenceRun run_reference(const Program& program, std::uint64_t max_ops,
                           std::optional<std::size_t> log_window = std::nullopt);

// Line of the dynamic log: `seq pc opcode class reused inloop`.
struct LogRecord {
  std::uint64_t seq = 0;
  Addr pc = 0;
  Opcode op = Opcode::Halt;
  InstrClass cls = InstrClass::Halt;
  bool reused = false;
  bool inloop = false;
  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

std::vector<LogRecord> to_log_records(const std::deque<StepResult>& log,
                                      std::uint64_t first_seq = 0);
void write_log(std::ostream& os, const std::vector<LogRecord>& records);
std::vector<LogRecord> read_log(std::istream& is);

}  // namespace rst
