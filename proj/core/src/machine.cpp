#include "rstsim/machine.hpp"

#include <bit>
#include <istream>
#include <ostream>
#include <sstream>

namespace rst {

MachineFault::MachineFault(Addr pc, const std::string& what)
    : std::runtime_error("fault at pc " + std::to_string(pc) + ": " + what),
      pc_(pc) {}

MachineState MachineState::boot(const Program& program) {
  MachineState s;
  s.pc = program.entry;
  for (const auto& [addr, value] : program.data)
    if (value != 0) s.mem_[addr] = value;
  return s;
}

MachineState MachineState::registers_only(const MachineState& other) {
  MachineState s;
  s.regs_ = other.regs_;
  s.pc = other.pc;
  s.halted = other.halted;
  s.dyn_count = other.dyn_count;
  return s;
}

void MachineState::store(Addr addr, Word value) {
  auto it = mem_.find(addr);
  if (journaling_) {
    journal_.push_back({addr, it == mem_.end() ? std::nullopt
                                               : std::optional<Word>(it->second)});
  }
  if (value == 0) {
    if (it != mem_.end()) mem_.erase(it);
  } else if (it != mem_.end()) {
    it->second = value;
  } else {
    mem_.emplace(addr, value);
  }
}

bool operator==(const MachineState& a, const MachineState& b) {
  return a.regs_ == b.regs_ && a.mem_ == b.mem_ && a.pc == b.pc &&
         a.halted == b.halted;
}

Checkpoint snapshot(MachineState& state) {
  state.journaling_ = true;
  Checkpoint cp;
  cp.regs = state.regs_;
  cp.pc = state.pc;
  cp.halted = state.halted;
  cp.dyn_count = state.dyn_count;
  cp.journal_mark = state.journal_.size();
  return cp;
}

void restore(MachineState& state, const Checkpoint& cp) {
  if (cp.journal_mark > state.journal_.size())
    throw std::logic_error("checkpoint is older than the journal");
  while (state.journal_.size() > cp.journal_mark) {
    const auto& e = state.journal_.back();
    if (e.old)
      state.mem_[e.addr] = *e.old;
    else
      state.mem_.erase(e.addr);
    state.journal_.pop_back();
  }
  state.regs_ = cp.regs;
  state.pc = cp.pc;
  state.halted = cp.halted;
  state.dyn_count = cp.dyn_count;
}

Addr effective_address(const MachineState& state, const Instruction& instr) {
  return state.reg(instr.src1.value_or(0)) +
         static_cast<Word>(instr.imm.value_or(0));
}

namespace {

void check_data_address(Addr pc, Addr addr) {
  if (addr % 4 != 0) throw MachineFault(pc, "unaligned data access");
  if (addr >= kMemoryLimit) throw MachineFault(pc, "data access out of range");
}

Word fadd_bits(Word a, Word b) {
  float fa = std::bit_cast<float>(a);
  float fb = std::bit_cast<float>(b);
  return std::bit_cast<Word>(fa + fb);
}

}  // namespace

StepResult step(MachineState& state, const Program& program) {
  if (state.halted) throw std::logic_error("step on a halted machine");
  const Instruction* in = program.at(state.pc);
  if (!in) throw MachineFault(state.pc, "pc outside program");

  StepResult r;
  r.executed = *in;
  r.classes = classify(*in);
  r.next_pc = in->pc + 4;

  auto read = [&](std::optional<RegIndex> reg) -> Word {
    RegIndex idx = reg.value_or(0);
    Word v = state.reg(idx);
    if (idx != 0 && !r.inputs.contains(idx)) r.inputs.push(idx, v);
    return v;
  };
  auto write = [&](std::optional<RegIndex> reg, Word v) {
    RegIndex idx = reg.value_or(0);
    if (idx == 0) return;
    state.set_reg(idx, v);
    r.outputs.push(idx, v);
  };
  auto branch = [&](bool taken) {
    r.branch_taken = taken;
    if (taken) r.next_pc = in->target();
  };
  const auto imm = static_cast<Word>(in->imm.value_or(0));

  switch (in->op) {
    case Opcode::Add: {
      Word a = read(in->src1), b = read(in->src2);
      write(in->dest, a + b);
      break;
    }
    case Opcode::Sub: {
      Word a = read(in->src1), b = read(in->src2);
      write(in->dest, a - b);
      break;
    }
    case Opcode::Addi:
      write(in->dest, read(in->src1) + imm);
      break;
    case Opcode::And: {
      Word a = read(in->src1), b = read(in->src2);
      write(in->dest, a & b);
      break;
    }
    case Opcode::Or: {
      Word a = read(in->src1), b = read(in->src2);
      write(in->dest, a | b);
      break;
    }
    case Opcode::Xor: {
      Word a = read(in->src1), b = read(in->src2);
      write(in->dest, a ^ b);
      break;
    }
    case Opcode::Slt: {
      auto a = static_cast<std::int32_t>(read(in->src1));
      auto b = static_cast<std::int32_t>(read(in->src2));
      write(in->dest, a < b ? 1 : 0);
      break;
    }
    case Opcode::Mul: {
      Word a = read(in->src1), b = read(in->src2);
      write(in->dest, a * b);
      break;
    }
    case Opcode::Fadd: {
      Word a = read(in->src1), b = read(in->src2);
      write(in->dest, fadd_bits(a, b));
      break;
    }
    case Opcode::Beq: {
      Word a = read(in->src1), b = read(in->src2);
      branch(a == b);
      break;
    }
    case Opcode::Bne: {
      Word a = read(in->src1), b = read(in->src2);
      branch(a != b);
      break;
    }
    case Opcode::Blt: {
      auto a = static_cast<std::int32_t>(read(in->src1));
      auto b = static_cast<std::int32_t>(read(in->src2));
      branch(a < b);
      break;
    }
    case Opcode::Jmp:
      branch(true);
      break;
    case Opcode::Lw: {
      Addr addr = read(in->src1) + imm;
      check_data_address(in->pc, addr);
      Word v = state.load(addr);
      write(in->dest, v);
      r.mem_effect = MemEffect{addr, v, MemKind::Read};
      break;
    }
    case Opcode::Sw: {
      Addr addr = read(in->src1) + imm;
      Word v = read(in->src2);
      check_data_address(in->pc, addr);
      state.store(addr, v);
      r.mem_effect = MemEffect{addr, v, MemKind::Write};
      break;
    }
    case Opcode::Syscall:
      break;
    case Opcode::Halt:
      state.halted = true;
      r.next_pc = in->pc;
      break;
  }
  state.pc = r.next_pc;
  state.dyn_count += r.classes.size();
  return r;
}

MicroOps decompose(const StepResult& s) {
  MicroOps ops;
  const auto& in = s.executed;
  if (!in.is_memory()) {
    MicroOp op;
    op.pc = in.pc;
    op.op = in.op;
    op.cls = s.classes.front();
    op.inputs = s.inputs;
    op.outputs = s.outputs;
    op.branch_taken = s.branch_taken;
    op.target = in.is_branch() ? in.target() : 0;
    op.next_pc = s.next_pc;
    ops.push(op);
    return ops;
  }

  const Addr addr = s.mem_effect ? s.mem_effect->address : 0;
  const RegIndex base = in.src1.value_or(0);

  MicroOp calc;
  calc.pc = in.pc;
  calc.op = in.op;
  calc.cls = InstrClass::AddrCalc;
  for (const auto& rv : s.inputs)
    if (rv.reg == base) calc.inputs.push(rv.reg, rv.value);
  calc.outputs.push(kAddrLatch, addr);
  calc.next_pc = in.pc;
  ops.push(calc);

  MicroOp access;
  access.pc = in.pc;
  access.op = in.op;
  access.cls = InstrClass::MemAccess;
  access.inputs.push(kAddrLatch, addr);
  if (in.op == Opcode::Sw) {
    RegIndex value_reg = in.src2.value_or(0);
    for (const auto& rv : s.inputs)
      if (rv.reg == value_reg && value_reg != 0) access.inputs.push(rv.reg, rv.value);
  }
  access.outputs = s.outputs;
  access.next_pc = s.next_pc;
  access.mem_effect = s.mem_effect;
  ops.push(access);
  return ops;
}

ReferenceRun run_reference(const Program& program, std::uint64_t max_ops,
                           std::optional<std::size_t> log_window) {
  if (max_ops == 0) throw std::invalid_argument("max_ops must be positive");
  ReferenceRun run;
  run.state = MachineState::boot(program);
  while (!run.state.halted && run.state.dyn_count < max_ops) {
    StepResult r = step(run.state, program);
    if (log_window && *log_window == 0) continue;
    run.log.push_back(std::move(r));
    if (log_window && run.log.size() > *log_window) run.log.pop_front();
  }
  run.halted = run.state.halted;
  return run;
}

std::vector<LogRecord> to_log_records(const std::deque<StepResult>& log,
                                      std::uint64_t first_seq) {
  std::vector<LogRecord> out;
  std::uint64_t seq = first_seq;
  for (const auto& s : log)
    for (auto cls : s.classes)
      out.push_back({seq++, s.executed.pc, s.executed.op, cls, false, false});
  return out;
}

void write_log(std::ostream& os, const std::vector<LogRecord>& records) {
  for (const auto& r : records)
    os << r.seq << ' ' << r.pc << ' ' << to_string(r.op) << ' ' << to_string(r.cls)
       << ' ' << (r.reused ? 1 : 0) << ' ' << (r.inloop ? 1 : 0) << '\n';
}

std::vector<LogRecord> read_log(std::istream& is) {
  std::vector<LogRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    LogRecord r;
    std::string op, cls;
    int reused = 0, inloop = 0;
    if (!(ls >> r.seq >> r.pc >> op >> cls >> reused >> inloop))
      throw std::runtime_error("malformed log line: " + line);
    auto parsed_op = opcode_from_string(op);
    auto parsed_cls = class_from_string(cls);
    if (!parsed_op || !parsed_cls)
      throw std::runtime_error("malformed log line: " + line);
    r.op = *parsed_op;
    r.cls = *parsed_cls;
    r.reused = reused != 0;
    r.inloop = inloop != 0;
    out.push_back(r);
  }
  return out;
}

}  // namespace rst
