#include "rstsim/timing.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace rst {

namespace {

enum class Unit : std::uint8_t { None, Alu, Mul, Memory };

struct SlotUse {
  unsigned total = 0;
  unsigned alu = 0;
  unsigned mul = 0;
  unsigned memory = 0;
};

using ReadyTimes = std::array<std::uint64_t, kNumRegs + 1>;

}  // namespace

void TimingConfig::validate() const {
  if (width == 0) throw std::invalid_argument("width must be positive");
  if (fu.alu == 0 || fu.memory == 0 || fu.mul == 0)
    throw std::invalid_argument("every functional unit kind needs at least one unit");
  if (window == 0) throw std::invalid_argument("window must be positive");
  if (mul_latency == 0 || fadd_latency == 0 || reuse_hit_latency == 0)
    throw std::invalid_argument("latencies must be positive");
  cache.l1.validate();
  cache.l2.validate();
  cache.l3.validate();
  if (read_energy < 0 || read_energy_no_branch < 0)
    throw std::invalid_argument("energy per access must be non-negative");
}

struct Simulator::Impl {
  Impl(const Program& p, ReusePolicy pol, TimingConfig t, SimOptions o)
      : program(p),
        cfg(t),
        opt(o),
        engine((pol.validate(), std::move(pol))),
        predictor(t.predictor),
        caches(t.cache) {
    cfg.validate();
    state = MachineState::boot(program);
    ready.fill(0);
  }

  struct Pending {
    PendingSpeculation spec;
    ReuseEngine::Snapshot engine;
    SimStats committed;
    std::optional<SimStats> boundary;
    ReadyTimes ready{};
    std::uint64_t seq = 0;
    std::size_t log_size = 0;
    std::uint64_t resolve_cycle = 0;
  };

  const Program& program;
  TimingConfig cfg;
  SimOptions opt;
  ReuseEngine engine;
  BranchPredictor predictor;
  CacheHierarchy caches;
  MachineState state;

  ReadyTimes ready{};
  std::map<std::uint64_t, SlotUse> slots;
  std::uint64_t fetch_cycle = 0;
  unsigned fetch_used = 0;
  std::optional<Addr> fetch_line;
  std::deque<std::uint64_t> inflight;  // completion cycles, fetch order
  std::uint64_t last_completion = 0;

  // Committed counters live in `live`; the rest are read from the engine,
  // predictor and caches when a snapshot is taken.
  SimStats live;
  std::uint64_t seq = 0;
  std::uint64_t branches = 0;
  std::uint64_t mispredictions = 0;
  std::uint64_t misspeculations = 0;
  std::optional<SimStats> boundary;
  std::optional<Pending> pending;
  std::optional<Addr> suppressed;
  bool addr_calc_reused = false;
  std::uint64_t latch_ready = 0;
  std::vector<LogRecord> log;

  SimStats current() const {
    SimStats s = live;
    s.cycles = std::max(last_completion, fetch_cycle);
    const auto& ec = engine.counters();
    s.trace_table_accesses = ec.trace_table_accesses;
    s.instr_table_accesses = ec.instr_table_accesses;
    s.regular_hits = ec.regular_hits;
    s.speculative_hits = ec.speculative_hits;
    s.misspeculations = misspeculations;
    s.branches_predicted = branches;
    s.branch_mispredictions = mispredictions;
    s.l1i = caches.l1i().counters();
    s.l1d = caches.l1d().counters();
    s.l2 = caches.l2().counters();
    s.l3 = caches.l3().counters();
    s.energy_per_access = read_energy(cfg, engine.policy());
    s.energy_proxy = static_cast<double>(s.table_accesses()) * s.energy_per_access;
    return s;
  }

  void end_group() {
    ++fetch_cycle;
    fetch_used = 0;
  }

  // Next fetch no earlier than the cycle that lets issue start at `issue_at`.
  void redirect(std::uint64_t issue_at) {
    std::uint64_t at = issue_at > cfg.frontend_depth ? issue_at - cfg.frontend_depth : 0;
    fetch_cycle = std::max(fetch_cycle + 1, at);
    fetch_used = 0;
  }

  std::uint64_t fetch(Addr pc) {
    if (fetch_used >= cfg.width) end_group();
    if (inflight.size() >= cfg.window) {
      std::uint64_t oldest = inflight.front();
      inflight.pop_front();
      if (oldest > fetch_cycle) {
        fetch_cycle = oldest;
        fetch_used = 0;
      }
    }
    Addr line = pc / cfg.cache.l1.line_bytes;
    if (fetch_line != line) {
      fetch_line = line;
      std::uint32_t lat = caches.access_instruction(pc);
      if (lat > 1) {
        fetch_cycle += lat - 1;
        fetch_used = 0;
      }
    }
    ++fetch_used;
    return fetch_cycle;
  }

  void retire_unit(std::uint64_t completion) {
    inflight.push_back(completion);
    last_completion = std::max(last_completion, completion);
  }

  std::uint64_t reserve(std::uint64_t earliest, Unit unit) {
    if (slots.size() > 512) {
      // Nothing can issue before the current fetch cycle plus the front end.
      slots.erase(slots.begin(), slots.lower_bound(fetch_cycle + cfg.frontend_depth));
    }
    for (std::uint64_t c = earliest;; ++c) {
      SlotUse& s = slots[c];
      if (s.total >= cfg.width) continue;
      switch (unit) {
        case Unit::None:
          break;
        case Unit::Alu:
          if (s.alu >= cfg.fu.alu) continue;
          ++s.alu;
          break;
        case Unit::Mul:
          if (s.mul >= cfg.fu.mul) continue;
          ++s.mul;
          break;
        case Unit::Memory:
          if (s.memory >= cfg.fu.memory) continue;
          ++s.memory;
          break;
      }
      ++s.total;
      return c;
    }
  }

  void commit(const MicroOp& op, bool reused) {
    bool inloop = engine.gate().inside_loop(op.pc);
    ++seq;
    ++live.dyn_ops;
    ++live.dyn_ops_by_class[index_of(op.cls)];
    if (reused) {
      ++live.reused_ops;
      ++live.reused_ops_by_class[index_of(op.cls)];
    }
    // Past max_ops the stream is cut at a mode-dependent point, so the
    // builder stops there to keep captures comparable across policies.
    if (seq <= opt.max_ops) live.traces_captured += engine.commit(op);
    if (opt.log_window > 0) log.push_back({seq - 1, op.pc, op.op, op.cls, reused, inloop});
    if (opt.fast_forward > 0 && seq == opt.fast_forward && !boundary) {
      boundary = current();
      boundary->cycles = fetch_cycle;
    }
  }

  void branch_timing(const MicroOp& op, std::uint64_t resolve) {
    const bool taken = op.branch_taken.value_or(false);
    const bool conditional = op.op != Opcode::Jmp;
    const bool predicted_taken = conditional ? predictor.predict(op.pc) : true;
    bool correct = !taken;
    if (predicted_taken) {
      auto target = predictor.btb_lookup(op.pc);
      correct = taken && target && *target == op.target;
    }
    ++branches;
    if (conditional) predictor.train(op.pc, taken);
    if (taken) predictor.btb_update(op.pc, op.target);
    if (!correct) {
      ++mispredictions;
      redirect(resolve + cfg.branch_mispredict_penalty);
    } else if (taken) {
      end_group();
    }
  }

  SpeculationVerdict resolve() {
    Pending p = std::move(*pending);
    pending.reset();
    auto verdict = validate_speculation(p.spec, p.spec.checkpoint.regs);
    if (verdict == SpeculationVerdict::Confirmed) {
      engine.release_inserts();
      state.release_journal();
      return verdict;
    }
    restore(state, p.spec.checkpoint);
    state.release_journal();
    engine.restore(p.engine);
    engine.drop_held_inserts();
    live = p.committed;
    boundary = p.boundary;
    ready = p.ready;
    seq = p.seq;
    log.resize(p.log_size);
    addr_calc_reused = false;
    ++misspeculations;
    redirect(p.resolve_cycle + cfg.rollback_penalty);
    suppressed = p.spec.entry.pc;
    return verdict;
  }

  void reuse(const LookupResult& hit, std::uint64_t lookup_cycle) {
    const TraceEntry& e = hit.entry;
    if (hit.kind == LookupResult::Kind::SpeculativeHit) {
      Pending p;
      p.spec.checkpoint = snapshot(state);
      p.spec.entry = e;
      p.spec.assumed = hit.assumed;
      p.spec.issue_seq = seq;
      p.engine = engine.save();
      p.committed = live;
      p.boundary = boundary;
      p.ready = ready;
      p.seq = seq;
      p.log_size = log.size();
      for (const auto& a : hit.assumed) p.resolve_cycle = std::max(p.resolve_cycle, ready[a.reg]);
      engine.hold_inserts();
      pending = std::move(p);
    }

    // Recover the micro-op stream the trace stands for, so the builder, the
    // gate and the predictor see the same sequence as a plain execution.
    MachineState scratch = MachineState::registers_only(state);
    for (const auto& a : hit.assumed) scratch.set_reg(a.reg, a.value);
    std::vector<MicroOp> replayed;
    while (replayed.size() < e.len) {
      StepResult s = step(scratch, program);
      for (const auto& op : decompose(s))
        if (replayed.size() < e.len) replayed.push_back(op);
    }

    apply_reuse(state, e);
    const std::uint64_t done = lookup_cycle + cfg.reuse_hit_latency;
    for (RegIndex r : e.ocr) {
      if (r == kAddrLatch) {
        addr_calc_reused = true;
        latch_ready = done;
      } else {
        ready[r] = done;
      }
    }
    for (const auto& op : replayed) {
      if (op.cls != InstrClass::Branch) continue;
      const bool taken = op.branch_taken.value_or(false);
      if (op.op != Opcode::Jmp) predictor.train(op.pc, taken);
      if (taken) predictor.btb_update(op.pc, op.target);
    }
    for (const auto& op : replayed) commit(op, true);
    retire_unit(done);
    if (e.btk != 0) end_group();
  }

  // Returns false when a fault forced a rollback instead.
  bool execute(std::uint64_t fetched) {
    const Addr pc = state.pc;
    StepResult s;
    try {
      s = step(state, program);
    } catch (const MachineFault&) {
      if (pending && resolve() == SpeculationVerdict::Mispredicted) return false;
      throw;
    }
    const bool skip_addr_calc = addr_calc_reused;
    addr_calc_reused = false;
    if (skip_addr_calc) --state.dyn_count;  // already counted when reused

    std::uint64_t completion = fetched + cfg.frontend_depth;
    for (const auto& op : decompose(s)) {
      if (op.cls == InstrClass::AddrCalc && skip_addr_calc) continue;
      std::uint64_t earliest = fetched + cfg.frontend_depth;
      for (const auto& in : op.inputs)
        earliest = std::max(earliest, in.reg == kAddrLatch ? latch_ready : ready[in.reg]);
      Unit unit = Unit::Alu;
      std::uint64_t latency = 1;
      switch (op.cls) {
        case InstrClass::AddSub:
        case InstrClass::OtherIntAlu:
          if (op.op == Opcode::Mul) {
            unit = Unit::Mul;
            latency = cfg.mul_latency;
          }
          break;
        case InstrClass::Float:
          latency = cfg.fadd_latency;
          break;
        case InstrClass::Branch:
        case InstrClass::AddrCalc:
          break;
        case InstrClass::MemAccess:
          unit = Unit::Memory;
          latency = caches.access_data(
              op.mem_effect->address,
              op.mem_effect->kind == MemKind::Write ? AccessKind::Write : AccessKind::Read);
          break;
        case InstrClass::Syscall:
        case InstrClass::Halt:
          unit = Unit::None;
          break;
      }
      const std::uint64_t issued = reserve(earliest, unit);
      const std::uint64_t done = issued + latency;
      for (const auto& out : op.outputs) {
        if (out.reg == kAddrLatch)
          latch_ready = done;
        else
          ready[out.reg] = done;
      }
      completion = std::max(completion, done);
      if (op.cls == InstrClass::Branch) branch_timing(op, issued + 1);
      commit(op, false);
    }
    retire_unit(completion);
    if (suppressed == pc) suppressed.reset();
    return true;
  }

  // Resolves an outstanding speculation before anything that must not run
  // on a wrong path. Returns true if the caller should re-examine the state.
  bool settle() {
    if (!pending) return false;
    resolve();
    return true;
  }

  SimResult run() {
    for (;;) {
      if (pending && fetch_cycle >= pending->resolve_cycle) {
        resolve();
        continue;
      }
      if (state.halted || seq >= opt.max_ops) {
        if (settle()) continue;
        break;
      }
      const Instruction* in = program.at(state.pc);
      if (in == nullptr || in->op == Opcode::Halt) {
        if (settle()) continue;
        if (in == nullptr) throw MachineFault(state.pc, "pc outside program");
      }
      const std::uint64_t fetched = fetch(in->pc);
      const std::uint64_t lookup_cycle = fetched + cfg.frontend_depth;
      if (!addr_calc_reused && suppressed != in->pc && engine.may_lookup(*in)) {
        RegisterMask unknown;
        for (RegIndex r = 1; r < kNumRegs; ++r)
          if (ready[r] > lookup_cycle) unknown.set(r);
        auto hit = engine.lookup(in->pc, state.regs(), unknown, !pending.has_value());
        if (hit.hit()) {
          reuse(hit, lookup_cycle);
          continue;
        }
      }
      execute(fetched);
    }

    SimResult r;
    SimStats final_stats = current();
    r.stats = boundary ? final_stats - *boundary : final_stats;
    r.halted = state.halted;
    r.final_state = state;
    if (opt.log_window > 0) {
      std::size_t drop = log.size() > opt.log_window ? log.size() - opt.log_window : 0;
      r.log.assign(log.begin() + static_cast<std::ptrdiff_t>(drop), log.end());
    }
    std::ostringstream dump;
    engine.dump(dump);
    r.table_dump = dump.str();
    return r;
  }
};

Simulator::Simulator(const Program& program, ReusePolicy policy, TimingConfig timing,
                     SimOptions options)
    : impl_(std::make_unique<Impl>(program, std::move(policy), timing, options)) {}

Simulator::~Simulator() = default;

SimResult Simulator::run() { return impl_->run(); }

SimResult simulate(const Program& program, const ReusePolicy& policy,
                   const TimingConfig& timing, const SimOptions& options) {
  return Simulator(program, policy, timing, options).run();
}

std::uint64_t entry_bits(const ReusePolicy& policy, unsigned value_width,
                         unsigned address_width) {
  constexpr unsigned kRegIndexBits = 5;
  std::uint64_t bits = 2ull * address_width;
  bits += static_cast<std::uint64_t>(policy.input_scope + policy.output_scope) *
          (kRegIndexBits + value_width);
  if (policy.subset.contains(InstrClass::Branch)) bits += 2ull * policy.branch_limit;
  return bits;
}

double read_energy(const TimingConfig& timing, const ReusePolicy& policy) {
  return policy.subset.contains(InstrClass::Branch) ? timing.read_energy
                                                    : timing.read_energy_no_branch;
}

}  // namespace rst
