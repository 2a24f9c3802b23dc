#include "rstsim/reuse.hpp"

#include <algorithm>
#include <bit>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace rst {

std::string_view to_string(ReuseMode m) {
  switch (m) {
    case ReuseMode::Baseline:
      return "Baseline";
    case ReuseMode::DTM:
      return "DTM";
    case ReuseMode::RST:
      return "RST";
  }
  return "?";
}

std::string_view to_string(LoopGateMode m) {
  switch (m) {
    case LoopGateMode::Always:
      return "Always";
    case LoopGateMode::InsideLoopsOnly:
      return "InsideLoopsOnly";
    case LoopGateMode::OutsideLoopsOnly:
      return "OutsideLoopsOnly";
  }
  return "?";
}

std::string_view to_string(TableMode m) {
  return m == TableMode::Unified ? "unified" : "split";
}

void ReusePolicy::validate() const {
  auto check = [](const TableGeometry& g, const char* which) {
    if (g.assoc == 0 || g.entries == 0 || g.entries % g.assoc != 0)
      throw std::invalid_argument(std::string(which) +
                                  ": entries must be a positive multiple of assoc");
  };
  check(trace_table, "trace table");
  if (table_mode == TableMode::Split) check(instr_table, "instruction table");
  if (branch_limit > 32)
    throw std::invalid_argument("branch_limit must be at most 32");
  if (input_scope > 32 || output_scope > 33)
    throw std::invalid_argument("scope exceeds the register file");
}

ReusePolicy first_set_geometry(ReusePolicy p) {
  p.input_scope = 2;
  p.output_scope = 1;
  p.table_mode = TableMode::Unified;
  p.trace_table = {512, 4};
  return p;
}

ReusePolicy second_set_geometry(ReusePolicy p) {
  p.input_scope = 4;
  p.output_scope = 4;
  p.table_mode = TableMode::Split;
  p.trace_table = {512, 4};
  p.instr_table = {1024, 4};
  return p;
}

std::vector<std::string> preset_policy_names() {
  return {"Baseline", "DTM",      "RST",      "RST-Loop", "RST-Out-Of-Loop",
          "RST-O",    "RST-B",    "RST-A",    "RST-M",    "RST-NotB",
          "RST-NotA", "RST-NotM"};
}

std::optional<ReusePolicy> preset_policy(std::string_view name) {
  ReusePolicy p;
  p.name = std::string(name);
  if (name == "Baseline") {
    p.mode = ReuseMode::Baseline;
    return first_set_geometry(p);
  }
  if (name == "DTM") {
    p.mode = ReuseMode::DTM;
    return first_set_geometry(p);
  }
  if (name == "RST") {
    p.mode = ReuseMode::RST;
    return first_set_geometry(p);
  }
  if (name == "RST-Loop") {
    p.mode = ReuseMode::RST;
    p.loop_gate = LoopGateMode::InsideLoopsOnly;
    return first_set_geometry(p);
  }
  if (name == "RST-Out-Of-Loop") {
    p.mode = ReuseMode::RST;
    p.loop_gate = LoopGateMode::OutsideLoopsOnly;
    return first_set_geometry(p);
  }
  if (name.starts_with("RST-")) {
    auto subset = DomainSubset::from_string(name.substr(4));
    if (!subset) return std::nullopt;
    p.mode = ReuseMode::RST;
    p.subset = *subset;
    return second_set_geometry(p);
  }
  return std::nullopt;
}

bool TraceEntry::ends_in_addr_calc() const {
  return std::find(ocr.begin(), ocr.end(), kAddrLatch) != ocr.end();
}

unsigned TraceEntry::branch_count() const {
  return static_cast<unsigned>(std::popcount(bm));
}

// ---------------------------------------------------------------- LoopGate

void LoopGate::add(Addr lo, Addr hi) {
  Region r{lo, hi};
  auto it = std::lower_bound(regions_.begin(), regions_.end(), r);
  if (it != regions_.end() && *it == r) return;
  regions_.insert(it, r);
}

void LoopGate::update(const MicroOp& op) {
  if (op.cls != InstrClass::Branch || !op.branch_taken.value_or(false)) return;
  if (op.target < op.pc) add(op.target, op.pc);
}

void LoopGate::update(const StepResult& step) {
  for (const auto& op : decompose(step)) update(op);
}

bool LoopGate::inside_loop(Addr pc) const {
  for (const auto& r : regions_) {
    if (r.lo > pc) break;
    if (pc <= r.hi) return true;
  }
  return false;
}

bool LoopGate::allows(const ReusePolicy& policy, Addr pc) const {
  switch (policy.loop_gate) {
    case LoopGateMode::Always:
      return true;
    case LoopGateMode::InsideLoopsOnly:
      return inside_loop(pc);
    case LoopGateMode::OutsideLoopsOnly:
      return !inside_loop(pc);
  }
  return true;
}

// ------------------------------------------------------------ TraceBuilder

bool TraceBuilder::fits(const MicroOp& op, const ReusePolicy& policy) const {
  auto written = [&](RegIndex r) {
    return std::any_of(written_.begin(), written_.end(),
                       [r](const auto& w) { return w.first == r; });
  };
  std::size_t inputs = open_ ? trace_.icr.size() : 0;
  for (const auto& in : op.inputs) {
    if (open_ && (written(in.reg) ||
                  std::find(trace_.icr.begin(), trace_.icr.end(), in.reg) !=
                      trace_.icr.end()))
      continue;
    ++inputs;
  }
  std::size_t outputs = open_ ? written_.size() : 0;
  for (const auto& out : op.outputs)
    if (!(open_ && written(out.reg))) ++outputs;
  unsigned branches = open_ ? trace_.branch_count() : 0;
  if (op.cls == InstrClass::Branch) ++branches;
  return inputs <= policy.input_scope && outputs <= policy.output_scope &&
         branches <= policy.branch_limit;
}

void TraceBuilder::start(const MicroOp& op, bool inside) {
  trace_ = TraceEntry{};
  trace_.pc = op.pc;
  written_.clear();
  open_ = true;
  inside_ = inside;
  append(op);
}

void TraceBuilder::append(const MicroOp& op) {
  for (const auto& in : op.inputs) {
    bool seen = std::any_of(written_.begin(), written_.end(),
                            [&](const auto& w) { return w.first == in.reg; }) ||
                std::find(trace_.icr.begin(), trace_.icr.end(), in.reg) !=
                    trace_.icr.end();
    if (!seen) {
      trace_.icr.push_back(in.reg);
      trace_.icv.push_back(in.value);
    }
  }
  for (const auto& out : op.outputs) {
    auto it = std::find_if(written_.begin(), written_.end(),
                           [&](const auto& w) { return w.first == out.reg; });
    if (it == written_.end())
      written_.emplace_back(out.reg, out.value);
    else
      it->second = out.value;
  }
  if (op.cls == InstrClass::Branch) {
    const unsigned k = trace_.branch_count();
    trace_.bm |= 1u << k;
    if (op.branch_taken.value_or(false)) trace_.btk |= 1u << k;
  }
  ++trace_.len;
  ++trace_.class_counts[index_of(op.cls)];
  trace_.npc = op.next_pc;
}

std::optional<TraceEntry> TraceBuilder::flush() {
  if (!open_) return std::nullopt;
  open_ = false;
  TraceEntry out = std::move(trace_);
  for (const auto& [reg, value] : written_) {
    out.ocr.push_back(reg);
    out.ocv.push_back(value);
  }
  written_.clear();
  trace_ = TraceEntry{};
  return out;
}

std::optional<TraceEntry> TraceBuilder::feed(const MicroOp& op,
                                             const ReusePolicy& policy,
                                             const LoopGate& gate) {
  const bool eligible = policy.mode != ReuseMode::Baseline &&
                        policy.subset.contains(op.cls) &&
                        gate.allows(policy, op.pc);
  const bool inside = gate.inside_loop(op.pc);

  std::optional<TraceEntry> done;
  if (open_) {
    if (eligible && inside == inside_ && fits(op, policy)) {
      append(op);
      return std::nullopt;
    }
    done = flush();
  }
  if (eligible && fits(op, policy)) start(op, inside);
  return done;
}

std::vector<TraceEntry> TraceBuilder::feed(const StepResult& step,
                                           const ReusePolicy& policy,
                                           const LoopGate& gate) {
  std::vector<TraceEntry> out;
  for (const auto& op : decompose(step))
    if (auto t = feed(op, policy, gate)) out.push_back(std::move(*t));
  return out;
}

// -------------------------------------------------------------- ReuseTable

ReuseTable::ReuseTable(TableGeometry geometry) : geometry_(geometry) {
  if (geometry.assoc == 0 || geometry.entries == 0 ||
      geometry.entries % geometry.assoc != 0)
    throw std::invalid_argument("table entries must be a positive multiple of assoc");
  sets_.resize(geometry.sets());
}

LookupResult ReuseTable::lookup(Addr pc, std::span<const Word> regs,
                                const RegisterMask& unknown, bool speculate) {
  ++accesses_;
  auto& ways = sets_[set_index(pc)];
  LookupResult result;

  auto promote = [&](std::size_t i) {
    std::rotate(ways.begin(), ways.begin() + static_cast<std::ptrdiff_t>(i),
                ways.begin() + static_cast<std::ptrdiff_t>(i) + 1);
    result.entry = ways.front();
  };

  for (std::size_t i = 0; i < ways.size(); ++i) {
    const auto& e = ways[i];
    if (e.pc != pc) continue;
    bool match = true;
    for (std::size_t k = 0; k < e.icr.size() && match; ++k)
      match = !unknown.test(e.icr[k]) && regs[e.icr[k]] == e.icv[k];
    if (match) {
      result.kind = LookupResult::Kind::RegularHit;
      promote(i);
      return result;
    }
  }
  if (!speculate) return result;

  for (std::size_t i = 0; i < ways.size(); ++i) {
    const auto& e = ways[i];
    if (e.pc != pc) continue;
    bool known_match = true;
    std::vector<RegValue> assumed;
    for (std::size_t k = 0; k < e.icr.size() && known_match; ++k) {
      if (unknown.test(e.icr[k]))
        assumed.push_back({e.icr[k], e.icv[k]});
      else
        known_match = regs[e.icr[k]] == e.icv[k];
    }
    if (known_match && !assumed.empty()) {
      result.kind = LookupResult::Kind::SpeculativeHit;
      result.assumed = std::move(assumed);
      promote(i);
      return result;
    }
  }
  return result;
}

std::optional<TraceEntry> ReuseTable::insert(TraceEntry entry) {
  auto& ways = sets_[set_index(entry.pc)];
  auto same = std::find_if(ways.begin(), ways.end(), [&](const TraceEntry& e) {
    return e.pc == entry.pc && e.icr == entry.icr && e.icv == entry.icv;
  });
  if (same != ways.end()) {
    ways.erase(same);
    ways.insert(ways.begin(), std::move(entry));
    return std::nullopt;
  }
  ways.insert(ways.begin(), std::move(entry));
  if (ways.size() <= geometry_.assoc) return std::nullopt;
  TraceEntry evicted = std::move(ways.back());
  ways.pop_back();
  return evicted;
}

std::size_t ReuseTable::size() const {
  std::size_t n = 0;
  for (const auto& s : sets_) n += s.size();
  return n;
}

void ReuseTable::dump(std::ostream& os) const {
  auto pairs = [&](const std::vector<RegIndex>& regs, const std::vector<Word>& vals) {
    if (regs.empty()) {
      os << '-';
      return;
    }
    for (std::size_t i = 0; i < regs.size(); ++i) {
      if (i) os << ',';
      os << static_cast<unsigned>(regs[i]) << '/' << vals[i];
    }
  };
  const auto flags = os.flags();
  os << std::hex;
  for (std::size_t s = 0; s < sets_.size(); ++s) {
    for (std::size_t w = 0; w < sets_[s].size(); ++w) {
      const auto& e = sets_[s][w];
      os << s << ' ' << w << ' ' << e.pc << ' ' << e.npc << ' ' << e.len << ' ';
      pairs(e.icr, e.icv);
      os << ' ';
      pairs(e.ocr, e.ocv);
      os << ' ' << e.bm << ' ' << e.btk << '\n';
    }
  }
  os.flags(flags);
}

LookupResult table_lookup(ReuseTable& table, Addr pc, std::span<const Word> regs,
                          const RegisterMask& unknown, const ReusePolicy& policy) {
  if (policy.mode == ReuseMode::Baseline) return {};
  return table.lookup(pc, regs, unknown, policy.mode == ReuseMode::RST);
}

std::optional<TraceEntry> table_insert(ReuseTable& table, TraceEntry entry) {
  return table.insert(std::move(entry));
}

ReuseSummary apply_reuse(MachineState& state, const TraceEntry& entry) {
  for (std::size_t i = 0; i < entry.ocr.size(); ++i)
    if (entry.ocr[i] < kNumRegs) state.set_reg(entry.ocr[i], entry.ocv[i]);
  state.pc = entry.npc;
  state.dyn_count += entry.len;

  ReuseSummary s;
  s.next_pc = entry.npc;
  s.bm = entry.bm;
  s.btk = entry.btk;
  s.reused_ops = entry.len;
  s.reused_by_class = entry.class_counts;
  return s;
}

SpeculationVerdict validate_speculation(const PendingSpeculation& pending,
                                        std::span<const Word> actuals) {
  for (const auto& a : pending.assumed) {
    if (a.reg >= actuals.size())
      throw std::out_of_range("assumed register has no resolved value");
    if (actuals[a.reg] != a.value) return SpeculationVerdict::Mispredicted;
  }
  return SpeculationVerdict::Confirmed;
}

// ------------------------------------------------------------- ReuseEngine

ReuseEngine::ReuseEngine(ReusePolicy policy)
    : policy_(std::move(policy)), trace_table_(policy_.trace_table) {
  policy_.validate();
  if (policy_.table_mode == TableMode::Split) instr_table_.emplace(policy_.instr_table);
}

bool ReuseEngine::may_lookup(const Instruction& instr) const {
  return enabled() && policy_.subset.contains(classify(instr).front()) &&
         gate_.allows(policy_, instr.pc);
}

LookupResult ReuseEngine::lookup(Addr pc, std::span<const Word> regs,
                                 const RegisterMask& unknown,
                                 bool allow_speculation) {
  const bool speculate = allow_speculation && policy_.mode == ReuseMode::RST;
  LookupResult r = trace_table_.lookup(pc, regs, unknown, speculate);
  ++counters_.trace_table_accesses;
  if (!r.hit() && instr_table_) {
    r = instr_table_->lookup(pc, regs, unknown, speculate);
    r.from_instr_table = true;
    ++counters_.instr_table_accesses;
  }
  if (r.kind == LookupResult::Kind::RegularHit) ++counters_.regular_hits;
  if (r.kind == LookupResult::Kind::SpeculativeHit) ++counters_.speculative_hits;
  return r;
}

unsigned ReuseEngine::commit(const MicroOp& op) {
  unsigned finalized = 0;
  if (enabled()) {
    if (auto t = builder_.feed(op, policy_, gate_)) {
      insert(std::move(*t));
      ++finalized;
    }
  }
  gate_.update(op);
  return finalized;
}

void ReuseEngine::insert(TraceEntry entry) {
  if (entry.icr.size() > policy_.input_scope || entry.ocr.size() > policy_.output_scope ||
      entry.branch_count() > policy_.branch_limit || entry.icr.size() != entry.icv.size() ||
      entry.ocr.size() != entry.ocv.size() || (entry.btk & ~entry.bm) != 0)
    throw std::logic_error("trace entry violates the policy's scope bounds");
  if (holding_) {
    held_.push_back(std::move(entry));
    return;
  }
  if (instr_table_ && entry.len == 1)
    instr_table_->insert(std::move(entry));
  else
    trace_table_.insert(std::move(entry));
}

void ReuseEngine::release_inserts() {
  holding_ = false;
  auto held = std::move(held_);
  held_.clear();
  for (auto& e : held) insert(std::move(e));
}

void ReuseEngine::drop_held_inserts() {
  holding_ = false;
  held_.clear();
}

void ReuseEngine::restore(const Snapshot& s) {
  builder_ = s.builder;
  gate_ = s.gate;
}

void ReuseEngine::dump(std::ostream& os) const {
  os << "# Memo_Table_T\n";
  trace_table_.dump(os);
  if (instr_table_) {
    os << "# Memo_Table_G\n";
    instr_table_->dump(os);
  }
}

}  // namespace rst
