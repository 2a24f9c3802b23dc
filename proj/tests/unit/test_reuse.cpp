#include <gtest/gtest.h>

#include <sstream>

#include "rstsim/reuse.hpp"

using namespace rst;

namespace {

std::vector<MicroOp> micro_ops(const Program& p, MachineState& s, int instructions) {
  std::vector<MicroOp> out;
  for (int i = 0; i < instructions; ++i)
    for (const auto& op : decompose(step(s, p))) out.push_back(op);
  return out;
}

ReusePolicy policy_with(unsigned in, unsigned out, unsigned branches = 4) {
  ReusePolicy p = *preset_policy("DTM");
  p.input_scope = in;
  p.output_scope = out;
  p.branch_limit = branches;
  return p;
}

TraceEntry entry(Addr pc, std::vector<RegIndex> icr, std::vector<Word> icv) {
  TraceEntry e;
  e.pc = pc;
  e.npc = pc + 4;
  e.icr = std::move(icr);
  e.icv = std::move(icv);
  e.len = 1;
  return e;
}

std::array<Word, kNumRegs> regs_with(RegIndex r, Word v) {
  std::array<Word, kNumRegs> regs{};
  regs[r] = v;
  return regs;
}

// Loop body used by the builder tests: r2 counts down, r3 accumulates r1.
const char* kLoop = R"(
    addi r1, r0, 4
    addi r2, r0, 2
    addi r3, r0, 1
  top:
    addi r2, r2, -1
    add r3, r3, r1
    bne r2, r0, top
    halt
)";

}  // namespace

TEST(Gate, RecordsTakenBackwardBranchesOnly) {
  LoopGate g;
  auto branch = [](Addr pc, Addr target, bool taken) {
    MicroOp op;
    op.pc = pc;
    op.op = Opcode::Bne;
    op.cls = InstrClass::Branch;
    op.branch_taken = taken;
    op.target = target;
    return op;
  };
  g.update(branch(40, 16, false));
  EXPECT_TRUE(g.regions().empty());
  g.update(branch(40, 60, true));
  EXPECT_TRUE(g.regions().empty());
  g.update(branch(40, 16, true));
  ASSERT_EQ(g.regions().size(), 1u);
  EXPECT_EQ(g.regions()[0], (LoopGate::Region{16, 40}));

  ReusePolicy inside = *preset_policy("RST-Loop");
  ReusePolicy outside = *preset_policy("RST-Out-Of-Loop");
  ReusePolicy always = *preset_policy("RST");
  EXPECT_TRUE(gate_allows(g, inside, 20));
  EXPECT_TRUE(gate_allows(g, inside, 16));
  EXPECT_TRUE(gate_allows(g, inside, 40));
  EXPECT_FALSE(gate_allows(g, inside, 44));
  EXPECT_FALSE(gate_allows(g, outside, 20));
  EXPECT_TRUE(gate_allows(g, outside, 12));
  EXPECT_TRUE(gate_allows(g, always, 20));
  EXPECT_FALSE(gate_allows(LoopGate{}, inside, 20));
}

TEST(Builder, LiveInsLiveOutsAndBranchBitmaps) {
  Program p = parse_program(kLoop);
  MachineState s = MachineState::boot(p);
  micro_ops(p, s, 3);
  auto ops = micro_ops(p, s, 3);  // addi r2 ; add r3 ; bne (taken)
  ReusePolicy pol = policy_with(4, 4);
  LoopGate gate;
  TraceBuilder b;
  for (const auto& op : ops) EXPECT_FALSE(b.feed(op, pol, gate));
  auto t = b.flush();
  ASSERT_TRUE(t);
  EXPECT_EQ(t->pc, 12u);
  EXPECT_EQ(t->icr, (std::vector<RegIndex>{2, 3, 1}));
  EXPECT_EQ(t->icv, (std::vector<Word>{2, 1, 4}));
  EXPECT_EQ(t->ocr, (std::vector<RegIndex>{2, 3}));
  EXPECT_EQ(t->ocv, (std::vector<Word>{1, 5}));
  EXPECT_EQ(t->len, 3u);
  EXPECT_EQ(t->bm, 0b1u);
  EXPECT_EQ(t->btk, 0b1u);
  EXPECT_EQ(t->npc, 12u);  // the taken branch's target
}

TEST(Builder, InputScopeOverflowSplitsBeforeTheOverflowingInstruction) {
  // With two live-ins allowed, `add r3, r3, r1` would bring the trace that
  // starts at `addi r2, r2, -1` to three, and `bne r2` would do the same to
  // the trace starting at the add. Each instruction ends up alone.
  Program p = parse_program(kLoop);
  MachineState s = MachineState::boot(p);
  micro_ops(p, s, 3);
  auto ops = micro_ops(p, s, 3);
  ReusePolicy pol = policy_with(2, 4);
  LoopGate gate;
  TraceBuilder b;
  std::vector<TraceEntry> done;
  for (const auto& op : ops)
    if (auto t = b.feed(op, pol, gate)) done.push_back(*t);
  if (auto t = b.flush()) done.push_back(*t);
  ASSERT_EQ(done.size(), 3u);
  for (const auto& t : done) EXPECT_EQ(t.len, 1u);
  EXPECT_EQ(done[0].icr, (std::vector<RegIndex>{2}));
  EXPECT_EQ(done[1].icr, (std::vector<RegIndex>{3, 1}));
}

TEST(Builder, OutputScopeAndBranchLimit) {
  Program p = parse_program(kLoop);
  MachineState s = MachineState::boot(p);
  micro_ops(p, s, 3);
  auto ops = micro_ops(p, s, 3);
  LoopGate gate;
  {
    TraceBuilder b;
    ReusePolicy pol = policy_with(4, 1);
    auto first = b.feed(ops[0], pol, gate);
    EXPECT_FALSE(first);
    auto second = b.feed(ops[1], pol, gate);  // a second live-out
    ASSERT_TRUE(second);
    EXPECT_EQ(second->len, 1u);
  }
  {
    TraceBuilder b;
    ReusePolicy pol = policy_with(4, 4, 0);
    b.feed(ops[0], pol, gate);
    b.feed(ops[1], pol, gate);
    auto t = b.feed(ops[2], pol, gate);  // a branch is over the limit
    ASSERT_TRUE(t);
    EXPECT_EQ(t->len, 2u);
    EXPECT_EQ(t->bm, 0u);
    EXPECT_FALSE(b.building());  // a lone branch cannot start a trace either
  }
}

TEST(Builder, OutOfDomainOpsNeverStartATraceAndMemoryAccessEndsOne) {
  Program p = parse_program(R"(
    fadd r1, r2, r3
    addi r4, r0, 0x100
    lw r5, 0(r4)
    halt
  )");
  MachineState s = MachineState::boot(p);
  auto ops = micro_ops(p, s, 3);
  ReusePolicy pol = policy_with(4, 4);
  LoopGate gate;
  TraceBuilder b;
  EXPECT_FALSE(b.feed(ops[0], pol, gate));
  EXPECT_FALSE(b.building());
  EXPECT_FALSE(b.feed(ops[1], pol, gate));
  EXPECT_FALSE(b.feed(ops[2], pol, gate));  // AddrCalc joins
  auto t = b.feed(ops[3], pol, gate);        // MemAccess closes
  ASSERT_TRUE(t);
  EXPECT_EQ(t->len, 2u);
  EXPECT_TRUE(t->ends_in_addr_calc());
  EXPECT_EQ(t->npc, 8u);  // the load itself, whose access still has to run
  EXPECT_FALSE(b.building());
}

TEST(Builder, SplitsWhereLoopMembershipChanges) {
  Program p = parse_program(kLoop);
  MachineState s = MachineState::boot(p);
  ReusePolicy pol = policy_with(8, 8);
  LoopGate gate;
  TraceBuilder b;
  std::vector<TraceEntry> done;
  while (!s.halted) {
    for (const auto& op : decompose(step(s, p))) {
      if (auto t = b.feed(op, pol, gate)) done.push_back(*t);
      gate.update(op);
    }
  }
  // Prologue + first trip (outside, the loop is not known yet), then the
  // second trip inside the recorded region.
  ASSERT_GE(done.size(), 2u);
  EXPECT_EQ(done[0].pc, 0u);
  EXPECT_EQ(done[0].len, 6u);
  EXPECT_EQ(done[1].pc, 12u);
  EXPECT_EQ(done[1].len, 3u);
}

TEST(Table, RegularMissAndSpeculativeLookups) {
  ReuseTable t({16, 4});
  t.insert(entry(0, {2}, {5}));
  RegisterMask none, r2;
  r2.set(2);
  EXPECT_EQ(t.lookup(0, regs_with(2, 5), none, true).kind, LookupResult::Kind::RegularHit);
  EXPECT_EQ(t.lookup(0, regs_with(2, 6), none, true).kind, LookupResult::Kind::Miss);
  auto spec = t.lookup(0, regs_with(2, 6), r2, true);
  EXPECT_EQ(spec.kind, LookupResult::Kind::SpeculativeHit);
  ASSERT_EQ(spec.assumed.size(), 1u);
  EXPECT_EQ(spec.assumed[0], (RegValue{2, 5}));
  EXPECT_EQ(t.lookup(0, regs_with(2, 6), r2, false).kind, LookupResult::Kind::Miss);
  EXPECT_EQ(t.lookup(4, regs_with(2, 5), none, true).kind, LookupResult::Kind::Miss);
  EXPECT_EQ(t.accesses(), 5u);
}

TEST(Table, DtmNeverSpeculatesAndCountsEveryCall) {
  ReuseTable t({16, 4});
  t.insert(entry(0, {2}, {5}));
  RegisterMask r2;
  r2.set(2);
  ReusePolicy dtm = *preset_policy("DTM");
  ReusePolicy rst = *preset_policy("RST");
  EXPECT_EQ(table_lookup(t, 0, regs_with(2, 5), r2, dtm).kind, LookupResult::Kind::Miss);
  EXPECT_EQ(table_lookup(t, 0, regs_with(2, 5), r2, rst).kind,
            LookupResult::Kind::SpeculativeHit);
  EXPECT_EQ(t.accesses(), 2u);
}

TEST(Table, LruEvictionVictimAndRefresh) {
  // 4 sets of 4 ways: pcs 0, 16, 32, 48, 64 share set 0.
  ReuseTable t({16, 4});
  for (Addr pc : {0u, 16u, 32u, 48u}) EXPECT_FALSE(table_insert(t, entry(pc, {1}, {pc})));
  EXPECT_EQ(t.occupancy(0), 4u);
  auto victim = table_insert(t, entry(64, {1}, {64}));
  ASSERT_TRUE(victim);
  EXPECT_EQ(victim->pc, 0u);  // first inserted, least recently used

  // Touch 16 so that 32 becomes the LRU entry.
  RegisterMask none;
  EXPECT_TRUE(t.lookup(16, regs_with(1, 16), none, false).hit());
  victim = t.insert(entry(80, {1}, {80}));
  ASSERT_TRUE(victim);
  EXPECT_EQ(victim->pc, 32u);

  // Same pc and input context refreshes in place.
  EXPECT_FALSE(t.insert(entry(48, {1}, {48})));
  EXPECT_EQ(t.occupancy(0), 4u);
  EXPECT_EQ(t.ways(0).front().pc, 48u);
  // A different input context for the same pc is a separate entry.
  victim = t.insert(entry(48, {1}, {49}));
  ASSERT_TRUE(victim);
  EXPECT_EQ(victim->pc, 64u);
}

TEST(Table, MostRecentMatchWins) {
  ReuseTable t({4, 4});
  TraceEntry a = entry(0, {1}, {1});
  a.ocr = {2};
  a.ocv = {10};
  TraceEntry b = a;
  b.ocv = {20};
  b.icr = {3};
  b.icv = {1};
  t.insert(a);
  t.insert(b);
  auto regs = regs_with(1, 1);
  regs[3] = 1;
  auto hit = t.lookup(0, regs, RegisterMask{}, false);
  ASSERT_TRUE(hit.hit());
  EXPECT_EQ(hit.entry.ocv, (std::vector<Word>{20}));
}

TEST(Table, DumpFormat) {
  ReuseTable t({8, 2});
  TraceEntry e = entry(0x10, {1, 2}, {0x5, 0xff});
  e.npc = 0x1c;
  e.len = 3;
  e.ocr = {3};
  e.ocv = {0xa};
  e.bm = 1;
  e.btk = 1;
  t.insert(e);
  t.insert(entry(0x4, {}, {}));
  std::ostringstream os;
  t.dump(os);
  EXPECT_EQ(os.str(), "0 0 10 1c 3 1/5,2/ff 3/a 1 1\n1 0 4 8 1 - - 0 0\n");
}

TEST(Reuse, ApplyWritesOutputsSkipsR0AndMovesPc) {
  Program p = parse_program("halt");
  MachineState s = MachineState::boot(p);
  TraceEntry e = entry(0, {}, {});
  e.ocr = {3, 0};
  e.ocv = {15, 9};
  e.npc = 12;
  e.len = 3;
  e.class_counts[index_of(InstrClass::AddSub)] = 3;
  auto summary = apply_reuse(s, e);
  EXPECT_EQ(s.reg(3), 15u);
  EXPECT_EQ(s.reg(0), 0u);
  EXPECT_EQ(s.pc, 12u);
  EXPECT_EQ(summary.reused_ops, 3u);
  EXPECT_EQ(summary.reused_by_class[index_of(InstrClass::AddSub)], 3u);
}

TEST(Reuse, SpeculationIsAllOrNothing) {
  PendingSpeculation p;
  p.assumed = {{2, 5}};
  std::array<Word, kNumRegs> actual{};
  actual[2] = 5;
  EXPECT_EQ(validate_speculation(p, actual), SpeculationVerdict::Confirmed);
  actual[2] = 6;
  EXPECT_EQ(validate_speculation(p, actual), SpeculationVerdict::Mispredicted);
  p.assumed = {{2, 5}, {4, 1}};
  actual[2] = 5;
  actual[4] = 0;
  EXPECT_EQ(validate_speculation(p, actual), SpeculationVerdict::Mispredicted);
}

TEST(Engine, SplitModeConsultsTraceTableThenInstructionTable) {
  ReuseEngine e(*preset_policy("RST-O"));
  ASSERT_TRUE(e.instr_table().has_value());
  std::array<Word, kNumRegs> regs{};
  auto r = e.lookup(0, regs, RegisterMask{}, true);
  EXPECT_FALSE(r.hit());
  EXPECT_EQ(e.counters().trace_table_accesses, 1u);
  EXPECT_EQ(e.counters().instr_table_accesses, 1u);
}

TEST(Engine, BaselineNeverLooksUpOrCaptures) {
  Program p = parse_program(kLoop);
  ReuseEngine e(*preset_policy("Baseline"));
  MachineState s = MachineState::boot(p);
  unsigned captured = 0;
  while (!s.halted) {
    auto in = *p.at(s.pc);
    EXPECT_FALSE(e.may_lookup(in));
    for (const auto& op : decompose(step(s, p))) captured += e.commit(op);
  }
  EXPECT_EQ(captured, 0u);
  EXPECT_EQ(e.trace_table().size(), 0u);
}

TEST(Engine, CapturedEntriesStayWithinNarrowScopes) {
  ReuseEngine e(policy_with(1, 1, 1));
  Program p = parse_program(kLoop);
  MachineState s = MachineState::boot(p);
  unsigned captured = 0;
  while (!s.halted)
    for (const auto& op : decompose(step(s, p))) captured += e.commit(op);
  EXPECT_GT(captured, 0u);
  const auto& t = e.trace_table();
  for (std::uint32_t set = 0; set < t.geometry().sets(); ++set) {
    for (const auto& entry : t.ways(set)) {
      EXPECT_LE(entry.icr.size(), 1u);
      EXPECT_LE(entry.ocr.size(), 1u);
      EXPECT_LE(entry.branch_count(), 1u);
    }
  }
}

TEST(Presets, GeometryAndModes) {
  auto rst = *preset_policy("RST");
  EXPECT_EQ(rst.mode, ReuseMode::RST);
  EXPECT_EQ(rst.table_mode, TableMode::Unified);
  EXPECT_EQ(rst.input_scope, 2u);
  EXPECT_EQ(rst.output_scope, 1u);
  EXPECT_EQ(rst.trace_table, (TableGeometry{512, 4}));
  EXPECT_EQ(preset_policy("RST-Loop")->loop_gate, LoopGateMode::InsideLoopsOnly);
  EXPECT_EQ(preset_policy("RST-Out-Of-Loop")->loop_gate, LoopGateMode::OutsideLoopsOnly);
  EXPECT_EQ(preset_policy("DTM")->mode, ReuseMode::DTM);
  auto m = *preset_policy("RST-M");
  EXPECT_EQ(m.table_mode, TableMode::Split);
  EXPECT_EQ(m.input_scope, 4u);
  EXPECT_EQ(m.output_scope, 4u);
  EXPECT_EQ(m.instr_table, (TableGeometry{1024, 4}));
  EXPECT_EQ(m.subset, DomainSubset(SubsetName::M));
  EXPECT_FALSE(preset_policy("RST-Q"));
  EXPECT_EQ(preset_policy_names().size(), 12u);
  ReusePolicy bad = rst;
  bad.trace_table = {510, 4};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}
