#include <gtest/gtest.h>

#include <map>
#include <random>
#include <sstream>

#include "rstsim/timing.hpp"
#include "rstsim/workloads.hpp"

using namespace rst;

namespace {

struct OracleOp {
  RegIndex dest;
  RegIndex src1;
  RegIndex src2;
};

// Independent list scheduler for straight-line, single-cycle ALU code that
// fits one I-cache line, followed by halt. Fetch waits out the cold I-cache
// miss, then delivers `width` per cycle; each op issues at the first cycle
// no earlier than fetch + depth and its sources with a free ALU and slot.
std::uint64_t oracle_cycles(const std::vector<OracleOp>& ops, const TimingConfig& cfg) {
  const auto& c = cfg.cache;
  const std::uint64_t first_fetch =
      c.l1.hit_cycles + c.l2.hit_cycles + c.l3.hit_cycles + c.memory_cycles - 1;
  std::map<std::uint64_t, unsigned> alu_used, slot_used;
  std::map<RegIndex, std::uint64_t> ready;
  std::uint64_t finish = 0;
  for (std::size_t i = 0; i <= ops.size(); ++i) {
    const std::uint64_t fetch = first_fetch + i / cfg.width;
    std::uint64_t t = fetch + cfg.frontend_depth;
    const bool is_halt = i == ops.size();
    if (!is_halt) t = std::max({t, ready[ops[i].src1], ready[ops[i].src2]});
    while (slot_used[t] >= cfg.width || (!is_halt && alu_used[t] >= cfg.fu.alu)) ++t;
    ++slot_used[t];
    if (!is_halt) {
      ++alu_used[t];
      ready[ops[i].dest] = t + 1;
    }
    finish = std::max(finish, t + 1);
  }
  return finish;
}

Program straightline(const std::vector<OracleOp>& ops) {
  std::ostringstream os;
  for (const auto& op : ops)
    os << "add r" << int(op.dest) << ", r" << int(op.src1) << ", r" << int(op.src2) << "\n";
  os << "halt\n";
  return parse_program(os.str());
}

ReusePolicy policy(const char* name) { return *preset_policy(name); }

SimResult run(const Workload& w, const char* name, SimOptions opt = {}) {
  return simulate(w.program, policy(name), TimingConfig{}, opt);
}

}  // namespace

TEST(Timing, EightIndependentAddsMatchTheOracle) {
  std::vector<OracleOp> ops;
  for (RegIndex r = 1; r <= 8; ++r) ops.push_back({r, 20, 21});
  TimingConfig cfg;
  const auto expected = oracle_cycles(ops, cfg);
  // 225 cycles of cold fetch, 10 of front end, four ALU cycles for eight
  // adds on two ALUs, and the last add's completion.
  EXPECT_EQ(expected, 225u + 10 + 3 + 1);
  EXPECT_EQ(simulate(straightline(ops), policy("Baseline"), cfg).stats.cycles, expected);
}

TEST(Timing, RandomStraightLineCodeMatchesTheOracle) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<OracleOp> ops;
    const int n = 1 + static_cast<int>(rng() % 15);
    for (int i = 0; i < n; ++i)
      ops.push_back({static_cast<RegIndex>(1 + rng() % 6), static_cast<RegIndex>(rng() % 7),
                     static_cast<RegIndex>(rng() % 7)});
    TimingConfig cfg;
    cfg.width = 1 + static_cast<unsigned>(rng() % 4);
    cfg.fu.alu = 1 + static_cast<unsigned>(rng() % 3);
    cfg.frontend_depth = static_cast<unsigned>(rng() % 12);
    const auto expected = oracle_cycles(ops, cfg);
    for (const char* name : {"Baseline", "DTM", "RST"})
      EXPECT_EQ(simulate(straightline(ops), policy(name), cfg).stats.cycles, expected)
          << "trial " << trial << " " << name;
  }
}

TEST(Timing, MultiplyLatencyAndSingleMultiplier) {
  Program p = parse_program("mul r1, r2, r3\nmul r4, r2, r3\nhalt");
  // Two multiplies share one unit: issue 235 and 236, the second done at 239.
  EXPECT_EQ(simulate(p, policy("Baseline"), TimingConfig{}).stats.cycles, 239u);
}

TEST(Timing, DtmNeverSpeculatesAndBaselineNeverLooksUp) {
  for (const auto& w : builtin_workloads()) {
    auto dtm = run(w, "DTM");
    EXPECT_EQ(dtm.stats.speculative_hits, 0u) << w.name;
    EXPECT_EQ(dtm.stats.misspeculations, 0u) << w.name;
    auto base = run(w, "Baseline");
    EXPECT_EQ(base.stats.table_accesses(), 0u) << w.name;
    EXPECT_EQ(base.stats.reused_ops, 0u) << w.name;
    EXPECT_EQ(base.stats.traces_captured, 0u) << w.name;
    EXPECT_LE(dtm.stats.cycles, base.stats.cycles) << w.name;
  }
}

TEST(Timing, GeneratedWorkloadsStayArchitecturallyTransparent) {
  for (auto kind : all_workload_tags()) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      Workload w = generate(kind, 60, seed);
      auto ref = run_reference(w.program, 1'000'000);
      for (const auto& name : preset_policy_names()) {
        auto r = simulate(w.program, *preset_policy(name), TimingConfig{});
        EXPECT_TRUE(r.final_state == ref.state) << w.name << " " << name;
        EXPECT_EQ(r.halted, ref.halted);
        EXPECT_LE(r.stats.reused_ops, r.stats.dyn_ops);
        EXPECT_LE(r.stats.table_hits(), r.stats.table_accesses());
        for (auto c : kAllClasses)
          EXPECT_LE(r.stats.reused_ops_by_class[index_of(c)], r.stats.dyn_ops_by_class[index_of(c)]);
      }
    }
  }
}

TEST(Timing, MisspeculationRollsBackExactly) {
  Workload w = varying_loop(200);
  auto r = run(w, "RST");
  EXPECT_GT(r.stats.misspeculations, 0u);
  EXPECT_GT(r.stats.speculative_hits, 0u);
  EXPECT_TRUE(r.final_state == run_reference(w.program, 1'000'000).state);
  // Committed micro-ops are exactly the reference's, rolled-back work excluded.
  EXPECT_EQ(r.stats.dyn_ops, run(w, "Baseline").stats.dyn_ops);
}

TEST(Timing, AddressCalculationsAreReusedButAccessesAreNot) {
  Program p = parse_program(R"(
      addi r1, r0, 50
      addi r8, r0, 0x400
    loop:
      lw r5, 4(r8)
      add r9, r9, r5
      addi r1, r1, -1
      bne r1, r0, loop
      halt
    .word 0x404 3
  )");
  for (const char* name : {"DTM", "RST-M", "RST-O"}) {
    auto r = simulate(p, policy(name), TimingConfig{});
    EXPECT_GT(r.stats.reused_ops_by_class[index_of(InstrClass::AddrCalc)], 0u) << name;
    EXPECT_EQ(r.stats.reused_ops_by_class[index_of(InstrClass::MemAccess)], 0u) << name;
    EXPECT_EQ(r.final_state.reg(9), 150u) << name;
  }
}

TEST(Timing, RepeatedRunsAreIdentical) {
  Workload w = mixed(300);
  for (const char* name : {"Baseline", "DTM", "RST", "RST-NotM"}) {
    auto a = run(w, name, {100000, 500, 16});
    auto b = run(w, name, {100000, 500, 16});
    EXPECT_EQ(a.stats, b.stats) << name;
    EXPECT_EQ(a.table_dump, b.table_dump) << name;
    EXPECT_EQ(a.log, b.log) << name;
  }
}

TEST(Timing, FastForwardExcludesTheWarmUpFromCounters) {
  Workload w = redundant_loop(200);
  auto full = run(w, "DTM", {1'000'000, 0, 0});
  auto measured = run(w, "DTM", {1'000'000, 900, 0});
  EXPECT_EQ(measured.stats.dyn_ops, full.stats.dyn_ops - 900);
  EXPECT_LT(measured.stats.cycles, full.stats.cycles);
  EXPECT_LT(measured.stats.table_accesses(), full.stats.table_accesses());
  EXPECT_TRUE(measured.final_state == full.final_state);

  // A boundary past the end leaves the whole run measured.
  auto beyond = run(w, "DTM", {1'000'000, 999'999, 0});
  EXPECT_EQ(beyond.stats, full.stats);
}

TEST(Timing, MaxOpsStopsANonTerminatingProgram) {
  Program p = parse_program("loop: addi r1, r1, 1\njmp loop");
  auto r = simulate(p, policy("RST"), TimingConfig{}, {5000, 0, 0});
  EXPECT_FALSE(r.halted);
  EXPECT_GE(r.stats.dyn_ops, 5000u);
  EXPECT_LE(r.stats.dyn_ops, 5000u + 8);
}

TEST(Timing, LogRecordsReuseAndLoopMembership) {
  Workload w = redundant_loop(100);
  auto r = run(w, "DTM", {1'000'000, 0, 20});
  ASSERT_EQ(r.log.size(), 20u);
  EXPECT_EQ(r.log.back().op, Opcode::Halt);
  EXPECT_EQ(r.log.back().seq + 1, r.stats.dyn_ops);
  bool any_reused = false;
  for (std::size_t i = 0; i + 1 < r.log.size(); ++i) {
    EXPECT_TRUE(r.log[i].inloop);
    any_reused = any_reused || r.log[i].reused;
  }
  EXPECT_TRUE(any_reused);
}

TEST(Timing, EntryBitsAndReadEnergy) {
  // pc + npc, (5-bit index + 32-bit value) per context slot, 2 bitmaps.
  auto o = *preset_policy("RST-O");
  auto not_b = *preset_policy("RST-NotB");
  EXPECT_EQ(entry_bits(o), 32u * 2 + 8 * 37 + 2 * 4);
  EXPECT_EQ(entry_bits(not_b), 32u * 2 + 8 * 37);
  EXPECT_EQ(entry_bits(*preset_policy("RST")), 32u * 2 + 3 * 37 + 8);
  TimingConfig t;
  EXPECT_DOUBLE_EQ(read_energy(t, o), 327.7);
  EXPECT_DOUBLE_EQ(read_energy(t, not_b), 320.6);
}

TEST(Timing, RejectsInvalidConfiguration) {
  TimingConfig t;
  t.width = 0;
  EXPECT_THROW(simulate(parse_program("halt"), policy("DTM"), t), std::invalid_argument);
  t = TimingConfig{};
  t.cache.l1.size_bytes = 1000;
  EXPECT_THROW(simulate(parse_program("halt"), policy("DTM"), t), std::invalid_argument);
}
