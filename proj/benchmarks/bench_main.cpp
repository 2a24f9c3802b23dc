#include <benchmark/benchmark.h>

#include <random>

#include "rstsim/machine.hpp"
#include "rstsim/reuse.hpp"
#include "rstsim/timing.hpp"
#include "rstsim/workloads.hpp"

using namespace rst;

namespace {

void BM_TableLookup(benchmark::State& state) {
  ReuseTable table({512, 4});
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2048; ++i) {
    TraceEntry e;
    e.pc = static_cast<Addr>(rng() % 4096) * 4;
    e.npc = e.pc + 4;
    e.len = 1;
    e.icr = {1, 2};
    e.icv = {static_cast<Word>(rng() % 8), static_cast<Word>(rng() % 8)};
    e.ocr = {3};
    e.ocv = {0};
    table.insert(e);
  }
  std::vector<Word> regs(kNumRegs + 1, 0);
  RegisterMask unknown;
  unknown.set(2, state.range(0) != 0);
  Addr pc = 0;
  for (auto _ : state) {
    regs[1] = static_cast<Word>(pc % 8);
    benchmark::DoNotOptimize(table.lookup(pc, regs, unknown, state.range(0) != 0));
    pc = (pc + 4) % (4096 * 4);
  }
}
BENCHMARK(BM_TableLookup)->Arg(0)->Arg(1);

void BM_Reference(benchmark::State& state) {
  auto w = redundant_loop(2000);
  for (auto _ : state) benchmark::DoNotOptimize(run_reference(w.program, w.op_bound));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(w.op_bound));
}
BENCHMARK(BM_Reference);

void BM_Simulate(benchmark::State& state, const char* workload, const char* policy) {
  auto w = *find_builtin(workload);
  auto p = *preset_policy(policy);
  SimOptions opt;
  opt.max_ops = w.op_bound;
  std::uint64_t ops = 0;
  for (auto _ : state) {
    auto r = simulate(w.program, p, TimingConfig{}, opt);
    ops += r.stats.dyn_ops;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(ops));
}
BENCHMARK_CAPTURE(BM_Simulate, redundant_baseline, "redundant_loop", "Baseline");
BENCHMARK_CAPTURE(BM_Simulate, redundant_dtm, "redundant_loop", "DTM");
BENCHMARK_CAPTURE(BM_Simulate, branchy_rst, "branchy", "RST");
BENCHMARK_CAPTURE(BM_Simulate, mixed_rst_o, "mixed", "RST-O");

}  // namespace

BENCHMARK_MAIN();
