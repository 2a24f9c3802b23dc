#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "rstsim/metrics.hpp"

using namespace rst;

namespace {

SimStats with_counts(std::uint64_t executed, std::uint64_t reused, InstrClass cls) {
  SimStats s;
  s.dyn_ops = executed;
  s.dyn_ops_by_class[index_of(cls)] = executed;
  s.reused_ops = reused;
  s.reused_ops_by_class[index_of(cls)] = reused;
  return s;
}

MetricRow sample_row(std::mt19937_64& rng, int i) {
  auto frac = [&] { return static_cast<double>(rng() % 1'000'000'000) / 1e9; };
  MetricRow r;
  r.workload = "w" + std::to_string(i % 3);
  r.policy = i % 2 ? "RST" : "RST-Loop@l1_32768_t512";
  r.cycles = rng() % 1'000'000;
  r.speedup = 0.5 + frac();
  r.rr = frac();
  if (i % 4 != 0) r.ei = r.speedup / (r.rr + 0.01);
  r.table_accesses = rng() % 100000;
  r.access_reduction = frac() - 0.5;
  double a = frac(), b = frac() * (1 - a), c = frac() * (1 - a - b);
  r.mix = {a, b, c, 1 - a - b - c};
  r.oracle_ok = i % 5 != 0;
  return r;
}

}  // namespace

TEST(Metrics, ReuseRateOverTheSubsetClasses) {
  DomainSubset o(SubsetName::O);
  EXPECT_DOUBLE_EQ(reuse_rate(with_counts(1000, 0, InstrClass::AddSub), o), 0.0);
  EXPECT_DOUBLE_EQ(reuse_rate(with_counts(1000, 145, InstrClass::AddSub), o), 0.145);
  EXPECT_DOUBLE_EQ(reuse_rate(with_counts(1000, 1000, InstrClass::Branch), o), 1.0);
  EXPECT_DOUBLE_EQ(reuse_rate(SimStats{}, o), 0.0);
  // Classes outside the subset do not count.
  SimStats s = with_counts(1000, 500, InstrClass::AddSub);
  s.dyn_ops_by_class[index_of(InstrClass::MemAccess)] = 1000;
  EXPECT_DOUBLE_EQ(reuse_rate(s, o), 0.5);
  EXPECT_DOUBLE_EQ(reuse_rate(s, DomainSubset(SubsetName::B)), 0.0);
}

TEST(Metrics, EfficiencyIndex) {
  EXPECT_NEAR(*efficiency_index(1.13, 0.196), 5.765, 0.001);
  EXPECT_DOUBLE_EQ(*efficiency_index(1.0, 1.0), 1.0);
  EXPECT_FALSE(efficiency_index(1.2, 0.0));
  EXPECT_THROW(efficiency_index(1.2, -0.1), MetricError);
}

TEST(Metrics, SpeedupAndAccessReduction) {
  SimStats base, mode;
  base.cycles = 1000;
  mode.cycles = 800;
  EXPECT_DOUBLE_EQ(speedup(base, mode), 1.25);
  EXPECT_DOUBLE_EQ(speedup(base, base), 1.0);
  mode.cycles = 0;
  EXPECT_THROW(speedup(base, mode), MetricError);
  mode.cycles = 800;
  EXPECT_THROW(speedup(TaggedStats{"a", base}, TaggedStats{"b", mode}), MetricError);
  EXPECT_DOUBLE_EQ(speedup(TaggedStats{"a", base}, TaggedStats{"a", mode}), 1.25);

  SimStats ref, restricted;
  ref.trace_table_accesses = 1000;
  restricted.trace_table_accesses = 880;
  EXPECT_NEAR(access_reduction(ref, restricted), 0.12, 1e-12);
  restricted.trace_table_accesses = 215;
  EXPECT_NEAR(access_reduction(ref, restricted), 0.785, 1e-12);
  EXPECT_DOUBLE_EQ(access_reduction(ref, ref), 0.0);
  restricted.trace_table_accesses = 600;
  restricted.instr_table_accesses = 600;
  EXPECT_NEAR(access_reduction(ref, restricted), -0.2, 1e-12);
  EXPECT_THROW(access_reduction(SimStats{}, ref), MetricError);
}

TEST(Metrics, MixDistribution) {
  EXPECT_EQ(mix_distribution(with_counts(10, 0, InstrClass::AddSub)), (MixFractions{0, 0, 1, 0}));
  SimStats s;
  s.dyn_ops = 8;
  for (auto c : kAllClasses) s.dyn_ops_by_class[index_of(c)] = 1;
  auto m = mix_distribution(s);
  EXPECT_DOUBLE_EQ(m.memory, 0.25);
  EXPECT_DOUBLE_EQ(m.branch, 0.125);
  EXPECT_DOUBLE_EQ(m.alu, 0.25);
  EXPECT_DOUBLE_EQ(m.other, 0.375);
  EXPECT_NEAR(m.memory + m.branch + m.alu + m.other, 1.0, 1e-9);
  EXPECT_THROW(mix_distribution(SimStats{}), MetricError);
}

TEST(Metrics, HarmonicMean) {
  std::vector<double> ones{1.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(harmonic_mean(ones), 1.0);
  std::vector<double> v{1.0, 2.0};
  EXPECT_NEAR(harmonic_mean(v), 4.0 / 3.0, 1e-9);
  std::vector<double> bad{1.0, 0.0};
  EXPECT_THROW(harmonic_mean(bad), MetricError);
  EXPECT_THROW(harmonic_mean(std::vector<double>{}), MetricError);

  // Never above the arithmetic mean.
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> xs;
    for (int i = 0, n = 1 + static_cast<int>(rng() % 10); i < n; ++i)
      xs.push_back(0.01 + static_cast<double>(rng() % 100000) / 1000.0);
    double am = 0;
    for (double x : xs) am += x;
    am /= static_cast<double>(xs.size());
    EXPECT_LE(harmonic_mean(xs), am * (1 + 1e-12));
  }
}

TEST(Metrics, AggregatesPerPolicyInFirstSeenOrder) {
  std::vector<MetricRow> rows(4);
  rows[0] = {"a", "DTM", 1, 1.0, 0.5, 2.0};
  rows[1] = {"a", "RST", 1, 2.0, 0.0, std::nullopt};
  rows[2] = {"b", "DTM", 1, 2.0, 0.5, 4.0};
  rows[3] = {"b", "RST", 1, 2.0, 0.5, 4.0};
  auto agg = aggregate(rows);
  ASSERT_EQ(agg.size(), 2u);
  EXPECT_EQ(agg[0].policy, "DTM");
  EXPECT_EQ(agg[0].workloads, 2u);
  EXPECT_NEAR(agg[0].hm_speedup, 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(*agg[0].hm_ei, 8.0 / 3.0, 1e-12);
  EXPECT_FALSE(agg[1].hm_ei);  // one workload had no EI
}

TEST(Report, CsvHeaderAndUndefinedEi) {
  MetricRow r{"redundant_loop", "DTM", 100, 1.5, 0.0, std::nullopt, 7, 0.25, {0, 0, 1, 0}};
  std::string csv = to_csv({r});
  EXPECT_EQ(csv,
            "workload,policy,cycles,speedup,rr,ei,table_accesses,access_reduction,mem_frac,"
            "branch_frac,alu_frac,other_frac\n"
            "redundant_loop,DTM,100,1.500000,0.000000,,7,0.250000,0.000000,0.000000,"
            "1.000000,0.000000\n");
  auto json = to_json({r}, aggregate({r}));
  EXPECT_NE(json.find("\"ei\": null"), std::string::npos);
  EXPECT_NE(json.find("\"oracle_ok\": true"), std::string::npos);
  r.policy = "a,b";
  EXPECT_THROW(to_csv({r}), MetricError);
}

TEST(Report, CsvAndJsonRoundTrip) {
  std::mt19937_64 rng(17);
  std::vector<MetricRow> rows;
  for (int i = 0; i < 40; ++i) rows.push_back(sample_row(rng, i));

  const std::string csv = to_csv(rows);
  auto parsed = parse_csv(csv);
  ASSERT_EQ(parsed.size(), rows.size());
  EXPECT_EQ(to_csv(parsed), csv);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(parsed[i].workload, rows[i].workload);
    EXPECT_EQ(parsed[i].policy, rows[i].policy);
    EXPECT_EQ(parsed[i].cycles, rows[i].cycles);
    EXPECT_NEAR(parsed[i].speedup, rows[i].speedup, 5e-7);
    EXPECT_NEAR(parsed[i].rr, rows[i].rr, 5e-7);
    EXPECT_EQ(parsed[i].ei.has_value(), rows[i].ei.has_value());
    if (rows[i].ei) EXPECT_NEAR(*parsed[i].ei, *rows[i].ei, 5e-7);
    EXPECT_NEAR(parsed[i].mix.other, rows[i].mix.other, 5e-7);
  }

  const auto aggs = aggregate(rows);
  const std::string json = to_json(rows, aggs);
  Report rep = parse_json(json);
  EXPECT_EQ(to_json(rep.rows, rep.aggregates), json);
  ASSERT_EQ(rep.rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rep.rows[i].oracle_ok, rows[i].oracle_ok);
    EXPECT_NEAR(rep.rows[i].access_reduction, rows[i].access_reduction, 5e-7);
  }
  ASSERT_EQ(rep.aggregates.size(), aggs.size());
  EXPECT_NEAR(rep.aggregates[0].hm_speedup, aggs[0].hm_speedup, 5e-7);

  EXPECT_THROW(parse_csv("nope\n"), MetricError);
  EXPECT_THROW(parse_json("{"), MetricError);
}
