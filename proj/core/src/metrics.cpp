#include "rstsim/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include "json.hpp"

namespace rst {

namespace {

using nlohmann::ordered_json;

constexpr const char* kCsvHeader =
    "workload,policy,cycles,speedup,rr,ei,table_accesses,access_reduction,"
    "mem_frac,branch_frac,alu_frac,other_frac";

double round6(double v) { return std::round(v * 1e6) / 1e6; }

std::string fixed6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

std::uint64_t count(const ClassCounts& c, InstrClass cls) { return c[index_of(cls)]; }

void check_name(const std::string& name) {
  if (name.empty() || name.find_first_of(",\n\r") != std::string::npos)
    throw MetricError("report name must be non-empty without commas: '" + name + "'");
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = std::stod(s, &used);
  if (used != s.size()) throw MetricError("bad number '" + s + "'");
  return v;
}

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(round6(*v)) : ordered_json(nullptr);
}

std::optional<double> optional_from(const ordered_json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

}  // namespace

double reuse_rate(const SimStats& stats, const DomainSubset& subset) {
  std::uint64_t executed = 0;
  std::uint64_t reused = 0;
  for (auto c : subset.classes()) {
    executed += count(stats.dyn_ops_by_class, c);
    reused += count(stats.reused_ops_by_class, c);
  }
  if (executed == 0) return 0.0;
  return static_cast<double>(reused) / static_cast<double>(executed);
}

std::optional<double> efficiency_index(double speedup, double rr) {
  if (rr < 0) throw MetricError("negative reuse rate");
  if (rr == 0) return std::nullopt;
  return speedup / rr;
}

double speedup(const SimStats& baseline, const SimStats& mode) {
  if (mode.cycles == 0) throw MetricError("speedup of a run with zero cycles");
  return static_cast<double>(baseline.cycles) / static_cast<double>(mode.cycles);
}

double speedup(const TaggedStats& baseline, const TaggedStats& mode) {
  if (baseline.workload != mode.workload)
    throw MetricError("speedup across different workloads: " + baseline.workload +
                      " vs " + mode.workload);
  return speedup(baseline.stats, mode.stats);
}

double access_reduction(const SimStats& reference, const SimStats& restricted) {
  if (reference.table_accesses() == 0)
    throw MetricError("reference policy made no table accesses");
  return 1.0 - static_cast<double>(restricted.table_accesses()) /
                   static_cast<double>(reference.table_accesses());
}

MixFractions mix_distribution(const SimStats& stats) {
  if (stats.dyn_ops == 0) throw MetricError("instruction mix of an empty run");
  const auto& c = stats.dyn_ops_by_class;
  const double total = static_cast<double>(stats.dyn_ops);
  MixFractions m;
  m.memory = static_cast<double>(count(c, InstrClass::MemAccess) +
                                 count(c, InstrClass::AddrCalc)) / total;
  m.branch = static_cast<double>(count(c, InstrClass::Branch)) / total;
  m.alu = static_cast<double>(count(c, InstrClass::AddSub) +
                              count(c, InstrClass::OtherIntAlu)) / total;
  m.other = static_cast<double>(count(c, InstrClass::Float) + count(c, InstrClass::Syscall) +
                                count(c, InstrClass::Halt)) / total;
  return m;
}

double harmonic_mean(std::span<const double> values) {
  if (values.empty()) throw MetricError("harmonic mean of no values");
  double inv = 0;
  for (double v : values) {
    if (!(v > 0)) throw MetricError("harmonic mean needs positive values");
    inv += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inv;
}

std::vector<AggregateRow> aggregate(const std::vector<MetricRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const MetricRow*>> by_policy;
  for (const auto& r : rows) {
    auto& v = by_policy[r.policy];
    if (v.empty()) order.push_back(r.policy);
    v.push_back(&r);
  }
  std::vector<AggregateRow> out;
  for (const auto& name : order) {
    const auto& group = by_policy[name];
    std::vector<double> speedups;
    std::vector<double> eis;
    for (const auto* r : group) {
      speedups.push_back(r->speedup);
      if (r->ei && *r->ei > 0) eis.push_back(*r->ei);
    }
    AggregateRow a;
    a.policy = name;
    a.workloads = group.size();
    a.hm_speedup = harmonic_mean(speedups);
    if (eis.size() == group.size()) a.hm_ei = harmonic_mean(eis);
    out.push_back(a);
  }
  return out;
}

std::string csv_header() { return kCsvHeader; }

std::string to_csv(const std::vector<MetricRow>& rows) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  for (const auto& r : rows) {
    check_name(r.workload);
    check_name(r.policy);
    os << r.workload << ',' << r.policy << ',' << r.cycles << ',' << fixed6(r.speedup) << ','
       << fixed6(r.rr) << ',' << (r.ei ? fixed6(*r.ei) : std::string()) << ','
       << r.table_accesses << ',' << fixed6(r.access_reduction) << ','
       << fixed6(r.mix.memory) << ',' << fixed6(r.mix.branch) << ',' << fixed6(r.mix.alu)
       << ',' << fixed6(r.mix.other) << '\n';
  }
  return os.str();
}

std::vector<MetricRow> parse_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw MetricError("unexpected CSV header");
  std::vector<MetricRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != 12) throw MetricError("CSV row has wrong column count: " + line);
    MetricRow r;
    r.workload = cells[0];
    r.policy = cells[1];
    r.cycles = std::stoull(cells[2]);
    r.speedup = to_double(cells[3]);
    r.rr = to_double(cells[4]);
    if (!cells[5].empty()) r.ei = to_double(cells[5]);
    r.table_accesses = std::stoull(cells[6]);
    r.access_reduction = to_double(cells[7]);
    r.mix = {to_double(cells[8]), to_double(cells[9]), to_double(cells[10]),
             to_double(cells[11])};
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string to_json(const std::vector<MetricRow>& rows,
                    const std::vector<AggregateRow>& aggregates) {
  ordered_json j;
  j["rows"] = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json o;
    o["workload"] = r.workload;
    o["policy"] = r.policy;
    o["cycles"] = r.cycles;
    o["speedup"] = round6(r.speedup);
    o["rr"] = round6(r.rr);
    o["ei"] = optional_number(r.ei);
    o["table_accesses"] = r.table_accesses;
    o["access_reduction"] = round6(r.access_reduction);
    o["mem_frac"] = round6(r.mix.memory);
    o["branch_frac"] = round6(r.mix.branch);
    o["alu_frac"] = round6(r.mix.alu);
    o["other_frac"] = round6(r.mix.other);
    o["oracle_ok"] = r.oracle_ok;
    j["rows"].push_back(std::move(o));
  }
  j["aggregates"] = ordered_json::array();
  for (const auto& a : aggregates) {
    j["aggregates"].push_back({{"policy", a.policy},
                               {"workloads", a.workloads},
                               {"hm_speedup", round6(a.hm_speedup)},
                               {"hm_ei", optional_number(a.hm_ei)}});
  }
  return j.dump(2) + "\n";
}

Report parse_json(const std::string& text) {
  Report rep;
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const ordered_json::exception& e) {
    throw MetricError(std::string("malformed report JSON: ") + e.what());
  }
  for (const auto& o : j.at("rows")) {
    MetricRow r;
    r.workload = o.at("workload").get<std::string>();
    r.policy = o.at("policy").get<std::string>();
    r.cycles = o.at("cycles").get<std::uint64_t>();
    r.speedup = o.at("speedup").get<double>();
    r.rr = o.at("rr").get<double>();
    r.ei = optional_from(o.at("ei"));
    r.table_accesses = o.at("table_accesses").get<std::uint64_t>();
    r.access_reduction = o.at("access_reduction").get<double>();
    r.mix = {o.at("mem_frac").get<double>(), o.at("branch_frac").get<double>(),
             o.at("alu_frac").get<double>(), o.at("other_frac").get<double>()};
    r.oracle_ok = o.at("oracle_ok").get<bool>();
    rep.rows.push_back(std::move(r));
  }
  for (const auto& o : j.at("aggregates")) {
    rep.aggregates.push_back({o.at("policy").get<std::string>(),
                              o.at("workloads").get<std::size_t>(),
                              o.at("hm_speedup").get<double>(),
                              optional_from(o.at("hm_ei"))});
  }
  return rep;
}

}  // namespace rst
