#include "rstsim/stats.hpp"

#include <iomanip>
#include <sstream>

#include "json.hpp"

namespace rst {

namespace {

using nlohmann::ordered_json;

CacheCounters diff(const CacheCounters& a, const CacheCounters& b) {
  return {a.accesses - b.accesses, a.misses - b.misses};
}

ordered_json by_class(const ClassCounts& counts) {
  ordered_json j = ordered_json::object();
  for (auto c : kAllClasses) j[std::string(to_string(c))] = counts[index_of(c)];
  return j;
}

ClassCounts by_class_from(const ordered_json& j) {
  ClassCounts out{};
  for (auto c : kAllClasses) out[index_of(c)] = j.at(std::string(to_string(c))).get<std::uint64_t>();
  return out;
}

ordered_json cache_json(const CacheCounters& c) {
  return {{"accesses", c.accesses}, {"misses", c.misses}};
}

CacheCounters cache_from(const ordered_json& j) {
  return {j.at("accesses").get<std::uint64_t>(), j.at("misses").get<std::uint64_t>()};
}

}  // namespace

SimStats operator-(const SimStats& a, const SimStats& b) {
  SimStats d;
  d.cycles = a.cycles - b.cycles;
  d.dyn_ops = a.dyn_ops - b.dyn_ops;
  d.reused_ops = a.reused_ops - b.reused_ops;
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    d.dyn_ops_by_class[i] = a.dyn_ops_by_class[i] - b.dyn_ops_by_class[i];
    d.reused_ops_by_class[i] = a.reused_ops_by_class[i] - b.reused_ops_by_class[i];
  }
  d.traces_captured = a.traces_captured - b.traces_captured;
  d.trace_table_accesses = a.trace_table_accesses - b.trace_table_accesses;
  d.instr_table_accesses = a.instr_table_accesses - b.instr_table_accesses;
  d.regular_hits = a.regular_hits - b.regular_hits;
  d.speculative_hits = a.speculative_hits - b.speculative_hits;
  d.misspeculations = a.misspeculations - b.misspeculations;
  d.branches_predicted = a.branches_predicted - b.branches_predicted;
  d.branch_mispredictions = a.branch_mispredictions - b.branch_mispredictions;
  d.l1i = diff(a.l1i, b.l1i);
  d.l1d = diff(a.l1d, b.l1d);
  d.l2 = diff(a.l2, b.l2);
  d.l3 = diff(a.l3, b.l3);
  d.energy_per_access = a.energy_per_access;
  d.energy_proxy = static_cast<double>(d.table_accesses()) * d.energy_per_access;
  return d;
}

std::string to_json(const SimStats& s) {
  ordered_json j;
  j["cycles"] = s.cycles;
  j["dyn_ops"] = {{"total", s.dyn_ops}, {"by_class", by_class(s.dyn_ops_by_class)}};
  j["reused_ops"] = {{"total", s.reused_ops}, {"by_class", by_class(s.reused_ops_by_class)}};
  j["traces_captured"] = s.traces_captured;
  j["table_accesses"] = {{"trace", s.trace_table_accesses},
                         {"instr", s.instr_table_accesses},
                         {"total", s.table_accesses()}};
  j["table_hits"] = {{"regular", s.regular_hits}, {"speculative", s.speculative_hits}};
  j["misspeculations"] = s.misspeculations;
  j["predictor"] = {{"branches", s.branches_predicted},
                    {"mispredictions", s.branch_mispredictions}};
  j["cache"] = {{"l1i", cache_json(s.l1i)},
                {"l1d", cache_json(s.l1d)},
                {"l2", cache_json(s.l2)},
                {"l3", cache_json(s.l3)}};
  j["energy_per_access"] = s.energy_per_access;
  j["energy_proxy"] = s.energy_proxy;
  return j.dump(2);
}

SimStats stats_from_json(const std::string& text) {
  auto j = ordered_json::parse(text);
  SimStats s;
  s.cycles = j.at("cycles").get<std::uint64_t>();
  s.dyn_ops = j.at("dyn_ops").at("total").get<std::uint64_t>();
  s.dyn_ops_by_class = by_class_from(j.at("dyn_ops").at("by_class"));
  s.reused_ops = j.at("reused_ops").at("total").get<std::uint64_t>();
  s.reused_ops_by_class = by_class_from(j.at("reused_ops").at("by_class"));
  s.traces_captured = j.at("traces_captured").get<std::uint64_t>();
  s.trace_table_accesses = j.at("table_accesses").at("trace").get<std::uint64_t>();
  s.instr_table_accesses = j.at("table_accesses").at("instr").get<std::uint64_t>();
  s.regular_hits = j.at("table_hits").at("regular").get<std::uint64_t>();
  s.speculative_hits = j.at("table_hits").at("speculative").get<std::uint64_t>();
  s.misspeculations = j.at("misspeculations").get<std::uint64_t>();
  s.branches_predicted = j.at("predictor").at("branches").get<std::uint64_t>();
  s.branch_mispredictions = j.at("predictor").at("mispredictions").get<std::uint64_t>();
  s.l1i = cache_from(j.at("cache").at("l1i"));
  s.l1d = cache_from(j.at("cache").at("l1d"));
  s.l2 = cache_from(j.at("cache").at("l2"));
  s.l3 = cache_from(j.at("cache").at("l3"));
  s.energy_per_access = j.at("energy_per_access").get<double>();
  s.energy_proxy = j.at("energy_proxy").get<double>();
  return s;
}

std::string stats_csv_header() {
  std::ostringstream os;
  os << "cycles,dyn_ops";
  for (auto c : kAllClasses) os << ",dyn_" << to_string(c);
  os << ",reused_ops";
  for (auto c : kAllClasses) os << ",reused_" << to_string(c);
  os << ",traces_captured,trace_table_accesses,instr_table_accesses,table_accesses"
        ",regular_hits,speculative_hits,misspeculations,branches,branch_mispredictions";
  for (const char* level : {"l1i", "l1d", "l2", "l3"})
    os << ',' << level << "_accesses," << level << "_misses";
  os << ",energy_per_access,energy_proxy";
  return os.str();
}

std::string stats_csv_row(const SimStats& s) {
  std::ostringstream os;
  os << s.cycles << ',' << s.dyn_ops;
  for (auto v : s.dyn_ops_by_class) os << ',' << v;
  os << ',' << s.reused_ops;
  for (auto v : s.reused_ops_by_class) os << ',' << v;
  os << ',' << s.traces_captured << ',' << s.trace_table_accesses << ','
     << s.instr_table_accesses << ',' << s.table_accesses() << ',' << s.regular_hits
     << ',' << s.speculative_hits << ',' << s.misspeculations << ','
     << s.branches_predicted << ',' << s.branch_mispredictions;
  for (const auto* c : {&s.l1i, &s.l1d, &s.l2, &s.l3})
    os << ',' << c->accesses << ',' << c->misses;
  os << std::fixed << std::setprecision(6) << ',' << s.energy_per_access << ','
     << s.energy_proxy;
  return os.str();
}

}  // namespace rst
