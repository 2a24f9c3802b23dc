#include "rstsim/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace rst {

namespace {

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  while (!s.empty()) {
    auto comma = s.find(',');
    auto item = trim(s.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

std::uint64_t parse_u64(std::string_view s) {
  s = trim(s);
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("expected a non-negative integer, got '" + std::string(s) + "'");
  return v;
}

unsigned parse_unsigned(std::string_view s) {
  auto v = parse_u64(s);
  if (v > 0xffffffffu) throw ConfigError("value too large: '" + std::string(s) + "'");
  return static_cast<unsigned>(v);
}

double parse_double(std::string_view s) {
  std::string str(trim(s));
  try {
    std::size_t used = 0;
    double v = std::stod(str, &used);
    if (used == str.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("expected a number, got '" + str + "'");
}

// "ENTRIESxASSOC"
TableGeometry parse_geometry(std::string_view s) {
  auto x = s.find('x');
  if (x == std::string_view::npos) throw ConfigError("expected ENTRIESxASSOC, got '" + std::string(s) + "'");
  return {parse_unsigned(s.substr(0, x)), parse_unsigned(s.substr(x + 1))};
}

template <typename F>
Setter uint_field(F field) {
  return [field](ExperimentConfig& c, std::string_view v) { field(c) = parse_unsigned(v); };
}

const std::vector<std::pair<ConfigKey, Setter>>& key_table() {
  static const std::vector<std::pair<ConfigKey, Setter>> table = {
      {{"workloads", "comma-separated built-in workload names, or `all`"},
       [](auto& c, auto v) { c.workloads = split_list(v); }},
      {{"generate", "generated workloads as KIND:SIZE, comma-separated"},
       [](auto& c, auto v) {
         c.generate.clear();
         for (const auto& item : split_list(v)) {
           auto colon = item.find(':');
           if (colon == std::string::npos) throw ConfigError("generate expects KIND:SIZE");
           auto tag = tag_from_string(item.substr(0, colon));
           if (!tag) throw ConfigError("unknown workload kind '" + item.substr(0, colon) + "'");
           c.generate.push_back({*tag, parse_unsigned(std::string_view(item).substr(colon + 1))});
         }
       }},
      {{"policies", "comma-separated policy presets"},
       [](auto& c, auto v) { c.policies = split_list(v); }},
      {{"reference_policy", "policy that access reductions are measured against"},
       [](auto& c, auto v) { c.reference_policy = std::string(trim(v)); }},
      {{"max_ops", "micro-op budget per run"},
       [](auto& c, auto v) { c.max_ops = parse_u64(v); }},
      {{"fast_forward", "micro-ops committed before statistics start"},
       [](auto& c, auto v) { c.fast_forward = parse_u64(v); }},
      {{"seed", "seed for generated workloads"},
       [](auto& c, auto v) { c.seed = parse_u64(v); }},
      {{"threads", "worker threads, 0 for one per core"},
       uint_field([](auto& c) -> auto& { return c.threads; })},
      {{"log_window", "dynamic log lines kept per run, 0 for none"},
       [](auto& c, auto v) { c.log_window = parse_u64(v); }},
      {{"width", "fetch and issue width"},
       uint_field([](auto& c) -> auto& { return c.timing.width; })},
      {{"frontend_depth", "cycles from fetch to earliest issue"},
       uint_field([](auto& c) -> auto& { return c.timing.frontend_depth; })},
      {{"mispredict_penalty", "cycles after a mispredicted branch resolves"},
       uint_field([](auto& c) -> auto& { return c.timing.branch_mispredict_penalty; })},
      {{"reuse_hit_latency", "cycles from table lookup to reused outputs"},
       uint_field([](auto& c) -> auto& { return c.timing.reuse_hit_latency; })},
      {{"rollback_penalty", "cycles after a misspeculation resolves"},
       uint_field([](auto& c) -> auto& { return c.timing.rollback_penalty; })},
      {{"window", "instructions in flight"},
       uint_field([](auto& c) -> auto& { return c.timing.window; })},
      {{"mul_latency", "integer multiply latency"},
       uint_field([](auto& c) -> auto& { return c.timing.mul_latency; })},
      {{"fadd_latency", "floating add latency"},
       uint_field([](auto& c) -> auto& { return c.timing.fadd_latency; })},
      {{"alu_units", "integer/branch/address units"},
       uint_field([](auto& c) -> auto& { return c.timing.fu.alu; })},
      {{"mul_units", "multiply units"},
       uint_field([](auto& c) -> auto& { return c.timing.fu.mul; })},
      {{"memory_units", "load/store ports"},
       uint_field([](auto& c) -> auto& { return c.timing.fu.memory; })},
      {{"l1_size", "L1 bytes (instruction and data each)"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.l1.size_bytes; })},
      {{"l1_assoc", "L1 ways"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.l1.assoc; })},
      {{"l1_line", "L1 line bytes"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.l1.line_bytes; })},
      {{"l1_latency", "L1 hit cycles"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.l1.hit_cycles; })},
      {{"l2_size", "L2 bytes"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.l2.size_bytes; })},
      {{"l2_assoc", "L2 ways"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.l2.assoc; })},
      {{"l2_line", "L2 line bytes"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.l2.line_bytes; })},
      {{"l2_latency", "L2 hit cycles"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.l2.hit_cycles; })},
      {{"l3_size", "L3 bytes"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.l3.size_bytes; })},
      {{"l3_assoc", "L3 ways"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.l3.assoc; })},
      {{"l3_line", "L3 line bytes"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.l3.line_bytes; })},
      {{"l3_latency", "L3 hit cycles"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.l3.hit_cycles; })},
      {{"memory_latency", "main memory cycles"},
       uint_field([](auto& c) -> auto& { return c.timing.cache.memory_cycles; })},
      {{"history_bits", "global branch history length"},
       uint_field([](auto& c) -> auto& { return c.timing.predictor.history_bits; })},
      {{"input_scope", "live-in registers per trace (overrides presets)"},
       [](auto& c, auto v) { c.input_scope = parse_unsigned(v); }},
      {{"output_scope", "live-out registers per trace (overrides presets)"},
       [](auto& c, auto v) { c.output_scope = parse_unsigned(v); }},
      {{"branch_limit", "branches per trace (overrides presets)"},
       [](auto& c, auto v) { c.branch_limit = parse_unsigned(v); }},
      {{"trace_table", "trace table as ENTRIESxASSOC (overrides presets)"},
       [](auto& c, auto v) { c.trace_table = parse_geometry(trim(v)); }},
      {{"instr_table", "instruction table as ENTRIESxASSOC (split presets)"},
       [](auto& c, auto v) { c.instr_table = parse_geometry(trim(v)); }},
      {{"read_energy", "energy per table read with branch fields"},
       [](auto& c, auto v) { c.timing.read_energy = parse_double(v); }},
      {{"read_energy_no_branch", "energy per table read without branch fields"},
       [](auto& c, auto v) { c.timing.read_energy_no_branch = parse_double(v); }},
      {{"sweep_points", "L1BYTESxTABLEENTRIES, comma-separated"},
       [](auto& c, auto v) {
         c.sweep.clear();
         for (const auto& item : split_list(v)) {
           auto g = parse_geometry(item);
           c.sweep.push_back({g.entries, g.assoc});
         }
       }},
  };
  return table;
}

const Setter* find_setter(std::string_view key) {
  for (const auto& [k, setter] : key_table())
    if (k.name == key) return &setter;
  return nullptr;
}

void apply_env(ExperimentConfig& config, const EnvLookup& env) {
  for (const auto& [key, setter] : key_table()) {
    auto name = env_var_name(key.name);
    auto value = env(name);
    if (!value) continue;
    try {
      setter(config, *value);
    } catch (const ConfigError& e) {
      throw ConfigError(name + ": " + e.what());
    }
  }
}

// Runs fn(i) for i in [0, n) on up to `threads` workers; rethrows the
// exception of the lowest failing index.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::string SweepPoint::label() const {
  return "l1_" + std::to_string(l1_bytes) + "_t" + std::to_string(table_entries);
}

void ExperimentConfig::validate() const {
  if (policies.empty()) throw ConfigError("policy list is empty");
  for (const auto& p : policies)
    if (!preset_policy(p)) throw ConfigError("unknown policy '" + p + "'");
  if (!preset_policy(reference_policy))
    throw ConfigError("unknown reference policy '" + reference_policy + "'");
  if (max_ops == 0) throw ConfigError("max_ops must be positive");
  if (fast_forward >= max_ops) throw ConfigError("fast_forward must be below max_ops");
  for (const auto& w : workloads)
    if (w != "all" && !find_builtin(w)) throw ConfigError("unknown workload '" + w + "'");
  for (const auto& g : generate)
    if (g.size < kMinGenerateSize || g.size > kMaxGenerateSize)
      throw ConfigError("generated workload size out of range");
  try {
    timing.validate();
    for (const auto& pt : sweep) {
      TimingConfig t = timing;
      t.cache.l1.size_bytes = pt.l1_bytes;
      t.validate();
    }
    for (const auto& p : policies) {
      ReusePolicy policy = resolve_policy(*this, p);
      policy.validate();
      for (const auto& pt : sweep) {
        policy.trace_table.entries = pt.table_entries;
        policy.validate();
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> v;
    for (const auto& [k, setter] : key_table()) v.push_back(k);
    return v;
  }();
  return keys;
}

std::string env_var_name(std::string_view key) {
  std::string name = "RSTSIM_";
  for (char c : key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return name;
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

ExperimentConfig parse_config(std::string_view text, const EnvLookup& env) {
  ExperimentConfig config;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    auto where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    auto key = trim(line.substr(0, eq));
    const Setter* setter = find_setter(key);
    if (!setter) throw ConfigError(where + "unknown key '" + std::string(key) + "'");
    try {
      (*setter)(config, trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  apply_env(config, env);
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path, const EnvLookup& env) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), env);
}

ExperimentConfig default_config(const EnvLookup& env) { return parse_config("", env); }

ReusePolicy resolve_policy(const ExperimentConfig& config, std::string_view name) {
  auto p = preset_policy(name);
  if (!p) throw ConfigError("unknown policy '" + std::string(name) + "'");
  if (config.input_scope) p->input_scope = *config.input_scope;
  if (config.output_scope) p->output_scope = *config.output_scope;
  if (config.branch_limit) p->branch_limit = *config.branch_limit;
  if (config.trace_table) p->trace_table = *config.trace_table;
  if (config.instr_table) p->instr_table = *config.instr_table;
  return *p;
}

std::vector<Workload> resolve_workloads(const ExperimentConfig& config) {
  std::vector<Workload> out;
  bool all = config.workloads.empty() && config.generate.empty();
  for (const auto& name : config.workloads) all = all || name == "all";
  if (all) {
    out = builtin_workloads();
  } else {
    for (const auto& name : config.workloads) {
      auto w = find_builtin(name);
      if (!w) throw ConfigError("unknown workload '" + name + "'");
      out.push_back(std::move(*w));
    }
  }
  for (const auto& g : config.generate) out.push_back(generate(g.kind, g.size, config.seed));
  return out;
}

bool ExperimentResult::oracle_ok() const {
  return std::all_of(runs.begin(), runs.end(), [](const RunRecord& r) { return r.oracle_ok; });
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  return run_experiment(config, resolve_workloads(config));
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const std::vector<Workload>& workloads) {
  config.validate();
  if (workloads.empty()) throw ConfigError("no workloads selected");

  std::vector<std::string> names = config.policies;
  for (const std::string& extra : {std::string("Baseline"), config.reference_policy})
    if (std::find(names.begin(), names.end(), extra) == names.end()) names.push_back(extra);
  std::vector<std::optional<SweepPoint>> points;
  if (config.sweep.empty())
    points.push_back(std::nullopt);
  else
    points.assign(config.sweep.begin(), config.sweep.end());

  std::vector<ReferenceRun> references(workloads.size());
  parallel_for(workloads.size(), config.threads, [&](std::size_t i) {
    references[i] = run_reference(workloads[i].program, config.max_ops);
  });

  const std::size_t per_workload = points.size() * names.size();
  auto run_index = [&](std::size_t w, std::size_t pt, std::size_t p) {
    return (w * points.size() + pt) * names.size() + p;
  };
  ExperimentResult result;
  result.runs.resize(workloads.size() * per_workload);
  parallel_for(result.runs.size(), config.threads, [&](std::size_t i) {
    const std::size_t w = i / per_workload;
    const std::size_t pt = (i % per_workload) / names.size();
    const std::size_t p = i % names.size();
    ReusePolicy policy = resolve_policy(config, names[p]);
    TimingConfig timing = config.timing;
    std::string label = names[p];
    if (points[pt]) {
      timing.cache.l1.size_bytes = points[pt]->l1_bytes;
      policy.trace_table.entries = points[pt]->table_entries;
      label += "@" + points[pt]->label();
    }
    SimOptions options{config.max_ops, config.fast_forward, config.log_window};
    SimResult sim = simulate(workloads[w].program, policy, timing, options);
    RunRecord& r = result.runs[i];
    r.workload = workloads[w].name;
    r.policy = label;
    r.stats = sim.stats;
    r.halted = sim.halted;
    r.oracle_ok = sim.final_state == references[w].state && sim.halted == references[w].halted;
    r.table_dump = std::move(sim.table_dump);
    r.log = std::move(sim.log);
  });

  const auto baseline = static_cast<std::size_t>(
      std::find(names.begin(), names.end(), "Baseline") - names.begin());
  const auto reference = static_cast<std::size_t>(
      std::find(names.begin(), names.end(), config.reference_policy) - names.begin());
  for (std::size_t w = 0; w < workloads.size(); ++w) {
    for (std::size_t pt = 0; pt < points.size(); ++pt) {
      const RunRecord& base = result.runs[run_index(w, pt, baseline)];
      const RunRecord& ref = result.runs[run_index(w, pt, reference)];
      for (std::size_t p = 0; p < config.policies.size(); ++p) {
        const RunRecord& run = result.runs[run_index(w, pt, p)];
        ReusePolicy policy = resolve_policy(config, names[p]);
        MetricRow row;
        row.workload = run.workload;
        row.policy = run.policy;
        row.cycles = run.stats.cycles;
        row.speedup = speedup(TaggedStats{base.workload, base.stats},
                              TaggedStats{run.workload, run.stats});
        row.rr = reuse_rate(run.stats, policy.subset);
        row.ei = efficiency_index(row.speedup, row.rr);
        row.table_accesses = run.stats.table_accesses();
        // A reference without lookups (nothing eligible) gives no reduction.
        row.access_reduction = ref.stats.table_accesses() == 0
                                   ? 0.0
                                   : access_reduction(ref.stats, run.stats);
        row.mix = mix_distribution(run.stats);
        row.oracle_ok = run.oracle_ok;
        result.rows.push_back(std::move(row));
      }
    }
  }
  result.aggregates = aggregate(result.rows);
  return result;
}

void write_reports(const ExperimentResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "report.csv", to_csv(result.rows));
  write_file(dir / "report.json", to_json(result.rows, result.aggregates));
  std::ostringstream stats;
  stats << "workload,policy,halted,oracle_ok," << stats_csv_header() << '\n';
  for (const auto& r : result.runs)
    stats << r.workload << ',' << r.policy << ',' << (r.halted ? 1 : 0) << ','
          << (r.oracle_ok ? 1 : 0) << ',' << stats_csv_row(r.stats) << '\n';
  write_file(dir / "stats.csv", stats.str());
}

}  // namespace rst
