// rstsim: run programs and policy sweeps on the trace-reuse simulator.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rstsim/experiment.hpp"

namespace fs = std::filesystem;
using namespace rst;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitOracle = 2;

std::string read_file(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os || !(os << text)) throw std::runtime_error("cannot write " + path.string());
}

ExperimentConfig config_from(const std::string& path) {
  return path.empty() ? default_config() : load_config(path);
}

int report_oracle(const ExperimentResult& result) {
  if (result.oracle_ok()) return kExitOk;
  for (const auto& r : result.runs)
    if (!r.oracle_ok)
      std::cerr << "oracle mismatch: " << r.workload << " under " << r.policy << "\n";
  return kExitOracle;
}

int cmd_simulate(const std::string& program_path, const std::string& policy,
                 const std::string& config_path, const fs::path& out) {
  ExperimentConfig config = config_from(config_path);
  config.policies = {policy};
  config.workloads.clear();
  config.generate.clear();

  // An existing file wins over a built-in workload of the same name.
  Workload w;
  if (auto builtin = find_builtin(program_path); builtin && !fs::exists(program_path)) {
    w = *builtin;
  } else {
    w.name = fs::path(program_path).stem().string();
    w.program = parse_program(read_file(program_path));
  }
  ExperimentResult result = run_experiment(config, {w});
  write_reports(result, out);

  const std::string label = result.rows.front().policy;
  for (const auto& run : result.runs) {
    if (run.policy != label) continue;
    write_file(out / "stats.json", to_json(run.stats) + "\n");
    write_file(out / "table.txt", run.table_dump);
    if (config.log_window > 0) {
      std::ostringstream log;
      write_log(log, run.log);
      write_file(out / "log.txt", log.str());
    }
    std::cout << w.name << " " << label << ": " << run.stats.cycles << " cycles, "
              << run.stats.reused_ops << "/" << run.stats.dyn_ops << " micro-ops reused\n";
  }
  return report_oracle(result);
}

int cmd_sweep(const std::string& config_path, const fs::path& out) {
  ExperimentConfig config = load_config(config_path);
  ExperimentResult result = run_experiment(config);
  write_reports(result, out);
  std::cout << result.rows.size() << " rows written to " << (out / "report.csv").string() << "\n";
  return report_oracle(result);
}

int cmd_workloads_list() {
  for (const auto& w : builtin_workloads()) {
    std::cout << w.name;
    const char* sep = "  ";
    for (auto t : w.tags) {
      std::cout << sep << to_string(t);
      sep = ",";
    }
    std::cout << "\n";
  }
  return kExitOk;
}

int cmd_workloads_dump(const std::string& name) {
  auto w = find_builtin(name);
  if (!w) throw ConfigError("unknown workload '" + name + "'");
  std::cout << unparse(w->program);
  return kExitOk;
}

int cmd_keys() {
  for (const auto& k : config_keys())
    std::cout << k.name << "  (" << env_var_name(k.name) << ")  " << k.help << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-reuse microarchitecture simulator"};
  app.require_subcommand(1);

  std::string program_path, policy, config_path, out_dir;
  auto* simulate = app.add_subcommand("simulate", "Run one program under Baseline and a policy");
  simulate->add_option("--program", program_path, "Assembly file or built-in workload name")->required();
  simulate->add_option("--policy", policy, "Policy preset name")->required();
  simulate->add_option("--config", config_path, "Config file (key = value)");
  simulate->add_option("--out", out_dir, "Output directory")->required();

  std::string sweep_config, sweep_out;
  auto* sweep = app.add_subcommand("sweep", "Run a workload x policy x sweep-point grid");
  sweep->add_option("--config", sweep_config, "Config file (key = value)")->required();
  sweep->add_option("--out", sweep_out, "Output directory")->required();

  auto* workloads = app.add_subcommand("workloads", "Inspect the built-in workloads");
  workloads->require_subcommand(1);
  auto* list = workloads->add_subcommand("list", "Names and tags");
  std::string dump_name;
  auto* dump = workloads->add_subcommand("dump", "Print a workload as assembly");
  dump->add_option("name", dump_name, "Workload name")->required();

  auto* keys = app.add_subcommand("keys", "Config keys and their environment variables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*simulate) return cmd_simulate(program_path, policy, config_path, out_dir);
    if (*sweep) return cmd_sweep(sweep_config, sweep_out);
    if (*list) return cmd_workloads_list();
    if (*dump) return cmd_workloads_dump(dump_name);
    if (*keys) return cmd_keys();
  } catch (const ParseError& e) {
    std::cerr << "error: " << program_path << ": " << e.what() << "\n";
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
