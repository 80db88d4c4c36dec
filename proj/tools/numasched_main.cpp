#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>

#include "numasched/config.hpp"
#include "numasched/daemon.hpp"
#include "numasched/hostsim.hpp"
#include "numasched/log.hpp"
#include "numasched/topology.hpp"

namespace {

volatile std::sig_atomic_t g_signal = 0;

void on_signal(int) { g_signal = 1; }

int cmd_daemon(const numasched::DaemonConfig& config, int ticks) {
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  numasched::Logger log(config.log_format == numasched::LogFormat::Json,
                        std::cout);
  numasched::DaemonOptions options;
  options.max_ticks = ticks;
  options.interrupted = [] { return g_signal != 0; };
  return numasched::run_daemon(config, log, options);
}

int cmd_check_topology(const std::string& sysfs_root) {
  numasched::NumaTopology topo;
  try {
    topo = numasched::discover_topology(sysfs_root);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  for (const auto& node : topo.nodes) {
    std::cout << "node" << node.id << " cpus="
              << numasched::format_cpulist(node.core_ids)
              << " mem_total_pages=" << node.mem_total_pages
              << " mem_free_pages=" << node.mem_free_pages << "\n";
  }
  std::cout << "distances:\n";
  for (const auto& row : topo.distances) {
    for (std::size_t i = 0; i < row.size(); ++i)
      std::cout << (i ? " " : "  ") << row[i];
    std::cout << "\n";
  }
  return 0;
}

int cmd_simulate(const std::string& scenario_path, const std::string& policy,
                 double horizon, const std::string& out_path) {
  namespace ns = numasched;
  ns::SimHost scenario;
  try {
    scenario = ns::load_scenario_file(scenario_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (horizon <= 0) {
    std::cerr << "error: --horizon must be positive\n";
    return 2;
  }

  std::vector<ns::Policy> policies;
  if (policy == "all") {
    policies = {ns::Policy::Noop, ns::Policy::StaticPin,
                ns::Policy::AutoBalance, ns::Policy::Proposed};
  } else {
    auto p = ns::policy_from_name(policy);
    if (!p) {
      std::cerr << "error: unknown policy '" << policy << "'\n";
      return 2;
    }
    policies = {*p};
  }

  std::vector<ns::ExperimentResult> results;
  for (ns::Policy p : policies) {
    results.push_back(ns::run_policy_experiment(scenario, p, horizon));
    const auto& r = results.back();
    std::cout << "policy=" << ns::policy_name(p) << " makespan=";
    if (r.makespan)
      std::cout << std::fixed << std::setprecision(3) << *r.makespan;
    else
      std::cout << "unfinished";
    std::cout << " reports=" << r.reports_emitted
              << " moves=" << r.moves_applied << "\n";
  }

  std::string doc =
      ns::experiment_to_json(results, scenario_path, horizon);
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) {
      std::cerr << "error: cannot write " << out_path << "\n";
      return 1;
    }
    out << doc;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"user-space NUMA-aware memory scheduler"};
  app.require_subcommand(1);

  std::string config_path;
  int interval_ms = -1;
  bool dry_run = false;
  std::string proc_root, sysfs_root, log_format;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--interval", interval_ms, "monitor interval in ms");
    cmd->add_flag("--dry-run", dry_run, "plan only, mutate nothing");
    cmd->add_option("--proc-root", proc_root, "procfs root (fixtures)");
    cmd->add_option("--sysfs-root", sysfs_root, "sysfs root (fixtures)");
    cmd->add_option("--log-format", log_format, "text or json")
        ->check(CLI::IsMember({"text", "json"}));
  };

  CLI::App* daemon = app.add_subcommand("daemon", "run the scheduler daemon");
  add_common(daemon);
  int ticks = 0;
  daemon->add_option("--ticks", ticks,
                     "stop after N monitor intervals (0 = run until signal)");

  CLI::App* simulate =
      app.add_subcommand("simulate", "run a policy experiment on a scenario");
  std::string scenario_path, policy = "proposed", out_path;
  double horizon = 0.0;
  simulate->add_option("scenario", scenario_path, "scenario JSON file")
      ->required();
  simulate->add_option("--policy", policy,
                       "noop|static-pin|auto-balance|proposed|all");
  simulate->add_option("--horizon", horizon, "simulated seconds")->required();
  simulate->add_option("--out", out_path, "write experiment JSON here");

  CLI::App* check =
      app.add_subcommand("check-topology", "print the discovered topology");
  add_common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // usage errors exit 2
  }

  try {
    if (app.got_subcommand(simulate))
      return cmd_simulate(scenario_path, policy, horizon, out_path);

    numasched::DaemonConfig config;
    if (!config_path.empty())
      config = numasched::load_config_file(config_path);
    if (interval_ms >= 0) {
      if (interval_ms == 0) {
        std::cerr << "error: --interval must be > 0\n";
        return 2;
      }
      config.interval_ms = interval_ms;
    }
    if (dry_run) config.dry_run = true;
    if (!proc_root.empty()) config.proc_root = proc_root;
    if (!sysfs_root.empty()) config.sysfs_root = sysfs_root;
    if (!log_format.empty())
      config.log_format = log_format == "json" ? numasched::LogFormat::Json
                                               : numasched::LogFormat::Text;

    if (app.got_subcommand(check))
      return cmd_check_topology(config.sysfs_root);
    return cmd_daemon(config, ticks);
  } catch (const numasched::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
