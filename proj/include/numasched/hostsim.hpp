#ifndef NUMASCHED_HOSTSIM_HPP
#define NUMASCHED_HOSTSIM_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "numasched/procmon.hpp"
#include "numasched/scheduler.hpp"
#include "numasched/topology.hpp"
#include "numasched/types.hpp"

namespace numasched {

enum class Sharing { Low, High };
enum class Exchange { Low, Medium, High };
enum class Granularity { Fine, Medium, Coarse };

struct WorkloadProfile {
  std::string name = "custom";
  Sharing sharing = Sharing::Low;
  Exchange exchange = Exchange::Low;
  Granularity granularity = Granularity::Medium;
};

// The PARSEC benchmark characteristics the synthetic profiles are named
// after. Unknown names are rejected by the scenario loader.
const std::map<std::string, WorkloadProfile>& parsec_profiles();

struct SimTask {
  int pid = 0;
  WorkloadProfile profile;
  double importance = 1.0;
  double base_rate = 1.0;  // work units/second at zero contention
  double work_total = 0.0;
  double work_done = 0.0;
  PageMap pages;
  double access_intensity = 0.5;  // 0 = pure CPU, 1 = fully memory-bound
  CoreSet affinity;
  std::optional<int> running_core;
  std::optional<CoreSet> pin;  // scenario pin table entry, if any

  bool finished() const { return work_done >= work_total; }
  long total_pages() const;
  // utime ticks rendered into procfs: 100 ticks per second of
  // zero-contention-equivalent progress
  long long utime_ticks() const;
};

struct ContentionParams {
  double alpha = 0.5;  // remote-access penalty weight
  double beta = 1.0;   // pressure penalty weight
};

struct SimHost {
  NumaTopology topology;
  std::vector<SimTask> tasks;  // ordered by pid
  double time = 0.0;
  ContentionParams params;

  SimTask* find_task(int pid);
  const SimTask* find_task(int pid) const;
  std::map<int, long> node_page_totals() const;
  std::map<int, double> node_pressures() const;
  // topology with mem_free reflecting the pages currently resident
  NumaTopology current_topology() const;
  PinTable static_pins() const;
  void validate() const;
};

SimHost load_scenario(const std::string& json_text);
SimHost load_scenario_file(const std::string& path);

// Claim rule: in pid order, each unfinished task takes the lowest-id core
// of its affinity not already claimed this step.
void assign_cores(SimHost& host);

// base_rate * (1 - alpha*remote_ratio*ai) * (1 - beta*pressure_excess*ai),
// both damping terms clamped to [0.05, 1]. Requires a running core.
double effective_rate(const SimTask& task, const SimHost& host);

void sim_step(SimHost& host, double dt);

// relative path -> file contents
using FileTree = std::map<std::string, std::string>;

FileTree render_procfs(const SimHost& host);
FileTree render_sysfs(const SimHost& host);
void write_file_tree(const FileTree& tree, const std::string& root_dir);

// page map without zero entries, for round-trip comparisons
PageMap nonzero_pages(const PageMap& pages);

// Builds the snapshot batch the monitor would collect from render_procfs,
// through the same parsers, without touching the filesystem.
SnapshotBatch collect_from_tree(const FileTree& proc_tree, double now);

class SimBackend : public SystemBackend {
 public:
  explicit SimBackend(SimHost& host) : host_(host) {}

  OpStatus set_affinity(int pid, const CoreSet& cores) override;
  MigrateStatus migrate_pages(int pid, const NodeSet& from,
                              int to_node) override;
  std::optional<CoreSet> current_affinity(int pid) override;

  int mutation_count() const { return mutations_; }
  const std::vector<std::string>& call_log() const { return call_log_; }

 private:
  SimHost& host_;
  int mutations_ = 0;
  std::vector<std::string> call_log_;
};

enum class Policy { Noop, StaticPin, AutoBalance, Proposed };

std::optional<Policy> policy_from_name(const std::string& name);
const char* policy_name(Policy p);

struct ExperimentOptions {
  double control_interval = 1.0;  // seconds between policy decisions
  double sim_dt = 0.1;            // simulation substep
  double theta_imbalance = 0.20;
  double theta_idle = 0.10;
  double theta_contention = 0.50;
};

struct TaskOutcome {
  int pid = 0;
  bool completed = false;
  double completion_time = 0.0;  // valid when completed
};

struct ExperimentResult {
  Policy policy = Policy::Noop;
  std::vector<TaskOutcome> tasks;
  std::optional<double> makespan;  // absent unless every task completed
  int reports_emitted = 0;         // proposed policy only
  int moves_applied = 0;
};

// Deterministic closed loop: render -> parse -> report -> schedule -> apply
// -> step for `proposed`; the baselines intervene as documented.
ExperimentResult run_policy_experiment(const SimHost& scenario, Policy policy,
                                       double horizon,
                                       const ExperimentOptions& opts = {});

std::string experiment_to_json(const std::vector<ExperimentResult>& results,
                               const std::string& scenario_name,
                               double horizon);

}  // namespace numasched

#endif
