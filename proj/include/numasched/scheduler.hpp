#ifndef NUMASCHED_SCHEDULER_HPP
#define NUMASCHED_SCHEDULER_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "numasched/reporter.hpp"
#include "numasched/topology.hpp"
#include "numasched/types.hpp"

namespace numasched {

// Administrator CPU pins, by pid or comm pattern; first match wins.
struct PinRule {
  std::optional<int> pid;
  std::string pattern;
  CoreSet cores;
};

class PinTable {
 public:
  PinTable() = default;
  explicit PinTable(std::vector<PinRule> rules) : rules_(std::move(rules)) {}

  std::optional<CoreSet> lookup(int pid, const std::string& comm) const;
  const std::vector<PinRule>& rules() const { return rules_; }
  bool empty() const { return rules_.empty(); }

  // Pinned sets must be non-empty, exist in the topology and stay within a
  // single node (a task move carries one target node).
  void validate(const NumaTopology& topology) const;

 private:
  std::vector<PinRule> rules_;
};

struct TaskMove {
  int pid = 0;
  CoreSet target_cores;
  int target_node = 0;
};

struct PageMove {
  int pid = 0;
  NodeSet source_nodes;
  int target_node = 0;
};

struct PlacementPlan {
  std::vector<TaskMove> task_moves;
  std::vector<PageMove> page_moves;
  std::optional<ScheduleTrigger> reason;

  bool empty() const { return task_moves.empty() && page_moves.empty(); }
};

// Throws std::logic_error when a plan violates its internal invariants.
void validate_plan(const PlacementPlan& plan, const NumaTopology& topology);

struct OpStatus {
  bool ok = true;
  std::string error;
};

struct MigrateStatus {
  bool ok = true;
  long unmoved = 0;  // pages that could not be moved; 0 = complete
  std::string error;
};

// Affinity and page-migration surface. Implementations: the live OS wrapper
// and the simulator. Calls are observed in issue order.
class SystemBackend {
 public:
  virtual ~SystemBackend() = default;
  virtual OpStatus set_affinity(int pid, const CoreSet& cores) = 0;
  virtual MigrateStatus migrate_pages(int pid, const NodeSet& from,
                                      int to_node) = 0;
  virtual std::optional<CoreSet> current_affinity(int pid) = 0;
};

// Backend that can answer no query; used for dry runs over fixture trees.
class NullBackend : public SystemBackend {
 public:
  OpStatus set_affinity(int, const CoreSet&) override {
    return {false, "null backend"};
  }
  MigrateStatus migrate_pages(int, const NodeSet&, int) override {
    return {false, 0, "null backend"};
  }
  std::optional<CoreSet> current_affinity(int) override {
    return std::nullopt;
  }
};

// Cores ranked by (node pressure, core utilization, core id), first k.
std::vector<int> powerful_core_candidates(
    const NumaTopology& topology, const NodePressure& pressures,
    const std::map<int, double>& core_utilization, int k);

// First k pids of by_speedup with anything to gain: zero-speedup tasks and
// pids whose pin avoids every candidate core are skipped.
std::vector<int> retrieve_processes(const ScheduleReport& report, int k,
                                    const PinTable& pins,
                                    const std::vector<int>& candidates);

// Pairs retrieved[i] with candidates[i]; a move is emitted only when the
// current affinity differs from the single-core target.
std::vector<TaskMove> plan_powerful_moves(const std::vector<int>& retrieved,
                                          const std::vector<int>& candidates,
                                          const NumaTopology& topology,
                                          SystemBackend& backend,
                                          std::vector<std::string>* warnings);

struct ScatterResult {
  std::vector<TaskMove> task_moves;
  std::vector<PageMove> page_moves;
};

struct ScatterContext {
  std::set<int> excluded_pids;         // claimed by the powerful phase
  std::map<int, CoreSet> pins_by_pid;  // resolved pins
  CoreSet claimed_cores;               // cores already targeted by this plan
};

// Greedy pass over tasks above the contention threshold, heaviest first:
// each moves all its pages to the node minimizing its predicted contention,
// but only when that strictly improves on staying put. Predictions for
// later tasks see the earlier moves.
ScatterResult plan_scatter(const ScheduleReport& report,
                           const NumaTopology& topology,
                           double theta_contention,
                           const ScatterContext& ctx = {});

struct SchedulerConfig {
  double theta_contention = 0.5;
  std::optional<int> powerful_core_count;  // default: #tasks with importance>1
  PinTable pins;
};

PlacementPlan schedule_once(const ScheduleReport& report,
                            const NumaTopology& topology,
                            const SchedulerConfig& config,
                            SystemBackend& backend,
                            std::vector<std::string>* warnings = nullptr);

struct MoveResult {
  int pid = 0;
  std::string action;  // "set_affinity" or "migrate_pages"
  bool ok = false;
  bool skipped = false;  // dry run
  long pages_unmoved = 0;
  std::string error;
};

struct ApplyResult {
  std::vector<MoveResult> moves;
  bool all_ok() const;
};

// Affinity first, then the pid's page migration. Per-move failures are
// recorded and the rest of the plan still runs; a dry run touches nothing.
ApplyResult apply_plan(const PlacementPlan& plan, SystemBackend& backend,
                       bool dry_run = false);

// Live Linux backend: sched_setaffinity over every thread of the pid plus
// the migrate_pages syscall.
class LinuxBackend : public SystemBackend {
 public:
  explicit LinuxBackend(int max_node, std::string proc_root = "/proc")
      : max_node_(max_node), proc_root_(std::move(proc_root)) {}
  OpStatus set_affinity(int pid, const CoreSet& cores) override;
  MigrateStatus migrate_pages(int pid, const NodeSet& from,
                              int to_node) override;
  std::optional<CoreSet> current_affinity(int pid) override;

 private:
  int max_node_;
  std::string proc_root_;
};

}  // namespace numasched

#endif
