#ifndef NUMASCHED_REPORTER_HPP
#define NUMASCHED_REPORTER_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "numasched/procmon.hpp"
#include "numasched/topology.hpp"
#include "numasched/types.hpp"

namespace numasched {

// Fraction of each node's memory held by monitored tasks.
struct NodePressure {
  std::map<int, double> per_node;  // one entry per topology node

  double max_minus_min() const;
  // lowest-pressure node, ties broken by lowest id; -1 when empty
  int min_node() const;
};

struct TaskMetrics {
  int pid = 0;
  std::string comm;        // kept for importance and pin pattern matching
  long total_pages = 0;    // kept so the scheduler can turn locality back into pages
  double cpu_share = 0.0;  // [0,1] of one CPU over the last window
  double importance = 1.0;
  double speedup_factor = 0.0;          // importance * cpu_share
  std::map<int, double> locality;       // node -> fraction of pages, nonzero entries
  double contention_factor = 0.0;       // sum_n locality(n) * pressure(n)
  std::optional<int> home_node;         // argmax locality, absent when no pages
};

enum class TriggerReason { Unbalanced, BehaviorChanged, PowerfulCoreIdle };

struct ScheduleTrigger {
  TriggerReason reason = TriggerReason::Unbalanced;
};

const char* trigger_reason_name(TriggerReason r);

struct ScheduleReport {
  double taken_at = 0.0;
  std::vector<TaskMetrics> metrics;
  std::vector<int> by_speedup;     // pids, speedup_factor descending, ties by pid
  std::vector<int> by_contention;  // pids, contention_factor descending, ties by pid
  NodePressure pressures;
  std::map<int, double> core_utilization;  // core -> summed cpu_share
  ScheduleTrigger trigger;
};

// One task's NUMA-relevant slice of a snapshot, after filtering.
struct NumaRecord {
  int pid = 0;
  std::string comm;
  int last_cpu = 0;
  PageMap pages;
  long total_pages = 0;
  long long cpu_ticks = 0;  // utime + stime
  double taken_at = 0.0;
};

// weight per pid or comm-substring pattern; first matching rule wins
struct ImportanceRule {
  std::optional<int> pid;
  std::string pattern;
  double weight = 1.0;
};

class ImportanceTable {
 public:
  ImportanceTable() = default;
  explicit ImportanceTable(std::vector<ImportanceRule> rules)
      : rules_(std::move(rules)) {}
  double lookup(int pid, const std::string& comm) const;
  const std::vector<ImportanceRule>& rules() const { return rules_; }

 private:
  std::vector<ImportanceRule> rules_;
};

struct ReporterConfig {
  double theta_imbalance = 0.20;
  double theta_idle = 0.10;
  long ticks_per_second = 100;
  ImportanceTable importance;
};

// Drops tasks with zero resident pages and zero CPU delta relative to the
// previous snapshot of the same pid (first sight counts the raw counters).
std::vector<NumaRecord> filter_numa_data(
    const SnapshotBatch& batch,
    const std::map<int, TaskSnapshot>& prev_by_pid);

// ((du+ds)/tps) / elapsed, clamped to [0,1]. A counter regression (pid
// reuse) yields 0 and sets *regressed if given.
double compute_cpu_share(const TaskSnapshot& prev, const TaskSnapshot& curr,
                         long ticks_per_second, bool* regressed = nullptr);

// Throws std::runtime_error when a record names a node the topology lacks.
NodePressure compute_node_pressure(const std::vector<NumaRecord>& records,
                                   const NumaTopology& topology);

TaskMetrics compute_task_metrics(const NumaRecord& record,
                                 const NumaRecord* prev_record,
                                 const NodePressure& pressures,
                                 const ImportanceTable& importance,
                                 long ticks_per_second);

std::map<int, double> compute_core_utilization(
    const std::vector<NumaRecord>& records,
    const std::vector<TaskMetrics>& metrics);

struct ReporterState {
  std::vector<TaskMetrics> metrics;
  NodePressure pressures;
};

// Checks, in this order: (a) pressure imbalance, (b) home-node or pid-set
// change against the previous state, (c) idle core on the least-pressured
// node while an importance>1 task lives elsewhere.
std::optional<ScheduleTrigger> detect_trigger(
    const ReporterState& curr, const ReporterState* prev,
    const NumaTopology& topology,
    const std::map<int, double>& core_utilization,
    const ReporterConfig& config);

ScheduleReport build_report(std::vector<TaskMetrics> metrics,
                            NodePressure pressures,
                            std::map<int, double> core_utilization,
                            ScheduleTrigger trigger, double taken_at);

// Stateful pipeline stage: feed batches in, get reports out on trigger.
class Reporter {
 public:
  Reporter(NumaTopology topology, ReporterConfig config)
      : topology_(std::move(topology)), config_(std::move(config)) {}

  std::optional<ScheduleReport> process_batch(const SnapshotBatch& batch);

  const NumaTopology& topology() const { return topology_; }
  std::size_t counter_regressions() const { return counter_regressions_; }

 private:
  NumaTopology topology_;
  ReporterConfig config_;
  std::map<int, TaskSnapshot> prev_snapshots_;
  std::map<int, NumaRecord> prev_records_;
  std::optional<ReporterState> prev_state_;
  std::size_t counter_regressions_ = 0;
};

}  // namespace numasched

#endif
