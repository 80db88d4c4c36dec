#include "numasched/reporter.hpp"

#include <algorithm>
#include <cmath>

namespace numasched {

double NodePressure::max_minus_min() const {
  if (per_node.empty()) return 0.0;
  double lo = per_node.begin()->second, hi = lo;
  for (const auto& [node, p] : per_node) {
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  return hi - lo;
}

int NodePressure::min_node() const {
  int best = -1;
  double best_p = 0.0;
  for (const auto& [node, p] : per_node) {
    if (best == -1 || p < best_p) {
      best = node;
      best_p = p;
    }
  }
  return best;
}

const char* trigger_reason_name(TriggerReason r) {
  switch (r) {
    case TriggerReason::Unbalanced: return "unbalanced";
    case TriggerReason::BehaviorChanged: return "behavior-changed";
    case TriggerReason::PowerfulCoreIdle: return "powerful-core-idle";
  }
  return "?";
}

double ImportanceTable::lookup(int pid, const std::string& comm) const {
  for (const auto& rule : rules_) {
    if (rule.pid && *rule.pid == pid) return rule.weight;
    if (!rule.pattern.empty() && comm.find(rule.pattern) != std::string::npos)
      return rule.weight;
  }
  return 1.0;
}

std::vector<NumaRecord> filter_numa_data(
    const SnapshotBatch& batch,
    const std::map<int, TaskSnapshot>& prev_by_pid) {
  std::vector<NumaRecord> out;
  for (const TaskSnapshot& snap : batch.snapshots) {
    long long ticks = snap.stat.utime_ticks + snap.stat.stime_ticks;
    long long delta = ticks;
    auto prev = prev_by_pid.find(snap.stat.pid);
    if (prev != prev_by_pid.end()) {
      long long prev_ticks =
          prev->second.stat.utime_ticks + prev->second.stat.stime_ticks;
      delta = ticks - prev_ticks;
    }
    if (snap.numa.total_pages == 0 && delta == 0) continue;

    NumaRecord rec;
    rec.pid = snap.stat.pid;
    rec.comm = snap.stat.comm;
    rec.last_cpu = snap.stat.last_cpu;
    rec.pages = snap.numa.per_node_pages;
    rec.total_pages = snap.numa.total_pages;
    rec.cpu_ticks = ticks;
    rec.taken_at = snap.taken_at;
    out.push_back(std::move(rec));
  }
  return out;
}

double compute_cpu_share(const TaskSnapshot& prev, const TaskSnapshot& curr,
                         long ticks_per_second, bool* regressed) {
  double elapsed = curr.taken_at - prev.taken_at;
  if (elapsed <= 0.0) return 0.0;
  long long delta = (curr.stat.utime_ticks + curr.stat.stime_ticks) -
                    (prev.stat.utime_ticks + prev.stat.stime_ticks);
  if (delta < 0) {
    if (regressed) *regressed = true;
    return 0.0;
  }
  double share = (static_cast<double>(delta) / ticks_per_second) / elapsed;
  return std::clamp(share, 0.0, 1.0);
}

NodePressure compute_node_pressure(const std::vector<NumaRecord>& records,
                                   const NumaTopology& topology) {
  NodePressure out;
  for (const NumaNode& node : topology.nodes) out.per_node[node.id] = 0.0;
  for (const NumaRecord& rec : records) {
    for (const auto& [node, pages] : rec.pages) {
      if (!topology.has_node(node))
        throw std::runtime_error(
            "pid " + std::to_string(rec.pid) + " has pages on node " +
            std::to_string(node) + " which the topology does not contain");
      if (pages > 0)
        out.per_node[node] +=
            static_cast<double>(pages) / topology.nodes[node].mem_total_pages;
    }
  }
  return out;
}

TaskMetrics compute_task_metrics(const NumaRecord& record,
                                 const NumaRecord* prev_record,
                                 const NodePressure& pressures,
                                 const ImportanceTable& importance,
                                 long ticks_per_second) {
  TaskMetrics m;
  m.pid = record.pid;
  m.comm = record.comm;
  m.total_pages = record.total_pages;

  if (prev_record) {
    double elapsed = record.taken_at - prev_record->taken_at;
    long long delta = record.cpu_ticks - prev_record->cpu_ticks;
    if (elapsed > 0.0 && delta > 0)
      m.cpu_share = std::clamp(
          (static_cast<double>(delta) / ticks_per_second) / elapsed, 0.0, 1.0);
  }

  m.importance = importance.lookup(record.pid, record.comm);
  m.speedup_factor = m.importance * m.cpu_share;

  if (record.total_pages > 0) {
    for (const auto& [node, pages] : record.pages) {
      if (pages <= 0) continue;
      double frac = static_cast<double>(pages) / record.total_pages;
      m.locality[node] = frac;
      auto it = pressures.per_node.find(node);
      double p = it == pressures.per_node.end() ? 0.0 : it->second;
      m.contention_factor += frac * p;
      if (!m.home_node || frac > m.locality[*m.home_node]) m.home_node = node;
    }
  }
  return m;
}

std::map<int, double> compute_core_utilization(
    const std::vector<NumaRecord>& records,
    const std::vector<TaskMetrics>& metrics) {
  std::map<int, double> out;
  for (std::size_t i = 0; i < records.size() && i < metrics.size(); ++i)
    out[records[i].last_cpu] += metrics[i].cpu_share;
  return out;
}

namespace {

std::map<int, std::optional<int>> homes_by_pid(
    const std::vector<TaskMetrics>& metrics) {
  std::map<int, std::optional<int>> out;
  for (const auto& m : metrics) out[m.pid] = m.home_node;
  return out;
}

}  // namespace

std::optional<ScheduleTrigger> detect_trigger(
    const ReporterState& curr, const ReporterState* prev,
    const NumaTopology& topology,
    const std::map<int, double>& core_utilization,
    const ReporterConfig& config) {
  // (a) unbalanced memory load
  if (curr.pressures.max_minus_min() > config.theta_imbalance)
    return ScheduleTrigger{TriggerReason::Unbalanced};

  // (b) behavior change: home-node flip or pid churn
  {
    auto curr_homes = homes_by_pid(curr.metrics);
    std::map<int, std::optional<int>> prev_homes;
    if (prev) prev_homes = homes_by_pid(prev->metrics);
    if (curr_homes != prev_homes)
      return ScheduleTrigger{TriggerReason::BehaviorChanged};
  }

  // (c) an idle core on the calmest node while an important task lives away
  int calm = curr.pressures.min_node();
  if (calm >= 0 && calm < topology.node_count()) {
    bool idle_core = false;
    for (int core : topology.nodes[calm].core_ids) {
      auto it = core_utilization.find(core);
      double util = it == core_utilization.end() ? 0.0 : it->second;
      if (util < config.theta_idle) {
        idle_core = true;
        break;
      }
    }
    if (idle_core) {
      for (const auto& m : curr.metrics) {
        if (m.importance > 1.0 && (!m.home_node || *m.home_node != calm))
          return ScheduleTrigger{TriggerReason::PowerfulCoreIdle};
      }
    }
  }
  return std::nullopt;
}

ScheduleReport build_report(std::vector<TaskMetrics> metrics,
                            NodePressure pressures,
                            std::map<int, double> core_utilization,
                            ScheduleTrigger trigger, double taken_at) {
  ScheduleReport report;
  report.taken_at = taken_at;
  report.metrics = std::move(metrics);
  report.pressures = std::move(pressures);
  report.core_utilization = std::move(core_utilization);
  report.trigger = trigger;

  auto sorted_pids = [&](auto key) {
    std::vector<const TaskMetrics*> ptrs;
    ptrs.reserve(report.metrics.size());
    for (const auto& m : report.metrics) ptrs.push_back(&m);
    std::sort(ptrs.begin(), ptrs.end(),
              [&](const TaskMetrics* a, const TaskMetrics* b) {
                double ka = key(*a), kb = key(*b);
                if (ka != kb) return ka > kb;
                return a->pid < b->pid;
              });
    std::vector<int> pids;
    pids.reserve(ptrs.size());
    for (const auto* p : ptrs) pids.push_back(p->pid);
    return pids;
  };
  report.by_speedup =
      sorted_pids([](const TaskMetrics& m) { return m.speedup_factor; });
  report.by_contention =
      sorted_pids([](const TaskMetrics& m) { return m.contention_factor; });
  return report;
}

std::optional<ScheduleReport> Reporter::process_batch(
    const SnapshotBatch& batch) {
  std::vector<NumaRecord> records = filter_numa_data(batch, prev_snapshots_);
  NodePressure pressures = compute_node_pressure(records, topology_);

  std::vector<TaskMetrics> metrics;
  metrics.reserve(records.size());
  for (const NumaRecord& rec : records) {
    auto prev = prev_records_.find(rec.pid);
    if (prev != prev_records_.end() && rec.cpu_ticks < prev->second.cpu_ticks)
      ++counter_regressions_;  // pid reuse
    metrics.push_back(compute_task_metrics(
        rec, prev == prev_records_.end() ? nullptr : &prev->second, pressures,
        config_.importance, config_.ticks_per_second));
  }
  std::map<int, double> core_util = compute_core_utilization(records, metrics);

  ReporterState state{metrics, pressures};
  auto trigger = detect_trigger(state, prev_state_ ? &*prev_state_ : nullptr,
                                topology_, core_util, config_);

  prev_snapshots_.clear();
  for (const TaskSnapshot& snap : batch.snapshots)
    prev_snapshots_[snap.stat.pid] = snap;
  prev_records_.clear();
  for (const NumaRecord& rec : records) prev_records_[rec.pid] = rec;
  prev_state_ = std::move(state);

  if (!trigger) return std::nullopt;
  return build_report(std::move(metrics), std::move(pressures),
                      std::move(core_util), *trigger, batch.taken_at);
}

}  // namespace numasched
