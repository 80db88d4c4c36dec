#include "numasched/daemon.hpp"

#include <unistd.h>

#include <atomic>
#include <sstream>
#include <thread>

#include "numasched/procmon.hpp"
#include "numasched/queue.hpp"
#include "numasched/reporter.hpp"
#include "numasched/topology.hpp"

namespace numasched {

namespace {

class TickLimitedClock : public MonitorClock {
 public:
  explicit TickLimitedClock(int max_ticks) : remaining_(max_ticks) {}
  double now() override { return inner_.now(); }
  bool sleep_interval(std::chrono::milliseconds interval,
                      const StopSignal& stop) override {
    if (remaining_ <= 0) return false;
    --remaining_;
    return inner_.sleep_interval(interval, stop);
  }

 private:
  SystemClock inner_;
  int remaining_;
};

std::string moves_summary(const PlacementPlan& plan) {
  std::ostringstream out;
  for (const auto& mv : plan.task_moves) {
    if (out.tellp() > 0) out << ' ';
    out << mv.pid << "->" << format_cpulist(mv.target_cores) << "@n"
        << mv.target_node;
  }
  for (const auto& mv : plan.page_moves) {
    if (out.tellp() > 0) out << ' ';
    out << mv.pid << ":pages->n" << mv.target_node;
  }
  return out.str();
}

}  // namespace

int run_daemon(const DaemonConfig& config, Logger& log,
               const DaemonOptions& options) {
  NumaTopology topology;
  try {
    topology = discover_topology(config.sysfs_root);
  } catch (const std::exception& e) {
    log.event("fatal", {{"message", std::string(e.what())}});
    return 2;
  }
  if (topology.node_count() < 2) {
    log.event("fatal", {{"message", std::string("no NUMA topology: single "
                                                "memory node, nothing to "
                                                "schedule")}});
    return 2;
  }

  PinTable pins{config.pins};
  try {
    pins.validate(topology);
  } catch (const std::exception& e) {
    log.event("fatal", {{"message", std::string(e.what())}});
    return 2;
  }

  bool dry_run = config.dry_run;
  if (!dry_run && geteuid() != 0) {
    log.warn("not running as root; affinity and page migration would fail, "
             "forcing dry run");
    dry_run = true;
  }

  NullBackend null_backend;
  LinuxBackend live_backend(topology.node_count() - 1, config.proc_root);
  SystemBackend* backend = options.backend;
  if (!backend) backend = dry_run ? static_cast<SystemBackend*>(&null_backend)
                                  : &live_backend;

  log.event("daemon-start",
            {{"nodes", static_cast<long long>(topology.node_count())},
             {"cores", static_cast<long long>(topology.total_cores())},
             {"interval_ms", static_cast<long long>(config.interval_ms)},
             {"dry_run", dry_run}});

  ReporterConfig rcfg;
  rcfg.theta_imbalance = config.theta_imbalance;
  rcfg.theta_idle = config.theta_idle;
  long tps = sysconf(_SC_CLK_TCK);
  rcfg.ticks_per_second = tps > 0 ? tps : 100;
  rcfg.importance = ImportanceTable(config.importance);

  SchedulerConfig scfg;
  scfg.theta_contention = config.theta_contention;
  scfg.pins = pins;

  BoundedQueue<SnapshotBatch> snapshot_queue(4);
  BoundedQueue<ScheduleReport> report_queue(4);
  StopSignal stop;
  std::atomic<bool> pipeline_done{false};

  std::thread monitor([&] {
    TickLimitedClock limited(options.max_ticks);
    SystemClock unlimited;
    MonitorClock& clock =
        options.max_ticks > 0 ? static_cast<MonitorClock&>(limited)
                              : unlimited;
    try {
      monitor_loop(std::chrono::milliseconds(config.interval_ms),
                   config.proc_root, config.monitor, clock, snapshot_queue,
                   stop);
    } catch (const std::exception& e) {
      log.event("monitor-error", {{"message", std::string(e.what())}});
    }
    snapshot_queue.close();
  });

  std::thread reporter_thread([&] {
    Reporter reporter(topology, rcfg);
    while (auto batch = snapshot_queue.pop()) {
      std::optional<ScheduleReport> report;
      try {
        report = reporter.process_batch(*batch);
      } catch (const std::exception& e) {
        log.event("reporter-error", {{"message", std::string(e.what())}});
        continue;
      }
      if (!report) continue;
      log.event("report",
                {{"trigger", std::string(trigger_reason_name(
                      report->trigger.reason))},
                 {"tasks", static_cast<long long>(report->metrics.size())},
                 {"pressure_spread", report->pressures.max_minus_min()}});
      if (!report_queue.push(std::move(*report))) break;
    }
    report_queue.close();
  });

  std::thread scheduler_thread([&] {
    while (auto report = report_queue.pop()) {
      std::vector<std::string> warnings;
      PlacementPlan plan =
          schedule_once(*report, topology, scfg, *backend, &warnings);
      for (const auto& w : warnings) log.warn(w);
      log.event("plan",
                {{"trigger", std::string(trigger_reason_name(
                      report->trigger.reason))},
                 {"task_moves", static_cast<long long>(plan.task_moves.size())},
                 {"page_moves", static_cast<long long>(plan.page_moves.size())},
                 {"moves", moves_summary(plan)},
                 {"dry_run", dry_run}});
      ApplyResult applied = apply_plan(plan, *backend, dry_run);
      for (const MoveResult& r : applied.moves) {
        log.event("apply", {{"pid", static_cast<long long>(r.pid)},
                            {"action", r.action},
                            {"ok", r.ok},
                            {"skipped", r.skipped},
                            {"error", r.error}});
      }
    }
    pipeline_done = true;
  });

  // The pipeline drains itself in tick-limited mode; otherwise wait for an
  // interrupt.
  while (!pipeline_done) {
    if (options.interrupted && options.interrupted()) {
      log.event("shutdown", {{"reason", std::string("signal")}});
      stop.request_stop();
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  stop.request_stop();
  monitor.join();
  reporter_thread.join();
  scheduler_thread.join();
  log.event("daemon-exit", {{"code", 0LL}});
  return 0;
}

}  // namespace numasched
