#ifndef NUMASCHED_PROCMON_HPP
#define NUMASCHED_PROCMON_HPP

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "numasched/queue.hpp"
#include "numasched/types.hpp"

namespace numasched {

struct TaskStat {
  int pid = 0;
  std::string comm;
  char state = '?';
  long long utime_ticks = 0;
  long long stime_ticks = 0;
  int last_cpu = 0;
};

struct NumaMapsSummary {
  PageMap per_node_pages;
  long total_pages = 0;
};

struct TaskSnapshot {
  TaskStat stat;
  NumaMapsSummary numa;
  double taken_at = 0.0;  // seconds on a monotonic clock
};

struct SnapshotBatch {
  double taken_at = 0.0;
  std::vector<TaskSnapshot> snapshots;  // ordered by pid, unique pids
};

// One /proc/<pid>/stat line. comm is everything between the first '(' and
// the last ')'; utime/stime/last_cpu are fields 14, 15 and 39 counting pid
// as field 1.
TaskStat parse_proc_stat(const std::string& line);

// Full /proc/<pid>/numa_maps contents; sums N<k>=<pages> tokens per node.
NumaMapsSummary parse_numa_maps(const std::string& text);

// Which processes to monitor. Explicit pids win over patterns; with neither,
// all user processes are candidates. Kernel threads, pid 0 and self are
// always excluded.
struct MonitorSelection {
  std::vector<int> pids;
  std::vector<std::string> patterns;  // substring match against comm
  int self_pid = 0;                   // 0 = use getpid()
};

std::set<int> list_candidate_pids(const std::string& proc_root,
                                  const MonitorSelection& sel);

// One snapshot per pid that still exists; pids whose files vanish mid-read
// are skipped. All snapshots share taken_at = now.
SnapshotBatch collect_snapshot(const std::set<int>& pids,
                               const std::string& proc_root, double now);

// Time source for the monitor loop, replaceable in tests and the simulator.
class MonitorClock {
 public:
  virtual ~MonitorClock() = default;
  virtual double now() = 0;
  // Sleeps one interval; returns false when the loop should exit instead
  // (stop requested, or a simulated clock ran out of ticks).
  virtual bool sleep_interval(std::chrono::milliseconds interval,
                              const StopSignal& stop) = 0;
};

class SystemClock : public MonitorClock {
 public:
  double now() override;
  bool sleep_interval(std::chrono::milliseconds interval,
                      const StopSignal& stop) override;
};

// Deterministic clock: each sleep consumes one tick permit and advances
// time by the interval; with no permits left the loop exits.
class ManualClock : public MonitorClock {
 public:
  explicit ManualClock(int tick_permits, double start = 0.0)
      : permits_(tick_permits), now_(start) {}
  double now() override { return now_; }
  bool sleep_interval(std::chrono::milliseconds interval,
                      const StopSignal& stop) override {
    if (stop.stop_requested() || permits_ <= 0) return false;
    --permits_;
    now_ += std::chrono::duration<double>(interval).count();
    return true;
  }

 private:
  int permits_;
  double now_;
};

// Algorithm: sleep one interval, list candidates, collect a batch, push it;
// repeat until stopped or the sink closes.
void monitor_loop(std::chrono::milliseconds interval,
                  const std::string& proc_root, const MonitorSelection& sel,
                  MonitorClock& clock, BoundedQueue<SnapshotBatch>& sink,
                  const StopSignal& stop);

}  // namespace numasched

#endif
