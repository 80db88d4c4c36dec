#include "numasched/scheduler.hpp"

#include <algorithm>
#include <cmath>

namespace numasched {

std::optional<CoreSet> PinTable::lookup(int pid, const std::string& comm) const {
  for (const auto& rule : rules_) {
    if (rule.pid && *rule.pid == pid) return rule.cores;
    if (!rule.pattern.empty() && comm.find(rule.pattern) != std::string::npos)
      return rule.cores;
  }
  return std::nullopt;
}

void PinTable::validate(const NumaTopology& topology) const {
  for (const auto& rule : rules_) {
    std::string who = rule.pid ? "pid " + std::to_string(*rule.pid)
                               : "pattern '" + rule.pattern + "'";
    if (rule.cores.empty())
      throw ConfigError("pin for " + who + " has an empty core set");
    int node = -1;
    for (int core : rule.cores) {
      int n = topology.node_of_core(core);
      if (n < 0)
        throw ConfigError("pin for " + who + " names unknown core " +
                          std::to_string(core));
      if (node == -1) node = n;
      if (n != node)
        throw ConfigError("pin for " + who +
                          " spans more than one NUMA node");
    }
  }
}

void validate_plan(const PlacementPlan& plan, const NumaTopology& topology) {
  std::set<int> seen;
  std::map<int, int> task_targets;
  for (const auto& mv : plan.task_moves) {
    if (!seen.insert(mv.pid).second)
      throw std::logic_error("plan: pid " + std::to_string(mv.pid) +
                             " moved twice");
    if (mv.target_cores.empty())
      throw std::logic_error("plan: empty target core set");
    for (int core : mv.target_cores)
      if (topology.node_of_core(core) != mv.target_node)
        throw std::logic_error("plan: core " + std::to_string(core) +
                               " not on node " +
                               std::to_string(mv.target_node));
    task_targets[mv.pid] = mv.target_node;
  }
  std::set<int> page_pids;
  for (const auto& mv : plan.page_moves) {
    if (!page_pids.insert(mv.pid).second)
      throw std::logic_error("plan: pid " + std::to_string(mv.pid) +
                             " has two page moves");
    if (!topology.has_node(mv.target_node))
      throw std::logic_error("plan: page move to unknown node");
    auto it = task_targets.find(mv.pid);
    if (it != task_targets.end() && it->second != mv.target_node)
      throw std::logic_error(
          "plan: page and task moves disagree for pid " +
          std::to_string(mv.pid));
  }
}

std::vector<int> powerful_core_candidates(
    const NumaTopology& topology, const NodePressure& pressures,
    const std::map<int, double>& core_utilization, int k) {
  if (k <= 0) return {};
  struct Ranked {
    double pressure;
    double util;
    int core;
  };
  std::vector<Ranked> all;
  for (const NumaNode& node : topology.nodes) {
    auto pit = pressures.per_node.find(node.id);
    double p = pit == pressures.per_node.end() ? 0.0 : pit->second;
    for (int core : node.core_ids) {
      auto uit = core_utilization.find(core);
      double u = uit == core_utilization.end() ? 0.0 : uit->second;
      all.push_back({p, u, core});
    }
  }
  std::sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) {
    if (a.pressure != b.pressure) return a.pressure < b.pressure;
    if (a.util != b.util) return a.util < b.util;
    return a.core < b.core;
  });
  std::vector<int> out;
  for (const auto& r : all) {
    if (static_cast<int>(out.size()) >= k) break;
    out.push_back(r.core);
  }
  return out;
}

std::vector<int> retrieve_processes(const ScheduleReport& report, int k,
                                    const PinTable& pins,
                                    const std::vector<int>& candidates) {
  std::vector<int> out;
  if (k <= 0) return out;
  std::map<int, const TaskMetrics*> by_pid;
  for (const auto& m : report.metrics) by_pid[m.pid] = &m;

  for (int pid : report.by_speedup) {
    if (static_cast<int>(out.size()) >= k) break;
    const TaskMetrics* m = by_pid.at(pid);
    if (m->speedup_factor <= 0.0) continue;  // nothing to gain from speed
    auto pin = pins.lookup(pid, m->comm);
    if (pin) {
      bool reachable = std::any_of(candidates.begin(), candidates.end(),
                                   [&](int c) { return pin->count(c) > 0; });
      if (!reachable) continue;
    }
    out.push_back(pid);
  }
  return out;
}

std::vector<TaskMove> plan_powerful_moves(const std::vector<int>& retrieved,
                                          const std::vector<int>& candidates,
                                          const NumaTopology& topology,
                                          SystemBackend& backend,
                                          std::vector<std::string>* warnings) {
  std::vector<TaskMove> out;
  std::size_t n = std::min(retrieved.size(), candidates.size());
  for (std::size_t i = 0; i < n; ++i) {
    int pid = retrieved[i];
    CoreSet target{candidates[i]};
    auto current = backend.current_affinity(pid);
    if (!current) {
      if (warnings)
        warnings->push_back("cannot read affinity of pid " +
                            std::to_string(pid) + ", skipped");
      continue;
    }
    if (*current == target) continue;  // already in place
    out.push_back({pid, target, topology.node_of_core(candidates[i])});
  }
  return out;
}

namespace {

// lowest-utilization core on the node, ties by id, skipping claimed cores
// and honoring a pin when present
std::optional<int> pick_core(const NumaTopology& topology, int node,
                             const std::map<int, double>& core_util,
                             const CoreSet& claimed,
                             const CoreSet* pin) {
  std::optional<int> best;
  double best_util = 0.0;
  for (int core : topology.nodes[node].core_ids) {
    if (claimed.count(core)) continue;
    if (pin && !pin->count(core)) continue;
    auto it = core_util.find(core);
    double u = it == core_util.end() ? 0.0 : it->second;
    if (!best || u < best_util) {
      best = core;
      best_util = u;
    }
  }
  if (!best && pin) {
    // every pinned core already claimed; fall back to the pin itself
    for (int core : topology.nodes[node].core_ids)
      if (pin->count(core)) return core;
  }
  if (!best) {
    // all cores claimed: reuse the least utilized one
    for (int core : topology.nodes[node].core_ids) {
      auto it = core_util.find(core);
      double u = it == core_util.end() ? 0.0 : it->second;
      if (!best || u < best_util) {
        best = core;
        best_util = u;
      }
    }
  }
  return best;
}

}  // namespace

ScatterResult plan_scatter(const ScheduleReport& report,
                           const NumaTopology& topology,
                           double theta_contention,
                           const ScatterContext& ctx) {
  ScatterResult out;
  if (topology.node_count() == 0) return out;

  // Working model in whole pages so predictions reproduce exactly what a
  // re-monitor of the applied plan would compute.
  std::map<int, PageMap> task_pages;    // pid -> node -> pages
  std::map<int, long> task_total;
  std::map<int, long> node_load;
  for (const NumaNode& node : topology.nodes) node_load[node.id] = 0;
  for (const auto& m : report.metrics) {
    for (const auto& [node, frac] : m.locality) {
      long pages = std::llround(frac * m.total_pages);
      if (pages <= 0) continue;
      task_pages[m.pid][node] = pages;
      task_total[m.pid] += pages;
      node_load[node] += pages;
    }
  }

  auto capacity = [&](int node) {
    return static_cast<double>(topology.nodes[node].mem_total_pages);
  };
  auto contention_of = [&](int pid) {
    double c = 0.0;
    long total = task_total[pid];
    if (total <= 0) return 0.0;
    for (const auto& [node, pages] : task_pages[pid])
      c += (static_cast<double>(pages) / total) *
           (node_load[node] / capacity(node));
    return c;
  };

  // The greedy pass repeats until no task above the threshold can improve;
  // a single pass can strand improvable tasks once later moves reshuffle
  // the load under them.
  std::map<int, int> final_node;
  const double kMinGain = 1e-9;
  for (int pass = 0; pass < 200; ++pass) {
    bool moved = false;
    for (int pid : report.by_contention) {
      if (ctx.excluded_pids.count(pid)) continue;
      long total = task_total[pid];
      if (total <= 0) continue;
      double current = contention_of(pid);
      if (current <= theta_contention) continue;

      const CoreSet* pin = nullptr;
      auto pin_it = ctx.pins_by_pid.find(pid);
      if (pin_it != ctx.pins_by_pid.end()) pin = &pin_it->second;

      std::optional<int> best_node;
      double best_predicted = 0.0;
      for (const NumaNode& node : topology.nodes) {
        if (pin && topology.node_of_core(*pin->begin()) != node.id)
          continue;  // pinned tasks may only consolidate onto their pin node
        long own = 0;
        auto it = task_pages[pid].find(node.id);
        if (it != task_pages[pid].end()) own = it->second;
        double predicted =
            (node_load[node.id] + total - own) / capacity(node.id);
        if (!best_node || predicted < best_predicted) {
          best_node = node.id;
          best_predicted = predicted;
        }
      }
      if (!best_node || best_predicted >= current - kMinGain) continue;

      int target = *best_node;
      for (const auto& [node, pages] : task_pages[pid])
        if (node != target) node_load[node] -= pages;
      long moved_pages = total;
      auto own_it = task_pages[pid].find(target);
      if (own_it != task_pages[pid].end()) moved_pages -= own_it->second;
      node_load[target] += moved_pages;
      task_pages[pid] = {{target, total}};
      final_node[pid] = target;
      moved = true;
    }
    if (!moved) break;
  }

  // One coalesced move per pid, in list order; sources are the nodes the
  // report saw pages on.
  CoreSet claimed = ctx.claimed_cores;
  std::map<int, const TaskMetrics*> by_pid;
  for (const auto& m : report.metrics) by_pid[m.pid] = &m;
  for (int pid : report.by_contention) {
    auto dest = final_node.find(pid);
    if (dest == final_node.end()) continue;
    int target = dest->second;
    const TaskMetrics& m = *by_pid.at(pid);

    NodeSet sources;
    for (const auto& [node, frac] : m.locality)
      if (node != target && frac > 0.0) sources.insert(node);
    if (sources.empty()) continue;  // settled back where it started

    const CoreSet* pin = nullptr;
    auto pin_it = ctx.pins_by_pid.find(pid);
    if (pin_it != ctx.pins_by_pid.end()) pin = &pin_it->second;
    auto core =
        pick_core(topology, target, report.core_utilization, claimed, pin);
    if (!core) continue;
    claimed.insert(*core);

    out.task_moves.push_back({pid, CoreSet{*core}, target});
    out.page_moves.push_back({pid, sources, target});
  }
  return out;
}

PlacementPlan schedule_once(const ScheduleReport& report,
                            const NumaTopology& topology,
                            const SchedulerConfig& config,
                            SystemBackend& backend,
                            std::vector<std::string>* warnings) {
  PlacementPlan plan;
  plan.reason = report.trigger;

  // resolved pins for every monitored task
  std::map<int, CoreSet> pins_by_pid;
  for (const auto& m : report.metrics) {
    auto pin = config.pins.lookup(m.pid, m.comm);
    if (pin) pins_by_pid[m.pid] = *pin;
  }

  int k;
  if (config.powerful_core_count) {
    k = *config.powerful_core_count;
  } else {
    k = static_cast<int>(
        std::count_if(report.metrics.begin(), report.metrics.end(),
                      [](const TaskMetrics& m) { return m.importance > 1.0; }));
  }
  k = std::clamp(k, 0, topology.total_cores());

  std::vector<int> candidates = powerful_core_candidates(
      topology, report.pressures, report.core_utilization, k);
  std::vector<int> retrieved =
      retrieve_processes(report, static_cast<int>(candidates.size()),
                         config.pins, candidates);
  std::vector<TaskMove> powerful =
      plan_powerful_moves(retrieved, candidates, topology, backend, warnings);

  // pins override: drop any move that would leave the pinned set
  CoreSet claimed_cores;
  for (const auto& mv : powerful) {
    auto pin = pins_by_pid.find(mv.pid);
    if (pin != pins_by_pid.end()) {
      bool inside = std::all_of(mv.target_cores.begin(), mv.target_cores.end(),
                                [&](int c) { return pin->second.count(c); });
      if (!inside) continue;
    }
    claimed_cores.insert(mv.target_cores.begin(), mv.target_cores.end());
    plan.task_moves.push_back(mv);
  }

  ScatterContext ctx;
  ctx.excluded_pids.insert(retrieved.begin(), retrieved.end());
  ctx.pins_by_pid = pins_by_pid;
  ctx.claimed_cores = claimed_cores;
  ScatterResult scatter =
      plan_scatter(report, topology, config.theta_contention, ctx);

  std::set<int> moved;
  for (const auto& mv : plan.task_moves) moved.insert(mv.pid);
  for (const auto& mv : scatter.task_moves) {
    if (moved.count(mv.pid)) continue;
    moved.insert(mv.pid);
    plan.task_moves.push_back(mv);
  }
  for (const auto& mv : scatter.page_moves) plan.page_moves.push_back(mv);

  // enforce pins not yet in effect (any binding inside the pin counts)
  for (const auto& [pid, pin] : pins_by_pid) {
    if (moved.count(pid)) continue;
    auto current = backend.current_affinity(pid);
    if (current && !current->empty() &&
        std::all_of(current->begin(), current->end(),
                    [&](int c) { return pin.count(c); }))
      continue;
    int node = topology.node_of_core(*pin.begin());
    plan.task_moves.push_back({pid, pin, node});
    moved.insert(pid);
  }
  return plan;
}

bool ApplyResult::all_ok() const {
  return std::all_of(moves.begin(), moves.end(),
                     [](const MoveResult& r) { return r.ok || r.skipped; });
}

ApplyResult apply_plan(const PlacementPlan& plan, SystemBackend& backend,
                       bool dry_run) {
  ApplyResult out;
  std::map<int, const PageMove*> pages_by_pid;
  for (const auto& mv : plan.page_moves) pages_by_pid[mv.pid] = &mv;
  std::set<int> pages_done;

  auto run_page_move = [&](const PageMove& mv) {
    MoveResult r;
    r.pid = mv.pid;
    r.action = "migrate_pages";
    if (dry_run) {
      r.ok = true;
      r.skipped = true;
    } else {
      MigrateStatus st = backend.migrate_pages(mv.pid, mv.source_nodes,
                                               mv.target_node);
      r.ok = st.ok;
      r.pages_unmoved = st.unmoved;
      r.error = st.error;
    }
    out.moves.push_back(std::move(r));
  };

  for (const auto& mv : plan.task_moves) {
    MoveResult r;
    r.pid = mv.pid;
    r.action = "set_affinity";
    if (dry_run) {
      r.ok = true;
      r.skipped = true;
    } else {
      OpStatus st = backend.set_affinity(mv.pid, mv.target_cores);
      r.ok = st.ok;
      r.error = st.error;
    }
    out.moves.push_back(std::move(r));

    auto pages = pages_by_pid.find(mv.pid);
    if (pages != pages_by_pid.end()) {
      run_page_move(*pages->second);
      pages_done.insert(mv.pid);
    }
  }
  for (const auto& mv : plan.page_moves)
    if (!pages_done.count(mv.pid)) run_page_move(mv);
  return out;
}

}  // namespace numasched
