#include "numasched/hostsim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "numasched/reporter.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace numasched {

const std::map<std::string, WorkloadProfile>& parsec_profiles() {
  static const std::map<std::string, WorkloadProfile> table = {
      {"blackscholes", {"blackscholes", Sharing::Low, Exchange::Low, Granularity::Coarse}},
      {"bodytrack", {"bodytrack", Sharing::High, Exchange::Medium, Granularity::Medium}},
      {"canneal", {"canneal", Sharing::High, Exchange::High, Granularity::Fine}},
      {"dedup", {"dedup", Sharing::High, Exchange::High, Granularity::Medium}},
      {"facesim", {"facesim", Sharing::Low, Exchange::Medium, Granularity::Coarse}},
      {"ferret", {"ferret", Sharing::High, Exchange::High, Granularity::Medium}},
      {"fluidanimate", {"fluidanimate", Sharing::Low, Exchange::Medium, Granularity::Fine}},
      {"freqmine", {"freqmine", Sharing::High, Exchange::Medium, Granularity::Medium}},
      {"streamcluster", {"streamcluster", Sharing::Low, Exchange::Medium, Granularity::Medium}},
      {"swaptions", {"swaptions", Sharing::Low, Exchange::Low, Granularity::Coarse}},
      {"vips", {"vips", Sharing::Low, Exchange::Medium, Granularity::Coarse}},
      {"x264", {"x264", Sharing::High, Exchange::High, Granularity::Coarse}},
  };
  return table;
}

long SimTask::total_pages() const {
  long total = 0;
  for (const auto& [node, pages] : pages) total += pages;
  return total;
}

long long SimTask::utime_ticks() const {
  // cumulative runtime expressed as zero-contention-equivalent seconds
  return static_cast<long long>(std::floor(100.0 * work_done / base_rate));
}

SimTask* SimHost::find_task(int pid) {
  for (auto& t : tasks)
    if (t.pid == pid) return &t;
  return nullptr;
}

const SimTask* SimHost::find_task(int pid) const {
  for (const auto& t : tasks)
    if (t.pid == pid) return &t;
  return nullptr;
}

std::map<int, long> SimHost::node_page_totals() const {
  std::map<int, long> out;
  for (const NumaNode& node : topology.nodes) out[node.id] = 0;
  for (const SimTask& t : tasks)
    for (const auto& [node, pages] : t.pages) out[node] += pages;
  return out;
}

std::map<int, double> SimHost::node_pressures() const {
  std::map<int, double> out;
  auto totals = node_page_totals();
  for (const NumaNode& node : topology.nodes)
    out[node.id] = static_cast<double>(totals[node.id]) / node.mem_total_pages;
  return out;
}

NumaTopology SimHost::current_topology() const {
  NumaTopology topo = topology;
  auto totals = node_page_totals();
  for (NumaNode& node : topo.nodes)
    node.mem_free_pages = std::max(0L, node.mem_total_pages - totals[node.id]);
  return topo;
}

PinTable SimHost::static_pins() const {
  std::vector<PinRule> rules;
  for (const SimTask& t : tasks)
    if (t.pin) rules.push_back({t.pid, "", *t.pin});
  return PinTable(std::move(rules));
}

void SimHost::validate() const {
  topology.validate();
  int prev_pid = -1;
  for (const SimTask& t : tasks) {
    std::string who = "task pid " + std::to_string(t.pid);
    if (t.pid <= prev_pid)
      throw ParseError(who + ": pids must be unique and ascending");
    prev_pid = t.pid;
    if (t.work_done > t.work_total)
      throw ParseError(who + ": work_done exceeds work_total");
    if (t.base_rate <= 0) throw ParseError(who + ": base_rate must be > 0");
    if (t.access_intensity < 0 || t.access_intensity > 1)
      throw ParseError(who + ": access_intensity outside [0,1]");
    for (const auto& [node, pages] : t.pages) {
      if (!topology.has_node(node))
        throw ParseError(who + ": pages on nonexistent node " +
                         std::to_string(node));
      if (pages < 0) throw ParseError(who + ": negative page count");
    }
    if (t.affinity.empty()) throw ParseError(who + ": empty affinity");
    for (int core : t.affinity)
      if (topology.node_of_core(core) < 0)
        throw ParseError(who + ": affinity names unknown core " +
                         std::to_string(core));
    if (t.running_core && !t.affinity.count(*t.running_core))
      throw ParseError(who + ": running core outside affinity");
  }
}

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& msg) {
  throw ParseError("scenario: " + path + ": " + msg);
}

void require_keys(const json& obj, const std::string& path,
                  std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) field_error(path + "." + key, "unknown field");
  }
}

double get_number(const json& obj, const std::string& path, const char* key,
                  std::optional<double> fallback = std::nullopt) {
  if (!obj.contains(key)) {
    if (fallback) return *fallback;
    field_error(path + "." + key, "missing");
  }
  if (!obj[key].is_number()) field_error(path + "." + key, "not a number");
  return obj[key].get<double>();
}

CoreSet parse_core_field(const json& value, const std::string& path) {
  try {
    if (value.is_string()) return parse_cpulist(value.get<std::string>());
    if (value.is_array()) {
      CoreSet out;
      for (const auto& v : value) {
        if (!v.is_number_integer()) throw ParseError("non-integer core id");
        out.insert(v.get<int>());
      }
      return out;
    }
  } catch (const ParseError& e) {
    field_error(path, e.what());
  }
  field_error(path, "expected a cpulist string or array of core ids");
}

}  // namespace

SimHost load_scenario(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario: not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) field_error("$", "expected a JSON object");
  require_keys(doc, "$", {"topology", "tasks", "params"});

  SimHost host;

  if (!doc.contains("topology")) field_error("$.topology", "missing");
  const json& jt = doc["topology"];
  require_keys(jt, "topology", {"nodes", "distances"});
  if (!jt.contains("nodes") || !jt["nodes"].is_array() || jt["nodes"].empty())
    field_error("topology.nodes", "expected a non-empty array");
  for (std::size_t i = 0; i < jt["nodes"].size(); ++i) {
    const json& jn = jt["nodes"][i];
    std::string path = "topology.nodes[" + std::to_string(i) + "]";
    require_keys(jn, path, {"id", "cores", "mem_total_pages"});
    NumaNode node;
    node.id = static_cast<int>(get_number(jn, path, "id"));
    if (!jn.contains("cores")) field_error(path + ".cores", "missing");
    node.core_ids = parse_core_field(jn["cores"], path + ".cores");
    node.mem_total_pages =
        static_cast<long>(get_number(jn, path, "mem_total_pages"));
    if (node.mem_total_pages <= 0)
      field_error(path + ".mem_total_pages", "must be positive");
    node.mem_free_pages = node.mem_total_pages;
    host.topology.nodes.push_back(std::move(node));
  }
  std::size_t n = host.topology.nodes.size();
  if (jt.contains("distances")) {
    const json& jd = jt["distances"];
    if (!jd.is_array() || jd.size() != n)
      field_error("topology.distances", "expected " + std::to_string(n) +
                                            " rows");
    for (std::size_t i = 0; i < n; ++i) {
      if (!jd[i].is_array() || jd[i].size() != n)
        field_error("topology.distances[" + std::to_string(i) + "]",
                    "expected " + std::to_string(n) + " entries");
      std::vector<int> row;
      for (const auto& v : jd[i]) row.push_back(v.get<int>());
      host.topology.distances.push_back(std::move(row));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<int> row(n, 20);
      row[i] = 10;
      host.topology.distances.push_back(std::move(row));
    }
  }

  CoreSet all_cores;
  for (const NumaNode& node : host.topology.nodes)
    all_cores.insert(node.core_ids.begin(), node.core_ids.end());

  if (doc.contains("tasks")) {
    if (!doc["tasks"].is_array()) field_error("tasks", "expected an array");
    for (std::size_t i = 0; i < doc["tasks"].size(); ++i) {
      const json& jt2 = doc["tasks"][i];
      std::string path = "tasks[" + std::to_string(i) + "]";
      require_keys(jt2, path,
                   {"pid", "profile", "importance", "base_rate", "work_total",
                    "work_done", "pages", "access_intensity", "affinity",
                    "pins"});
      SimTask task;
      task.pid = static_cast<int>(get_number(jt2, path, "pid"));
      task.importance = get_number(jt2, path, "importance", 1.0);
      task.base_rate = get_number(jt2, path, "base_rate", 1.0);
      task.work_total = get_number(jt2, path, "work_total", 0.0);
      task.work_done = get_number(jt2, path, "work_done", 0.0);
      task.access_intensity = get_number(jt2, path, "access_intensity", 0.5);

      if (jt2.contains("profile")) {
        if (!jt2["profile"].is_string())
          field_error(path + ".profile", "expected a profile name");
        std::string name = jt2["profile"].get<std::string>();
        if (name != "custom") {
          auto it = parsec_profiles().find(name);
          if (it == parsec_profiles().end())
            field_error(path + ".profile", "unknown profile '" + name + "'");
          task.profile = it->second;
        }
      }

      if (jt2.contains("pages")) {
        if (!jt2["pages"].is_object())
          field_error(path + ".pages", "expected an object");
        for (const auto& [key, value] : jt2["pages"].items()) {
          int node;
          try {
            node = std::stoi(key);
          } catch (...) {
            field_error(path + ".pages", "bad node id '" + key + "'");
          }
          if (!value.is_number())
            field_error(path + ".pages." + key, "not a number");
          task.pages[node] = value.get<long>();
        }
      }

      if (jt2.contains("affinity"))
        task.affinity = parse_core_field(jt2["affinity"], path + ".affinity");
      else
        task.affinity = all_cores;

      if (jt2.contains("pins"))
        task.pin = parse_core_field(jt2["pins"], path + ".pins");

      // Table-1 characteristics shape the defaults: heavy data sharing makes
      // a task more memory-bound, heavy data exchange spreads its pages.
      if (task.profile.sharing == Sharing::High)
        task.access_intensity = std::min(1.0, task.access_intensity + 0.2);
      if (task.profile.exchange == Exchange::High && n >= 2) {
        PageMap nz = nonzero_pages(task.pages);
        if (nz.size() == 1) {
          int from = nz.begin()->first;
          long half = nz.begin()->second / 2;
          int to = (from + 1) % static_cast<int>(n);
          if (half > 0 && to != from) {
            task.pages[from] -= half;
            task.pages[to] += half;
          }
        }
      }

      host.tasks.push_back(std::move(task));
    }
  }

  if (doc.contains("params")) {
    const json& jp = doc["params"];
    require_keys(jp, "params", {"alpha", "beta"});
    host.params.alpha = get_number(jp, "params", "alpha", 0.5);
    host.params.beta = get_number(jp, "params", "beta", 1.0);
  }

  std::sort(host.tasks.begin(), host.tasks.end(),
            [](const SimTask& a, const SimTask& b) { return a.pid < b.pid; });
  try {
    host.validate();
  } catch (const ParseError& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  return host;
}

SimHost load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_scenario(buf.str());
}

void assign_cores(SimHost& host) {
  CoreSet claimed;
  for (SimTask& task : host.tasks) {
    task.running_core.reset();
    if (task.finished()) continue;
    for (int core : task.affinity) {
      if (!claimed.count(core)) {
        claimed.insert(core);
        task.running_core = core;
        break;
      }
    }
  }
}

double effective_rate(const SimTask& task, const SimHost& host) {
  if (!task.running_core)
    throw std::logic_error("effective_rate: task has no running core");
  int node = host.topology.node_of_core(*task.running_core);

  double remote_ratio = 0.0;
  long total = task.total_pages();
  if (total > 0) {
    long local = 0;
    auto it = task.pages.find(node);
    if (it != task.pages.end()) local = it->second;
    remote_ratio = static_cast<double>(total - local) / total;
  }

  // Contention comes from competitors: the task's own footprint does not
  // slow it down (a sole local task runs at base rate).
  auto totals = host.node_page_totals();
  for (const auto& [n, pages] : task.pages) totals[n] -= pages;
  std::map<int, double> pressures;
  for (const NumaNode& n : host.topology.nodes)
    pressures[n.id] = static_cast<double>(totals[n.id]) / n.mem_total_pages;
  double mean = 0.0;
  for (const auto& [id, p] : pressures) mean += p;
  mean /= host.topology.node_count();
  double excess = std::max(0.0, pressures[node] - mean);

  double ai = task.access_intensity;
  double remote_damp =
      std::clamp(1.0 - host.params.alpha * remote_ratio * ai, 0.05, 1.0);
  double pressure_damp =
      std::clamp(1.0 - host.params.beta * excess * ai, 0.05, 1.0);
  return task.base_rate * remote_damp * pressure_damp;
}

void sim_step(SimHost& host, double dt) {
  if (dt <= 0) throw std::invalid_argument("sim_step: dt must be positive");
  assign_cores(host);
  // rates are computed against the placement at the start of the step
  std::map<int, double> rates;
  for (const SimTask& task : host.tasks)
    if (task.running_core && !task.finished())
      rates[task.pid] = effective_rate(task, host);
  for (SimTask& task : host.tasks) {
    auto it = rates.find(task.pid);
    if (it == rates.end()) continue;
    task.work_done = std::min(task.work_total, task.work_done + it->second * dt);
  }
  host.time += dt;
}

PageMap nonzero_pages(const PageMap& pages) {
  PageMap out;
  for (const auto& [node, count] : pages)
    if (count > 0) out[node] = count;
  return out;
}

FileTree render_procfs(const SimHost& host) {
  FileTree tree;
  for (const SimTask& task : host.tasks) {
    std::string pid = std::to_string(task.pid);

    std::ostringstream stat;
    stat << task.pid << " (" << task.profile.name << ") "
         << (task.running_core ? 'R' : 'S');
    for (int i = 0; i < 10; ++i) stat << " 0";          // fields 4..13
    stat << ' ' << task.utime_ticks() << " 0";          // utime, stime
    stat << " 0 0 20 0 1 0 0";                          // fields 16..22
    stat << " 0 " << task.total_pages() << " 0";        // vsize, rss, rsslim
    for (int i = 0; i < 13; ++i) stat << " 0";          // fields 26..38
    stat << ' ' << task.running_core.value_or(0);       // processor
    for (int i = 0; i < 13; ++i) stat << " 0";          // fields 40..52
    stat << '\n';
    tree[pid + "/stat"] = stat.str();

    std::ostringstream maps;
    for (const auto& [node, pages] : nonzero_pages(task.pages)) {
      maps << std::hex << (0x7f0000000000L + node * 0x10000000L) << std::dec
           << " default anon=" << pages << " dirty=" << pages << " N" << node
           << '=' << pages << " kernelpagesize_kB=4\n";
    }
    tree[pid + "/numa_maps"] = maps.str();
  }
  return tree;
}

FileTree render_sysfs(const SimHost& host) {
  FileTree tree;
  NumaTopology topo = host.current_topology();
  for (const NumaNode& node : topo.nodes) {
    std::string base = "devices/system/node/node" + std::to_string(node.id);
    tree[base + "/cpulist"] = format_cpulist(node.core_ids) + "\n";

    std::ostringstream mem;
    mem << "Node " << node.id << " MemTotal:       "
        << node.mem_total_pages * 4 << " kB\n";
    mem << "Node " << node.id << " MemFree:        "
        << node.mem_free_pages * 4 << " kB\n";
    tree[base + "/meminfo"] = mem.str();

    std::ostringstream dist;
    const auto& row = topo.distances[node.id];
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) dist << ' ';
      dist << row[i];
    }
    dist << '\n';
    tree[base + "/distance"] = dist.str();
  }
  return tree;
}

void write_file_tree(const FileTree& tree, const std::string& root_dir) {
  for (const auto& [rel, contents] : tree) {
    fs::path p = fs::path(root_dir) / rel;
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << contents;
  }
}

SnapshotBatch collect_from_tree(const FileTree& proc_tree, double now) {
  SnapshotBatch batch;
  batch.taken_at = now;
  std::set<int> pids;
  for (const auto& [rel, contents] : proc_tree) {
    size_t slash = rel.find('/');
    if (slash == std::string::npos) continue;
    std::string head = rel.substr(0, slash);
    if (head.find_first_not_of("0123456789") != std::string::npos) continue;
    pids.insert(std::stoi(head));
  }
  for (int pid : pids) {
    auto stat_it = proc_tree.find(std::to_string(pid) + "/stat");
    auto maps_it = proc_tree.find(std::to_string(pid) + "/numa_maps");
    if (stat_it == proc_tree.end() || maps_it == proc_tree.end()) continue;
    TaskSnapshot snap;
    snap.stat = parse_proc_stat(stat_it->second);
    snap.numa = parse_numa_maps(maps_it->second);
    snap.taken_at = now;
    batch.snapshots.push_back(std::move(snap));
  }
  return batch;
}

OpStatus SimBackend::set_affinity(int pid, const CoreSet& cores) {
  SimTask* task = host_.find_task(pid);
  if (!task) return {false, "no such pid " + std::to_string(pid)};
  if (cores.empty()) return {false, "empty core set"};
  for (int core : cores)
    if (host_.topology.node_of_core(core) < 0)
      return {false, "unknown core " + std::to_string(core)};
  task->affinity = cores;
  if (task->running_core && !cores.count(*task->running_core))
    task->running_core.reset();
  ++mutations_;
  call_log_.push_back("set_affinity pid=" + std::to_string(pid) + " cores=" +
                      format_cpulist(cores));
  return {true, ""};
}

MigrateStatus SimBackend::migrate_pages(int pid, const NodeSet& from,
                                        int to_node) {
  SimTask* task = host_.find_task(pid);
  if (!task) return {false, 0, "no such pid " + std::to_string(pid)};
  if (!host_.topology.has_node(to_node))
    return {false, 0, "unknown node " + std::to_string(to_node)};
  for (int node : from)
    if (!host_.topology.has_node(node))
      return {false, 0, "unknown node " + std::to_string(node)};

  long moved = 0;
  for (int node : from) {
    if (node == to_node) continue;
    auto it = task->pages.find(node);
    if (it == task->pages.end() || it->second == 0) continue;
    moved += it->second;
    task->pages[to_node] += it->second;
    it->second = 0;
  }
  ++mutations_;
  std::ostringstream msg;
  msg << "migrate_pages pid=" << pid << " to=" << to_node << " pages=" << moved;
  call_log_.push_back(msg.str());
  return {true, 0, ""};
}

std::optional<CoreSet> SimBackend::current_affinity(int pid) {
  SimTask* task = host_.find_task(pid);
  if (!task) return std::nullopt;
  return task->affinity;
}

std::optional<Policy> policy_from_name(const std::string& name) {
  if (name == "noop") return Policy::Noop;
  if (name == "static-pin") return Policy::StaticPin;
  if (name == "auto-balance") return Policy::AutoBalance;
  if (name == "proposed") return Policy::Proposed;
  return std::nullopt;
}

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::Noop: return "noop";
    case Policy::StaticPin: return "static-pin";
    case Policy::AutoBalance: return "auto-balance";
    case Policy::Proposed: return "proposed";
  }
  return "?";
}

namespace {

double task_remote_ratio(const SimTask& task, const SimHost& host) {
  if (!task.running_core) return 0.0;
  long total = task.total_pages();
  if (total == 0) return 0.0;
  int node = host.topology.node_of_core(*task.running_core);
  long local = 0;
  auto it = task.pages.find(node);
  if (it != task.pages.end()) local = it->second;
  return static_cast<double>(total - local) / total;
}

}  // namespace

ExperimentResult run_policy_experiment(const SimHost& scenario, Policy policy,
                                       double horizon,
                                       const ExperimentOptions& opts) {
  if (horizon <= 0)
    throw std::invalid_argument("experiment horizon must be positive");
  SimHost host = scenario;
  host.validate();
  SimBackend backend(host);

  ReporterConfig rcfg;
  rcfg.theta_imbalance = opts.theta_imbalance;
  rcfg.theta_idle = opts.theta_idle;
  rcfg.ticks_per_second = 100;
  {
    std::vector<ImportanceRule> rules;
    for (const SimTask& t : host.tasks)
      if (t.importance != 1.0) rules.push_back({t.pid, "", t.importance});
    rcfg.importance = ImportanceTable(std::move(rules));
  }
  Reporter reporter(host.topology, rcfg);
  SchedulerConfig scfg;
  scfg.theta_contention = opts.theta_contention;

  ExperimentResult result;
  result.policy = policy;

  std::map<int, double> completion;
  auto record_completions = [&] {
    for (const SimTask& t : host.tasks)
      if (t.finished() && !completion.count(t.pid))
        completion[t.pid] = host.time;
  };
  auto all_done = [&] {
    return std::all_of(host.tasks.begin(), host.tasks.end(),
                       [](const SimTask& t) { return t.finished(); });
  };

  record_completions();
  int substeps = std::max(1, static_cast<int>(
                                 std::lround(opts.control_interval / opts.sim_dt)));
  bool first_tick = true;

  while (host.time < horizon - 1e-9 && !all_done()) {
    assign_cores(host);
    switch (policy) {
      case Policy::Noop:
        break;
      case Policy::StaticPin: {
        if (first_tick) {
          PinTable pins = host.static_pins();
          for (const SimTask& t : host.tasks) {
            auto pin = pins.lookup(t.pid, t.profile.name);
            if (pin) {
              backend.set_affinity(t.pid, *pin);
              ++result.moves_applied;
            }
          }
        }
        break;
      }
      case Policy::AutoBalance: {
        // caricature of kernel balancing: chase the running node, ignore
        // importance
        std::vector<int> pids;
        for (const SimTask& t : host.tasks) pids.push_back(t.pid);
        for (int pid : pids) {
          SimTask* t = host.find_task(pid);
          if (!t->running_core || t->finished()) continue;
          if (task_remote_ratio(*t, host) <= 0.5) continue;
          int node = host.topology.node_of_core(*t->running_core);
          NodeSet sources;
          for (const auto& [n, pages] : t->pages)
            if (n != node && pages > 0) sources.insert(n);
          if (sources.empty()) continue;
          backend.migrate_pages(pid, sources, node);
          ++result.moves_applied;
        }
        break;
      }
      case Policy::Proposed: {
        FileTree tree = render_procfs(host);
        SnapshotBatch batch = collect_from_tree(tree, host.time);
        auto report = reporter.process_batch(batch);
        if (report) {
          ++result.reports_emitted;
          PlacementPlan plan =
              schedule_once(*report, host.topology, scfg, backend);
          ApplyResult applied = apply_plan(plan, backend, false);
          result.moves_applied += static_cast<int>(applied.moves.size());
        }
        break;
      }
    }
    first_tick = false;

    for (int i = 0; i < substeps; ++i) {
      if (all_done() || host.time >= horizon - 1e-9) break;
      sim_step(host, opts.sim_dt);
      record_completions();
    }
  }

  for (const SimTask& t : host.tasks) {
    TaskOutcome out;
    out.pid = t.pid;
    auto it = completion.find(t.pid);
    out.completed = it != completion.end();
    out.completion_time = out.completed ? it->second : 0.0;
    result.tasks.push_back(out);
  }
  if (all_done()) {
    double makespan = 0.0;
    for (const auto& [pid, t] : completion) makespan = std::max(makespan, t);
    result.makespan = makespan;
  }
  return result;
}

namespace {

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

}  // namespace

std::string experiment_to_json(const std::vector<ExperimentResult>& results,
                               const std::string& scenario_name,
                               double horizon) {
  json doc;
  doc["scenario"] = scenario_name;
  doc["horizon"] = round3(horizon);
  doc["results"] = json::array();
  for (const ExperimentResult& r : results) {
    json jr;
    jr["policy"] = policy_name(r.policy);
    jr["tasks"] = json::array();
    for (const TaskOutcome& t : r.tasks) {
      json jt;
      jt["pid"] = t.pid;
      jt["completed"] = t.completed;
      if (t.completed)
        jt["completion_time"] = round3(t.completion_time);
      else
        jt["completion_time"] = nullptr;
      jr["tasks"].push_back(jt);
    }
    if (r.makespan)
      jr["makespan"] = round3(*r.makespan);
    else
      jr["makespan"] = nullptr;
    jr["reports"] = r.reports_emitted;
    jr["moves"] = r.moves_applied;
    doc["results"].push_back(jr);
  }
  return doc.dump(2) + "\n";
}

}  // namespace numasched
