#include "numasched/procmon.hpp"

#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace numasched {

namespace {

constexpr unsigned long kKernelThreadFlag = 0x00200000;  // PF_KTHREAD

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

struct StatLine {
  TaskStat stat;
  unsigned long flags = 0;
};

StatLine parse_stat_line(const std::string& line) {
  size_t open = line.find('(');
  size_t close = line.rfind(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    throw ParseError("stat: no parenthesized comm in '" + line + "'");

  StatLine out;
  std::string pid_str = line.substr(0, open);
  // trim
  while (!pid_str.empty() && std::isspace((unsigned char)pid_str.back()))
    pid_str.pop_back();
  if (!all_digits(pid_str))
    throw ParseError("stat: bad pid field '" + pid_str + "'");
  out.stat.pid = std::stoi(pid_str);
  out.stat.comm = line.substr(open + 1, close - open - 1);

  // Fields 3.. follow the closing paren; field 1 is pid, field 2 comm.
  std::istringstream rest(line.substr(close + 1));
  std::vector<std::string> f;
  std::string tok;
  while (rest >> tok) f.push_back(tok);
  // need up to field 39 (processor) => 37 tokens after comm
  if (f.size() < 37)
    throw ParseError("stat: expected at least 39 fields, got " +
                     std::to_string(f.size() + 2));

  out.stat.state = f[0][0];
  auto num = [&](size_t idx, const char* name) -> long long {
    const std::string& t = f[idx];
    size_t off = (!t.empty() && (t[0] == '-' || t[0] == '+')) ? 1 : 0;
    if (t.size() == off || !all_digits(t.substr(off)))
      throw ParseError(std::string("stat: non-numeric ") + name + " '" + t +
                       "'");
    return std::stoll(t);
  };
  out.flags = static_cast<unsigned long>(num(6, "flags"));       // field 9
  out.stat.utime_ticks = num(11, "utime");                       // field 14
  out.stat.stime_ticks = num(12, "stime");                       // field 15
  out.stat.last_cpu = static_cast<int>(num(36, "processor"));    // field 39
  return out;
}

std::optional<std::string> read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return std::nullopt;
  std::ostringstream out;
  out << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return out.str();
}

}  // namespace

TaskStat parse_proc_stat(const std::string& line) {
  return parse_stat_line(line).stat;
}

NumaMapsSummary parse_numa_maps(const std::string& text) {
  NumaMapsSummary out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      if (tok[0] != 'N') continue;
      size_t eq = tok.find('=');
      if (eq == std::string::npos) continue;
      std::string k = tok.substr(1, eq - 1);
      std::string v = tok.substr(eq + 1);
      if (!all_digits(k) || !all_digits(v))
        throw ParseError("numa_maps: bad node token '" + tok + "' in line '" +
                         line + "'");
      long pages = std::stol(v);
      out.per_node_pages[std::stoi(k)] += pages;
      out.total_pages += pages;
    }
  }
  return out;
}

std::set<int> list_candidate_pids(const std::string& proc_root,
                                  const MonitorSelection& sel) {
  fs::path root(proc_root);
  std::error_code ec;
  fs::directory_iterator it(root, ec);
  if (ec)
    throw std::runtime_error("cannot read proc root " + proc_root + ": " +
                             ec.message());

  int self = sel.self_pid != 0 ? sel.self_pid : static_cast<int>(getpid());
  std::set<int> out;
  for (const auto& entry : it) {
    std::string name = entry.path().filename().string();
    if (!all_digits(name)) continue;
    int pid = std::stoi(name);
    if (pid == 0 || pid == self) continue;

    if (!sel.pids.empty()) {
      if (std::find(sel.pids.begin(), sel.pids.end(), pid) == sel.pids.end())
        continue;
      out.insert(pid);
      continue;
    }

    // Pattern and "all" modes need the stat line anyway, to match comm and
    // to drop kernel threads.
    auto text = read_file(entry.path() / "stat");
    if (!text) continue;  // vanished
    StatLine st;
    try {
      st = parse_stat_line(*text);
    } catch (const ParseError&) {
      continue;
    }
    if (st.flags & kKernelThreadFlag) continue;
    if (!sel.patterns.empty()) {
      bool match = false;
      for (const auto& pat : sel.patterns)
        if (st.stat.comm.find(pat) != std::string::npos) {
          match = true;
          break;
        }
      if (!match) continue;
    }
    out.insert(pid);
  }
  return out;
}

SnapshotBatch collect_snapshot(const std::set<int>& pids,
                               const std::string& proc_root, double now) {
  SnapshotBatch batch;
  batch.taken_at = now;
  fs::path root(proc_root);
  for (int pid : pids) {
    fs::path dir = root / std::to_string(pid);
    auto stat_text = read_file(dir / "stat");
    if (!stat_text) continue;
    auto maps_text = read_file(dir / "numa_maps");
    if (!maps_text) continue;

    TaskSnapshot snap;
    try {
      snap.stat = parse_proc_stat(*stat_text);
      snap.numa = parse_numa_maps(*maps_text);
    } catch (const ParseError&) {
      continue;  // torn read of a dying process
    }
    snap.taken_at = now;
    batch.snapshots.push_back(std::move(snap));
  }
  return batch;
}

double SystemClock::now() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

bool SystemClock::sleep_interval(std::chrono::milliseconds interval,
                                 const StopSignal& stop) {
  return !stop.wait_for(interval);
}

void monitor_loop(std::chrono::milliseconds interval,
                  const std::string& proc_root, const MonitorSelection& sel,
                  MonitorClock& clock, BoundedQueue<SnapshotBatch>& sink,
                  const StopSignal& stop) {
  while (true) {
    if (stop.stop_requested()) break;
    if (!clock.sleep_interval(interval, stop)) break;
    std::set<int> pids = list_candidate_pids(proc_root, sel);
    SnapshotBatch batch = collect_snapshot(pids, proc_root, clock.now());
    if (!sink.push(std::move(batch))) break;
  }
}

}  // namespace numasched
