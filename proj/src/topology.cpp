#include "numasched/topology.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace numasched {

namespace {

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long parse_long(const std::string& tok, const std::string& context) {
  if (!all_digits(tok)) throw ParseError(context + ": bad token '" + tok + "'");
  return std::stol(tok);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ParseError("cannot read " + p.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

CoreSet parse_cpulist(const std::string& text) {
  CoreSet out;
  std::string body = trim(text);
  if (body.empty()) return out;

  std::stringstream ss(body);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    size_t dash = tok.find('-');
    if (dash == std::string::npos) {
      out.insert(static_cast<int>(parse_long(tok, "cpulist")));
    } else {
      long lo = parse_long(tok.substr(0, dash), "cpulist");
      long hi = parse_long(tok.substr(dash + 1), "cpulist");
      if (hi < lo) throw ParseError("cpulist: reversed range '" + tok + "'");
      for (long c = lo; c <= hi; ++c) out.insert(static_cast<int>(c));
    }
  }
  return out;
}

std::string format_cpulist(const CoreSet& cores) {
  std::ostringstream out;
  auto it = cores.begin();
  bool first = true;
  while (it != cores.end()) {
    int lo = *it;
    int hi = lo;
    auto next = std::next(it);
    while (next != cores.end() && *next == hi + 1) {
      hi = *next;
      ++next;
    }
    if (!first) out << ',';
    first = false;
    if (hi == lo)
      out << lo;
    else
      out << lo << '-' << hi;
    it = next;
  }
  return out.str();
}

std::vector<int> parse_distance_row(const std::string& text) {
  std::vector<int> out;
  std::istringstream ss(text);
  std::string tok;
  while (ss >> tok)
    out.push_back(static_cast<int>(parse_long(tok, "distance")));
  return out;
}

NodeMemInfo parse_node_meminfo(const std::string& text) {
  NodeMemInfo info;
  bool have_total = false, have_free = false;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    // "Node 0 MemTotal:       8192 kB"
    std::istringstream ls(line);
    std::string word, node_idx, key, value;
    if (!(ls >> word >> node_idx >> key >> value)) continue;
    if (word != "Node") continue;
    if (key == "MemTotal:") {
      info.total_pages = parse_long(value, "meminfo MemTotal") * 1024 / 4096;
      have_total = true;
    } else if (key == "MemFree:") {
      info.free_pages = parse_long(value, "meminfo MemFree") * 1024 / 4096;
      have_free = true;
    }
  }
  if (!have_total || !have_free)
    throw ParseError("meminfo: missing MemTotal or MemFree line");
  return info;
}

int NumaTopology::total_cores() const {
  int n = 0;
  for (const auto& node : nodes) n += static_cast<int>(node.core_ids.size());
  return n;
}

int NumaTopology::node_of_core(int core) const {
  for (const auto& node : nodes)
    if (node.core_ids.count(core)) return node.id;
  return -1;
}

void NumaTopology::validate() const {
  size_t n = nodes.size();
  CoreSet seen;
  for (size_t i = 0; i < n; ++i) {
    const NumaNode& node = nodes[i];
    if (node.id != static_cast<int>(i))
      throw ParseError("topology: node ids not dense, expected " +
                       std::to_string(i) + " got " + std::to_string(node.id));
    if (node.core_ids.empty())
      throw ParseError("topology: node " + std::to_string(node.id) +
                       " has no cores");
    if (node.mem_free_pages > node.mem_total_pages)
      throw ParseError("topology: node " + std::to_string(node.id) +
                       " MemFree exceeds MemTotal");
    for (int c : node.core_ids) {
      if (!seen.insert(c).second)
        throw ParseError("topology: core " + std::to_string(c) +
                         " appears on more than one node");
    }
  }
  if (distances.size() != n)
    throw ParseError("topology: distance matrix has " +
                     std::to_string(distances.size()) + " rows for " +
                     std::to_string(n) + " nodes");
  for (size_t i = 0; i < n; ++i) {
    const auto& row = distances[i];
    if (row.size() != n)
      throw ParseError("topology: distance row " + std::to_string(i) +
                       " has " + std::to_string(row.size()) + " entries");
    for (int d : row)
      if (d <= 0)
        throw ParseError("topology: non-positive distance in row " +
                         std::to_string(i));
    if (*std::min_element(row.begin(), row.end()) != row[i])
      throw ParseError("topology: local distance is not the row minimum in row " +
                       std::to_string(i));
  }
}

NumaTopology discover_topology(const std::string& fs_root) {
  fs::path base = fs::path(fs_root) / "devices" / "system" / "node";
  if (!fs::is_directory(base / "node0"))
    throw ParseError("no NUMA topology under " + fs_root);

  NumaTopology topo;
  for (int id = 0;; ++id) {
    fs::path dir = base / ("node" + std::to_string(id));
    if (!fs::is_directory(dir)) break;

    NumaNode node;
    node.id = id;
    try {
      node.core_ids = parse_cpulist(read_file(dir / "cpulist"));
      NodeMemInfo mem = parse_node_meminfo(read_file(dir / "meminfo"));
      node.mem_total_pages = mem.total_pages;
      node.mem_free_pages = mem.free_pages;
    } catch (const ParseError& e) {
      throw ParseError("node" + std::to_string(id) + ": " +
                       std::string(e.what()));
    }
    topo.nodes.push_back(std::move(node));
  }

  // Sparse ids (e.g. node0 + node2 without node1) are rejected: the loop
  // above stops at the first gap, so a leftover directory means a gap.
  size_t n = topo.nodes.size();
  for (const auto& entry : fs::directory_iterator(base)) {
    std::string name = entry.path().filename().string();
    if (name.rfind("node", 0) != 0) continue;
    std::string idx = name.substr(4);
    if (!all_digits(idx)) continue;
    if (std::stoul(idx) >= n)
      throw ParseError("topology: sparse node ids, found " + name +
                       " with only " + std::to_string(n) + " dense nodes");
  }

  for (size_t i = 0; i < n; ++i) {
    fs::path distfile = base / ("node" + std::to_string(i)) / "distance";
    std::vector<int> row;
    if (fs::exists(distfile)) {
      try {
        row = parse_distance_row(read_file(distfile));
      } catch (const ParseError& e) {
        throw ParseError("node" + std::to_string(i) + "/distance: " +
                         std::string(e.what()));
      }
    } else {
      row.assign(n, 20);
      row[i] = 10;
    }
    topo.distances.push_back(std::move(row));
  }

  topo.validate();
  return topo;
}

}  // namespace numasched
