#ifndef NUMASCHED_TOPOLOGY_HPP
#define NUMASCHED_TOPOLOGY_HPP

#include <string>
#include <vector>

#include "numasched/types.hpp"

namespace numasched {

struct NumaNode {
  int id = 0;
  CoreSet core_ids;
  long mem_total_pages = 0;
  long mem_free_pages = 0;
};

// Immutable after construction; safe to share across threads.
struct NumaTopology {
  std::vector<NumaNode> nodes;                  // sorted by node id, ids dense 0..N-1
  std::vector<std::vector<int>> distances;      // N x N, row-major

  int node_count() const { return static_cast<int>(nodes.size()); }
  int total_cores() const;
  // node owning the given core, -1 if the core is unknown
  int node_of_core(int core) const;
  bool has_node(int node_id) const {
    return node_id >= 0 && node_id < node_count();
  }

  // throws ParseError if any NumaNode/NumaTopology invariant fails
  void validate() const;
};

// "0-3,8" -> {0,1,2,3,8}; "" -> {}
CoreSet parse_cpulist(const std::string& text);

// canonical range form, e.g. {0,1,2,3,8} -> "0-3,8"
std::string format_cpulist(const CoreSet& cores);

// "10 21" -> {10, 21}
std::vector<int> parse_distance_row(const std::string& text);

// Extracts MemTotal/MemFree from a node meminfo file ("Node 0 MemTotal: 8192 kB")
// and converts kB to 4096-byte pages, rounding down.
struct NodeMemInfo {
  long total_pages = 0;
  long free_pages = 0;
};
NodeMemInfo parse_node_meminfo(const std::string& text);

// Reads devices/system/node/node<k>/{cpulist,meminfo,distance} beneath fs_root.
// Node ids must be dense 0..N-1; a missing distance file yields the SLIT
// default (10 on the diagonal, 20 off it).
NumaTopology discover_topology(const std::string& fs_root);

}  // namespace numasched

#endif
