#include "numasched/scheduler.hpp"

#ifdef __linux__
#include <sched.h>
#include <sys/syscall.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#endif

namespace numasched {

#ifdef __linux__

namespace {

// every thread of the pid, from <proc_root>/<pid>/task
std::vector<int> thread_ids(const std::string& proc_root, int pid) {
  std::vector<int> tids;
  std::error_code ec;
  std::filesystem::path dir =
      std::filesystem::path(proc_root) / std::to_string(pid) / "task";
  for (auto it = std::filesystem::directory_iterator(dir, ec);
       !ec && it != std::filesystem::directory_iterator(); ++it) {
    const std::string name = it->path().filename().string();
    if (!name.empty() && name.find_first_not_of("0123456789") == std::string::npos)
      tids.push_back(std::stoi(name));
  }
  if (tids.empty()) tids.push_back(pid);
  return tids;
}

}  // namespace

OpStatus LinuxBackend::set_affinity(int pid, const CoreSet& cores) {
  if (cores.empty()) return {false, "empty core set"};
  cpu_set_t mask;
  CPU_ZERO(&mask);
  for (int c : cores) CPU_SET(c, &mask);
  OpStatus status;
  for (int tid : thread_ids(proc_root_, pid)) {
    if (sched_setaffinity(tid, sizeof(mask), &mask) != 0) {
      status.ok = false;
      status.error = std::string("sched_setaffinity(") + std::to_string(tid) +
                     "): " + std::strerror(errno);
    }
  }
  return status;
}

MigrateStatus LinuxBackend::migrate_pages(int pid, const NodeSet& from,
                                          int to_node) {
  const unsigned long maxnode = static_cast<unsigned long>(max_node_) + 2;
  const std::size_t words = (maxnode + 8 * sizeof(unsigned long) - 1) /
                            (8 * sizeof(unsigned long));
  std::vector<unsigned long> old_mask(words, 0), new_mask(words, 0);
  auto set_bit = [](std::vector<unsigned long>& mask, int bit) {
    mask[bit / (8 * sizeof(unsigned long))] |=
        1UL << (bit % (8 * sizeof(unsigned long)));
  };
  for (int n : from) set_bit(old_mask, n);
  set_bit(new_mask, to_node);

  long rc = syscall(SYS_migrate_pages, pid, maxnode, old_mask.data(),
                    new_mask.data());
  if (rc < 0)
    return {false, 0,
            std::string("migrate_pages: ") + std::strerror(errno)};
  return {true, rc, ""};  // kernel reports pages it could not move
}

std::optional<CoreSet> LinuxBackend::current_affinity(int pid) {
  cpu_set_t mask;
  CPU_ZERO(&mask);
  if (sched_getaffinity(pid, sizeof(mask), &mask) != 0) return std::nullopt;
  CoreSet out;
  for (int c = 0; c < CPU_SETSIZE; ++c)
    if (CPU_ISSET(c, &mask)) out.insert(c);
  return out;
}

#else  // !__linux__

OpStatus LinuxBackend::set_affinity(int, const CoreSet&) {
  return {false, "live backend requires Linux"};
}

MigrateStatus LinuxBackend::migrate_pages(int, const NodeSet&, int) {
  return {false, 0, "live backend requires Linux"};
}

std::optional<CoreSet> LinuxBackend::current_affinity(int) {
  return std::nullopt;
}

#endif

}  // namespace numasched
