#ifndef NUMASCHED_DAEMON_HPP
#define NUMASCHED_DAEMON_HPP

#include <functional>

#include "numasched/config.hpp"
#include "numasched/log.hpp"
#include "numasched/scheduler.hpp"

namespace numasched {

struct DaemonOptions {
  // stop after this many monitor intervals; 0 = run until interrupted
  int max_ticks = 0;
  // polled between intervals; return true to shut down (signal handlers)
  std::function<bool()> interrupted;
  // test hook; defaults to LinuxBackend live, NullBackend when dry
  SystemBackend* backend = nullptr;
};

// Wires monitor -> reporter -> scheduler -> backend and runs until stopped.
// Exit codes: 0 clean shutdown, 2 no NUMA topology or bad configuration.
int run_daemon(const DaemonConfig& config, Logger& log,
               const DaemonOptions& options = {});

}  // namespace numasched

#endif
