#ifndef NUMASCHED_CONFIG_HPP
#define NUMASCHED_CONFIG_HPP

#include <string>
#include <vector>

#include "numasched/procmon.hpp"
#include "numasched/reporter.hpp"
#include "numasched/scheduler.hpp"

namespace numasched {

enum class LogFormat { Text, Json };

struct DaemonConfig {
  int interval_ms = 1000;
  std::string proc_root = "/proc";
  std::string sysfs_root = "/sys";
  std::vector<ImportanceRule> importance;
  std::vector<PinRule> pins;
  double theta_imbalance = 0.20;
  double theta_idle = 0.10;
  double theta_contention = 0.50;
  bool dry_run = false;
  LogFormat log_format = LogFormat::Text;
  MonitorSelection monitor;

  bool operator==(const DaemonConfig& other) const;
};

// Strict JSON schema: unknown keys are rejected, invariant violations name
// the key.
DaemonConfig parse_config(const std::string& json_text);
DaemonConfig load_config_file(const std::string& path);
std::string serialize_config(const DaemonConfig& config);

}  // namespace numasched

#endif
