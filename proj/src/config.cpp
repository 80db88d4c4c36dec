#include "numasched/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "numasched/topology.hpp"

using nlohmann::json;

namespace numasched {

bool DaemonConfig::operator==(const DaemonConfig& other) const {
  auto rules_eq = [](const auto& a, const auto& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].pid != b[i].pid || a[i].pattern != b[i].pattern) return false;
    }
    return true;
  };
  if (!rules_eq(importance, other.importance) || !rules_eq(pins, other.pins))
    return false;
  for (std::size_t i = 0; i < importance.size(); ++i)
    if (importance[i].weight != other.importance[i].weight) return false;
  for (std::size_t i = 0; i < pins.size(); ++i)
    if (pins[i].cores != other.pins[i].cores) return false;
  return interval_ms == other.interval_ms && proc_root == other.proc_root &&
         sysfs_root == other.sysfs_root &&
         theta_imbalance == other.theta_imbalance &&
         theta_idle == other.theta_idle &&
         theta_contention == other.theta_contention &&
         dry_run == other.dry_run && log_format == other.log_format &&
         monitor.pids == other.monitor.pids &&
         monitor.patterns == other.monitor.patterns;
}

namespace {

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError("config: unknown key " + path + key);
  }
}

}  // namespace

DaemonConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(doc, "",
                 {"interval_ms", "proc_root", "sysfs_root", "importance",
                  "pins", "thresholds", "dry_run", "log_format", "monitor"});

  DaemonConfig cfg;
  if (doc.contains("interval_ms")) {
    cfg.interval_ms = doc["interval_ms"].get<int>();
    if (cfg.interval_ms <= 0)
      throw ConfigError("config: interval_ms must be > 0");
  }
  if (doc.contains("proc_root")) cfg.proc_root = doc["proc_root"];
  if (doc.contains("sysfs_root")) cfg.sysfs_root = doc["sysfs_root"];

  if (doc.contains("importance")) {
    for (const auto& jr : doc["importance"]) {
      reject_unknown(jr, "importance.", {"pid", "pattern", "weight"});
      ImportanceRule rule;
      if (jr.contains("pid")) rule.pid = jr["pid"].get<int>();
      if (jr.contains("pattern")) rule.pattern = jr["pattern"];
      if (!rule.pid && rule.pattern.empty())
        throw ConfigError("config: importance rule needs pid or pattern");
      rule.weight = jr.value("weight", 1.0);
      if (rule.weight <= 0)
        throw ConfigError("config: importance weight must be > 0");
      cfg.importance.push_back(std::move(rule));
    }
  }

  if (doc.contains("pins")) {
    for (const auto& jr : doc["pins"]) {
      reject_unknown(jr, "pins.", {"pid", "pattern", "cpus"});
      PinRule rule;
      if (jr.contains("pid")) rule.pid = jr["pid"].get<int>();
      if (jr.contains("pattern")) rule.pattern = jr["pattern"];
      if (!rule.pid && rule.pattern.empty())
        throw ConfigError("config: pin rule needs pid or pattern");
      if (!jr.contains("cpus")) throw ConfigError("config: pin rule needs cpus");
      try {
        rule.cores = parse_cpulist(jr["cpus"].get<std::string>());
      } catch (const ParseError& e) {
        throw ConfigError(std::string("config: pins cpus: ") + e.what());
      }
      if (rule.cores.empty())
        throw ConfigError("config: pin cpus must be non-empty");
      cfg.pins.push_back(std::move(rule));
    }
  }

  if (doc.contains("thresholds")) {
    const json& jt = doc["thresholds"];
    reject_unknown(jt, "thresholds.", {"imbalance", "idle", "contention"});
    cfg.theta_imbalance = jt.value("imbalance", cfg.theta_imbalance);
    cfg.theta_idle = jt.value("idle", cfg.theta_idle);
    cfg.theta_contention = jt.value("contention", cfg.theta_contention);
    if (cfg.theta_imbalance < 0 || cfg.theta_idle < 0 ||
        cfg.theta_contention < 0)
      throw ConfigError("config: thresholds must be >= 0");
  }

  if (doc.contains("dry_run")) cfg.dry_run = doc["dry_run"].get<bool>();

  if (doc.contains("log_format")) {
    std::string fmt = doc["log_format"];
    if (fmt == "text")
      cfg.log_format = LogFormat::Text;
    else if (fmt == "json")
      cfg.log_format = LogFormat::Json;
    else
      throw ConfigError("config: log_format must be 'text' or 'json'");
  }

  if (doc.contains("monitor")) {
    const json& jm = doc["monitor"];
    reject_unknown(jm, "monitor.", {"pids", "patterns"});
    if (jm.contains("pids"))
      for (const auto& v : jm["pids"])
        cfg.monitor.pids.push_back(v.get<int>());
    if (jm.contains("patterns"))
      for (const auto& v : jm["patterns"])
        cfg.monitor.patterns.push_back(v.get<std::string>());
  }
  return cfg;
}

DaemonConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const DaemonConfig& cfg) {
  json doc;
  doc["interval_ms"] = cfg.interval_ms;
  doc["proc_root"] = cfg.proc_root;
  doc["sysfs_root"] = cfg.sysfs_root;
  doc["importance"] = json::array();
  for (const auto& rule : cfg.importance) {
    json jr;
    if (rule.pid) jr["pid"] = *rule.pid;
    if (!rule.pattern.empty()) jr["pattern"] = rule.pattern;
    jr["weight"] = rule.weight;
    doc["importance"].push_back(jr);
  }
  doc["pins"] = json::array();
  for (const auto& rule : cfg.pins) {
    json jr;
    if (rule.pid) jr["pid"] = *rule.pid;
    if (!rule.pattern.empty()) jr["pattern"] = rule.pattern;
    jr["cpus"] = format_cpulist(rule.cores);
    doc["pins"].push_back(jr);
  }
  doc["thresholds"] = {{"imbalance", cfg.theta_imbalance},
                       {"idle", cfg.theta_idle},
                       {"contention", cfg.theta_contention}};
  doc["dry_run"] = cfg.dry_run;
  doc["log_format"] = cfg.log_format == LogFormat::Json ? "json" : "text";
  doc["monitor"] = {{"pids", cfg.monitor.pids},
                    {"patterns", cfg.monitor.patterns}};
  return doc.dump(2) + "\n";
}

}  // namespace numasched
