#include "numasched/log.hpp"

#include <chrono>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace numasched {

namespace {

double wall_seconds() {
  using namespace std::chrono;
  return duration<double>(system_clock::now().time_since_epoch()).count();
}

}  // namespace

void Logger::event(const std::string& kind, const Fields& fields) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (json_) {
    nlohmann::json doc;
    doc["ts"] = wall_seconds();
    doc["event"] = kind;
    for (const auto& [key, value] : fields)
      std::visit([&](const auto& v) { doc[key] = v; }, value);
    out_ << doc.dump() << '\n';
  } else {
    std::ostringstream line;
    line << std::fixed << std::setprecision(3) << wall_seconds() << ' ' << kind;
    for (const auto& [key, value] : fields) {
      line << ' ' << key << '=';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, bool>)
              line << (v ? "true" : "false");
            else
              line << v;
          },
          value);
    }
    out_ << line.str() << '\n';
  }
  out_.flush();
}

void Logger::warn(const std::string& message) {
  event("warning", {{"message", message}});
}

}  // namespace numasched
