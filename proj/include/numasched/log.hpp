#ifndef NUMASCHED_LOG_HPP
#define NUMASCHED_LOG_HPP

#include <iostream>
#include <map>
#include <mutex>
#include <string>
#include <variant>
#include <vector>

namespace numasched {

enum class LogFormat;  // config.hpp

// Line-oriented logger. Text mode prints "kind key=value ...", json mode one
// object per line; either way a record carries enough to replay a
// scheduling decision offline.
class Logger {
 public:
  using Value = std::variant<std::string, long long, double, bool>;
  using Fields = std::vector<std::pair<std::string, Value>>;

  Logger(bool json, std::ostream& out) : json_(json), out_(out) {}

  void event(const std::string& kind, const Fields& fields = {});
  void warn(const std::string& message);

 private:
  bool json_;
  std::ostream& out_;
  std::mutex mutex_;
};

}  // namespace numasched

#endif
