#ifndef NUMASCHED_TYPES_HPP
#define NUMASCHED_TYPES_HPP

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace numasched {

using CoreSet = std::set<int>;
using NodeSet = std::set<int>;
// node id -> resident page count
using PageMap = std::map<int, long>;

// Thrown by the procfs/sysfs/scenario parsers; the message names the
// offending token, line or field.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace numasched

#endif
