#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace resinet {

// Global comparison tolerance: used wherever the calculus writes a strict
// sign test (l(x) < 0, u(x) > 0, phase decisions).
inline constexpr double kEps = 1e-8;

// Margin for strict inequalities in the LP encoding: y > c becomes y >= c + kStrict.
inline constexpr double kStrict = 1e-6;

// Slack allowed when replaying an LP assignment against the raw constraints.
inline constexpr double kLpTol = 1e-7;

// Tolerance for the ReLU consistency check x_f = max(0, x_b) on LP assignments.
inline constexpr double kSuccessTol = 1e-6;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using Vec = std::vector<double>;

struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input files (JSON syntax, dimensions, unknown fields).
struct ParseError : Error {
  using Error::Error;
};

// Internal engine failures (iteration caps, consistency checks). Never a verdict.
struct EngineError : Error {
  using Error::Error;
};

enum class LogLevel { kOff = 0, kInfo = 1, kDebug = 2 };

inline LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("RESINET_LOG");
    if (env == nullptr) return LogLevel::kOff;
    const std::string v(env);
    if (v == "debug") return LogLevel::kDebug;
    if (v == "info") return LogLevel::kInfo;
    return LogLevel::kOff;
  }();
  return level;
}

inline void log_line(LogLevel min_level, const std::string& msg) {
  if (static_cast<int>(log_level()) >= static_cast<int>(min_level)) {
    std::cerr << "[resinet] " << msg << "\n";
  }
}

template <typename... Args>
std::string cat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

}  // namespace resinet
