// Copyright 2026 The latentse Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace lse {

inline void check_arg(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

inline void check_state(bool ok, const std::string& msg) {
  if (!ok) throw std::runtime_error(msg);
}

// splitmix64; used to derive independent per-(seed, epoch, index) streams
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

inline LogLevel log_threshold() {
  static LogLevel level = [] {
    const char* env = std::getenv("LOG_LEVEL");
    if (!env) return LogLevel::kInfo;
    std::string s(env);
    if (s == "debug" || s == "DEBUG") return LogLevel::kDebug;
    if (s == "warn" || s == "WARN") return LogLevel::kWarn;
    if (s == "error" || s == "ERROR") return LogLevel::kError;
    return LogLevel::kInfo;
  }();
  return level;
}

inline void log_line(LogLevel level, const std::string& msg) {
  if (level < log_threshold()) return;
  static const char* names[] = {"DEBUG", "INFO", "WARN", "ERROR"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

inline void log_info(const std::string& msg) { log_line(LogLevel::kInfo, msg); }
inline void log_warn(const std::string& msg) { log_line(LogLevel::kWarn, msg); }

class WallTimer {
 public:
  WallTimer() : start_(clock::now()) {}
  void reset() { start_ = clock::now(); }
  double seconds() const {
    return std::chrono::duration<double>(clock::now() - start_).count();
  }

 private:
  using clock = std::chrono::steady_clock;
  clock::time_point start_;
};

}  // namespace lse
