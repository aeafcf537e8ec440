#pragma once

#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

#include "das3d/error.hpp"

namespace das3d {

enum class LogLevel { quiet = 0, warn = 1, info = 2, debug = 3 };

inline LogLevel parse_log_level(std::string_view name) {
  if (name == "quiet") return LogLevel::quiet;
  if (name == "warn") return LogLevel::warn;
  if (name == "info") return LogLevel::info;
  if (name == "debug") return LogLevel::debug;
  throw Error(Errc::invalid_argument, "unknown log level '" + std::string(name) + "'");
}

/// Line-oriented progress log on stderr; stdout stays free for JSON output.
class Log {
 public:
  explicit Log(LogLevel level = LogLevel::warn, std::ostream* sink = &std::cerr) : level_(level), sink_(sink) {}

  void warn(std::string_view msg) const { write(LogLevel::warn, "warning: ", msg); }
  void info(std::string_view msg) const { write(LogLevel::info, "", msg); }
  void debug(std::string_view msg) const { write(LogLevel::debug, "debug: ", msg); }

 private:
  void write(LogLevel at, std::string_view prefix, std::string_view msg) const {
    if (level_ < at || sink_ == nullptr) return;
    static std::mutex mutex;
    std::lock_guard lock(mutex);
    *sink_ << prefix << msg << '\n';
  }

  LogLevel level_;
  std::ostream* sink_;
};

}  // namespace das3d
