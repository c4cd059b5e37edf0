#include "plausim/log.hpp"

#include <iostream>
#include <mutex>

namespace plausim {

namespace {

std::mutex g_mutex;
LogLevel g_level = LogLevel::Warning;
LogSink g_sink;

const char* label(LogLevel level) {
  switch (level) {
    case LogLevel::Debug: return "debug";
    case LogLevel::Info: return "info";
    case LogLevel::Warning: return "warning";
    case LogLevel::Error: return "error";
    case LogLevel::Off: return "";
  }
  return "";
}

}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void set_log_level(LogLevel level) {
  std::lock_guard lock(g_mutex);
  g_level = level;
}

void log(LogLevel level, const std::string& message) {
  std::lock_guard lock(g_mutex);
  if (level < g_level || level == LogLevel::Off) return;
  if (g_sink) {
    g_sink(level, message);
    return;
  }
  std::cerr << "plausim " << label(level) << ": " << message << '\n';
}

}  // namespace plausim
