#pragma once

#include <functional>
#include <string>

namespace plausim {

enum class LogLevel { Debug, Info, Warning, Error, Off };

using LogSink = std::function<void(LogLevel, const std::string&)>;

/// Replaces the process-wide sink. The default writes warnings and errors to stderr.
void set_log_sink(LogSink sink);
void set_log_level(LogLevel level);
void log(LogLevel level, const std::string& message);

inline void log_warning(const std::string& message) { log(LogLevel::Warning, message); }
inline void log_info(const std::string& message) { log(LogLevel::Info, message); }

}  // namespace plausim
