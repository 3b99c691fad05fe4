#pragma once

namespace phaseseg {

// Log verbosity is controlled by the PHASESEG_LOG environment variable:
// "error", "warn", "info" or "debug". Default is "warn". Messages go to stderr
// so they never disturb machine-readable output on stdout.
enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level();

void log_msg(LogLevel level, const char* fmt, ...)
#if defined(__GNUC__)
    __attribute__((format(printf, 2, 3)))
#endif
    ;

}  // namespace phaseseg

#define PS_LOG_ERROR(...) ::phaseseg::log_msg(::phaseseg::LogLevel::error, __VA_ARGS__)
#define PS_LOG_WARN(...) ::phaseseg::log_msg(::phaseseg::LogLevel::warn, __VA_ARGS__)
#define PS_LOG_INFO(...) ::phaseseg::log_msg(::phaseseg::LogLevel::info, __VA_ARGS__)
#define PS_LOG_DEBUG(...) ::phaseseg::log_msg(::phaseseg::LogLevel::debug, __VA_ARGS__)
