#include "sdsh/logging.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace sdsh {

namespace {
std::atomic<LogLevel> g_level{LogLevel::kWarning};
std::mutex g_mutex;

void emit(LogLevel level, std::string_view tag, std::string_view message) {
    if (level < g_level.load()) return;
    std::lock_guard lock(g_mutex);
    std::cerr << '[' << tag << "] " << message << '\n';
}
}  // namespace

void set_log_level(LogLevel level) { g_level.store(level); }
LogLevel log_level() { return g_level.load(); }

void log_info(std::string_view message) { emit(LogLevel::kInfo, "info", message); }
void log_warning(std::string_view message) { emit(LogLevel::kWarning, "warn", message); }

}  // namespace sdsh
