#include "fewshot/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace fewshot {
namespace {

std::atomic<LogLevel> g_level{LogLevel::kWarn};
std::mutex g_mutex;

void emit(std::string_view tag, std::string_view message) {
  std::lock_guard lock(g_mutex);
  std::clog << "[fewshot " << tag << "] " << message << '\n';
}

}  // namespace

void set_log_level(LogLevel level) { g_level = level; }
LogLevel log_level() { return g_level; }

void log_warn(std::string_view message) {
  if (g_level >= LogLevel::kWarn) emit("warn", message);
}

void log_info(std::string_view message) {
  if (g_level >= LogLevel::kInfo) emit("info", message);
}

}  // namespace fewshot
