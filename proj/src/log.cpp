#include "moodkit/log.hpp"

#include <atomic>

namespace moodkit::log {
namespace {
std::atomic<Level> g_threshold{Level::info};

const char* tag(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
  }
  return "?";
}
}  // namespace

Level threshold() { return g_threshold.load(); }
void set_threshold(Level level) { g_threshold.store(level); }

namespace detail {
void emit(Level level, std::string_view message) {
  std::cerr << "[moodkit:" << tag(level) << "] " << message << '\n';
}
}  // namespace detail

}  // namespace moodkit::log
