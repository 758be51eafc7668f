#pragma once

#include <iostream>
#include <sstream>
#include <string_view>

namespace moodkit::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3 };

Level threshold();
void set_threshold(Level level);

namespace detail {
void emit(Level level, std::string_view message);
}

// log::info("trained ", n, " epochs")
template <typename... Args>
void write(Level level, const Args&... args) {
  if (level < threshold()) return;
  std::ostringstream os;
  (os << ... << args);
  detail::emit(level, os.str());
}

template <typename... Args>
void debug(const Args&... args) { write(Level::debug, args...); }
template <typename... Args>
void info(const Args&... args) { write(Level::info, args...); }
template <typename... Args>
void warn(const Args&... args) { write(Level::warn, args...); }
template <typename... Args>
void error(const Args&... args) { write(Level::error, args...); }

}  // namespace moodkit::log
