#ifndef KBQGEN_LOG_HPP
#define KBQGEN_LOG_HPP

#include <iostream>
#include <mutex>
#include <string_view>

namespace kbqgen::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3, off = 4 };

struct Sink {
  std::ostream *out = &std::cerr;
  Level threshold = Level::warn;
  std::mutex mutex;
};

inline Sink &sink() {
  static Sink s;
  return s;
}

inline void set_stream(std::ostream &out) { sink().out = &out; }
inline void set_level(Level level) { sink().threshold = level; }

inline void write(Level level, std::string_view msg) {
  static constexpr std::string_view names[] = {"debug", "info", "warn", "error"};
  Sink &s = sink();
  if (level < s.threshold || level == Level::off) return;
  std::lock_guard lock(s.mutex);
  *s.out << '[' << names[static_cast<int>(level)] << "] " << msg << '\n';
}

inline void debug(std::string_view msg) { write(Level::debug, msg); }
inline void info(std::string_view msg) { write(Level::info, msg); }
inline void warn(std::string_view msg) { write(Level::warn, msg); }
inline void error(std::string_view msg) { write(Level::error, msg); }

}  // namespace kbqgen::log

#endif
