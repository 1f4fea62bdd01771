#include "sgcn/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

#include "sgcn/errors.hpp"

namespace sgcn::log {

namespace {
std::atomic<Level> current{Level::info};
std::mutex sink_mutex;

const char* tag(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
    default: return "";
  }
}
}  // namespace

void set_level(Level level) { current.store(level); }
Level level() { return current.load(); }

Level parse_level(std::string_view name) {
  if (name == "debug") return Level::debug;
  if (name == "info") return Level::info;
  if (name == "warn") return Level::warn;
  if (name == "error") return Level::error;
  if (name == "off") return Level::off;
  throw ConfigurationError("unknown log level '" + std::string(name) + "'");
}

void write(Level lvl, std::string_view message) {
  if (lvl < current.load()) return;
  std::lock_guard lock(sink_mutex);
  std::cerr << "[sgcn " << tag(lvl) << "] " << message << '\n';
}

}  // namespace sgcn::log
