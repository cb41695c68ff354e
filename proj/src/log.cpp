#include "segzero/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace segzero::log {

namespace {

constexpr std::string_view kNames[] = {"error", "warn", "info", "debug"};

Level from_env() {
  const char* v = std::getenv("SEGZERO_LOG");
  if (v == nullptr) return Level::Info;
  return parse_level(v).value_or(Level::Info);
}

std::atomic<Level>& current() {
  static std::atomic<Level> l{from_env()};
  return l;
}

}  // namespace

std::optional<Level> parse_level(std::string_view s) {
  for (int i = 0; i < 4; ++i) {
    if (s == kNames[i]) return static_cast<Level>(i);
  }
  return std::nullopt;
}

Level level() { return current().load(); }
void set_level(Level l) { current().store(l); }

void write(Level l, std::string_view msg) {
  if (static_cast<int>(l) > static_cast<int>(level())) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  std::cerr << '[' << kNames[static_cast<int>(l)] << "] " << msg << '\n';
}

}  // namespace segzero::log
