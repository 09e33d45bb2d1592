#include "sfadapt/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace sfa {
namespace {

std::mutex g_mutex;
std::ostream* g_sink = nullptr;
std::atomic<int> g_level{static_cast<int>(LogLevel::kInfo)};

const char* level_name(LogLevel l) {
  switch (l) {
    case LogLevel::kDebug:
      return "debug";
    case LogLevel::kInfo:
      return "info";
    case LogLevel::kWarn:
      return "warn";
    case LogLevel::kError:
      return "error";
  }
  return "?";
}

}  // namespace

void log_event(LogLevel level, std::string_view event,
               nlohmann::ordered_json fields) {
  if (static_cast<int>(level) < g_level.load()) return;
  nlohmann::ordered_json line;
  line["level"] = level_name(level);
  line["event"] = std::string(event);
  for (auto& [k, v] : fields.items()) line[k] = v;
  const std::string text =
      line.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
  std::lock_guard lock(g_mutex);
  std::ostream& out = g_sink != nullptr ? *g_sink : std::cerr;
  out << text << '\n';
  out.flush();
}

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

void set_log_sink(std::ostream* sink) {
  std::lock_guard lock(g_mutex);
  g_sink = sink;
}

}  // namespace sfa
