#pragma once

#include <ostream>
#include <string_view>

#include "json.hpp"

namespace sfa {

enum class LogLevel { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3 };

// Events are written as one JSON object per line:
//   {"level":"warn","event":"priors.unknown_key","key":"notes"}
// to standard error unless another sink is installed.
void log_event(LogLevel level, std::string_view event,
               nlohmann::ordered_json fields = nlohmann::ordered_json::object());

void set_log_level(LogLevel level);
// nullptr restores standard error. The stream must outlive its use.
void set_log_sink(std::ostream* sink);

}  // namespace sfa
