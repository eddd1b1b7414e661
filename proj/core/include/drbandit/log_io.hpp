#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drbandit/types.hpp"

namespace drbandit {

struct LogMeta {
  int num_actions = 0;
  OutcomeMode mode = OutcomeMode::kReward;
};

struct LogFile {
  std::optional<LogMeta> meta;
  std::vector<LogEvent> events;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
        line_number(line) {}
  std::size_t line_number;
};

// JSON Lines, one object per event: {"x":{"0":1.0,...},"a":2,"r":0.5,"p":0.25}.
// An optional first line {"meta":{"k":K,"mode":"loss"|"reward"}} declares the
// action count and whether "r" holds losses.
LogFile read_log(const std::string& path);

// Round-trips bit-exactly (doubles serialized with 17 significant digits).
void write_log(const LogFile& log, const std::string& path);
void write_log(const std::vector<LogEvent>& events, const std::string& path);

}  // namespace drbandit
