#include "drbandit/log_io.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace drbandit {

using nlohmann::json;

namespace {

json event_to_json(const LogEvent& e) {
  json jx = json::object();
  for (const auto& [i, v] : e.context.features) jx[std::to_string(i)] = v;
  return json{{"x", std::move(jx)}, {"a", e.action}, {"r", e.outcome}, {"p", e.propensity}};
}

LogEvent event_from_json(const json& j) {
  LogEvent e;
  const auto& jx = j.at("x");
  if (!jx.is_object()) throw std::runtime_error("\"x\" must be an object");
  e.context.features.reserve(jx.size());
  for (auto it = jx.begin(); it != jx.end(); ++it) {
    std::size_t pos = 0;
    const unsigned long idx = std::stoul(it.key(), &pos);
    if (pos != it.key().size()) throw std::runtime_error("bad feature index \"" + it.key() + "\"");
    e.context.features.emplace_back(static_cast<std::uint32_t>(idx), it.value().get<double>());
  }
  std::sort(e.context.features.begin(), e.context.features.end());
  validate_features(e.context.features);
  e.action = j.at("a").get<int>();
  e.outcome = j.at("r").get<double>();
  e.propensity = j.at("p").get<double>();
  validate_event(e);
  return e;
}

}  // namespace

LogFile read_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open log file: " + path);
  LogFile out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const std::exception& ex) {
      throw ParseError(path, lineno, ex.what());
    }
    try {
      if (lineno == 1 && j.contains("meta")) {
        LogMeta meta;
        meta.num_actions = j["meta"].at("k").get<int>();
        const std::string mode = j["meta"].value("mode", "reward");
        meta.mode = mode == "loss" ? OutcomeMode::kLoss : OutcomeMode::kReward;
        out.meta = meta;
        continue;
      }
      out.events.push_back(event_from_json(j));
    } catch (const std::exception& ex) {
      throw ParseError(path, lineno, ex.what());
    }
  }
  return out;
}

void write_log(const LogFile& log, const std::string& path) {
  std::ofstream outf(path);
  if (!outf) throw std::runtime_error("cannot open for writing: " + path);
  outf.precision(17);
  if (log.meta) {
    json meta{{"meta", {{"k", log.meta->num_actions},
                        {"mode", log.meta->mode == OutcomeMode::kLoss ? "loss" : "reward"}}}};
    outf << meta.dump() << '\n';
  }
  for (const auto& e : log.events) outf << event_to_json(e).dump() << '\n';
  if (!outf) throw std::runtime_error("write failed: " + path);
}

void write_log(const std::vector<LogEvent>& events, const std::string& path) {
  LogFile f;
  f.events = events;
  write_log(f, path);
}

}  // namespace drbandit
