#pragma once

// JSON forms of scenarios, host state, event logs and reports.
//
// Scenario parsing is strict: unknown keys and wrongly typed values raise
// SpecError naming the JSON path (e.g. "guards[1].trigger.mode").

#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

#include "selfguard/engine.hpp"

namespace selfguard::io {

using nlohmann::json;

inline constexpr std::string_view kReportSchema = "selfguard-report/1";
inline constexpr std::string_view kLogSchema = "selfguard-log/1";

json to_json(const Scalar& s);
Scalar scalar_from_json(const json& j, const std::string& where);

json to_json(const HostState& host);
HostState host_state_from_json(const json& j);

json to_json(const Mutation& m);
Mutation mutation_from_json(const json& j, const std::string& where = "mutation");

json to_json(const LogEntry& e);
LogEntry log_entry_from_json(const json& j, const std::string& where = "entry");

json to_json(const ScenarioReport& r);
ScenarioReport report_from_json(const json& j);

ScenarioSpec scenario_from_json(const json& j);
/// Parses scenario text. Syntax errors are reported with their byte offset.
ScenarioSpec parse_scenario(std::string_view text);
ScenarioSpec load_scenario(const std::string& path);

/// Event-log file: newline-delimited JSON. The first line is a header, then
/// one line per log entry, then a trailer holding the final host state.
void write_log(std::ostream& out, const ScenarioReport& report);

struct RecordedLog {
  std::string scenario;
  std::uint64_t seed = 0;
  EventLog log;
  HostState final_state;
};

RecordedLog read_log(std::istream& in);

}  // namespace selfguard::io
