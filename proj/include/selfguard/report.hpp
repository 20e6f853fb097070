#pragma once

#include <string>
#include <string_view>

#include "selfguard/engine.hpp"

namespace selfguard {

enum class ReportFormat { Human, Json };

ReportFormat parse_report_format(std::string_view s);

/// Json output has sorted keys and parses back (io::report_from_json) to an
/// equal report. Human output summarizes verdicts, downtime, restoration
/// latencies, defeats, control score and risk.
std::string render_report(const ScenarioReport& report, ReportFormat format);

}  // namespace selfguard
