#include "selfguard/report.hpp"

#include <cstdio>
#include <sstream>

#include "selfguard/errors.hpp"
#include "selfguard/serialization.hpp"

namespace selfguard {

namespace {

std::string verdict(bool pass) { return pass ? "PASS" : "FAIL"; }

std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

void render_checks(std::ostream& out, std::string_view label, const std::vector<AttributeResult>& results,
                   bool passed) {
  out << label << ": " << verdict(passed) << '\n';
  for (const auto& r : results) {
    out << "  " << pad(format_ref(r.attribute), 32) << " desired=" << pad(to_string(r.desired), 10)
        << " observed=" << pad(to_string(r.observed), 10) << ' ' << verdict(r.pass) << '\n';
  }
}

std::string render_human(const ScenarioReport& rep) {
  std::ostringstream out;
  out << "scenario: " << (rep.scenario.empty() ? "(unnamed)" : rep.scenario) << " (seed " << rep.seed << ", "
      << rep.run_length << " ticks)\n";
  render_checks(out, "pre-test", rep.pretest, rep.pretest_passed());
  render_checks(out, "post-test", rep.posttest, rep.posttest_passed());

  out << "downtime: " << rep.total_downtime() << '\n';
  for (const auto& h : rep.attributes) {
    out << "  " << pad(format_ref(h.attribute), 32) << ' ' << h.downtime_ticks << '\n';
  }

  out << "restoration latencies:";
  bool any = false;
  for (const auto& h : rep.attributes) any = any || !h.restorations.empty();
  if (!any) {
    out << " none\n";
  } else {
    out << "\n  " << pad("attribute", 32) << ' ' << pad("attack", 8) << pad("restored", 10) << "latency\n";
    for (const auto& h : rep.attributes) {
      for (const auto& r : h.restorations) {
        out << "  " << pad(format_ref(h.attribute), 32) << ' ' << pad(std::to_string(r.attack_tick), 8);
        if (r.restored_tick) {
          out << pad(std::to_string(*r.restored_tick), 10) << (*r.restored_tick - r.attack_tick) << '\n';
        } else {
          out << pad("never", 10) << "-\n";
        }
      }
    }
  }

  out << "guard defeats:";
  if (rep.guard_defeats.empty()) {
    out << " none\n";
  } else {
    out << '\n';
    for (const auto& d : rep.guard_defeats) {
      out << "  " << d.guard_id << " at tick " << d.tick << ": " << d.reason << '\n';
    }
  }

  out << "control score: " << fixed3(rep.control_score) << " (" << to_string(rep.control.holder) << ", threshold "
      << fixed3(rep.control.threshold) << ")\n";
  out << "risk:\n";
  auto cell = [&](std::string_view name, const RiskCell& c) {
    out << "  " << pad(std::string(name), 16) << pad(std::string(to_string(c.level)), 10) << c.narrative << '\n';
  };
  cell("confidentiality", rep.risk.confidentiality);
  cell("integrity", rep.risk.integrity);
  cell("availability", rep.risk.availability);
  return out.str();
}

}  // namespace

ReportFormat parse_report_format(std::string_view s) {
  if (s == "human") return ReportFormat::Human;
  if (s == "json") return ReportFormat::Json;
  throw SpecError("unknown report format '" + std::string(s) + "' (expected human or json)");
}

std::string render_report(const ScenarioReport& report, ReportFormat format) {
  if (format == ReportFormat::Json) return io::to_json(report).dump(2) + "\n";
  return render_human(report);
}

}  // namespace selfguard
