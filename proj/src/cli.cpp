#include "selfguard/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "selfguard/errors.hpp"
#include "selfguard/report.hpp"
#include "selfguard/serialization.hpp"

namespace selfguard {

namespace {

struct RunOptions {
  std::vector<std::string> scenarios;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> ticks;
  std::string format;
  std::string out_path;
  std::string log_path;
  unsigned jobs = 1;
};

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err) {
  ReportFormat format = ReportFormat::Human;
  try {
    format = parse_report_format(opts.format);
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSpecError;
  }
  if (!opts.log_path.empty() && opts.scenarios.size() != 1) {
    err << "error: --log requires exactly one scenario\n";
    return kExitSpecError;
  }

  std::vector<ScenarioSpec> specs;
  for (const auto& path : opts.scenarios) {
    try {
      auto spec = io::load_scenario(path);
      if (opts.seed) spec.seed = *opts.seed;
      if (opts.ticks) spec.run_length = *opts.ticks;
      validate(spec);
      specs.push_back(std::move(spec));
    } catch (const SpecError& e) {
      err << "error: " << e.what() << '\n';
      return kExitSpecError;
    }
  }

  // Runs share nothing, so they can proceed on independent threads; output
  // order follows the command line.
  std::vector<ScenarioReport> reports(specs.size());
  const std::size_t jobs = std::max<std::size_t>(1, opts.jobs);
  for (std::size_t begin = 0; begin < specs.size(); begin += jobs) {
    const std::size_t end = std::min(specs.size(), begin + jobs);
    std::vector<std::future<ScenarioReport>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred,
                                 [&spec = specs[i]] { return run_scenario(spec); }));
    }
    for (std::size_t i = begin; i < end; ++i) reports[i] = batch[i - begin].get();
  }

  std::ofstream file;
  std::ostream* sink = &out;
  if (!opts.out_path.empty()) {
    file.open(opts.out_path);
    if (!file) {
      err << "error: cannot write '" << opts.out_path << "'\n";
      return kExitSpecError;
    }
    sink = &file;
  }
  for (const auto& r : reports) *sink << render_report(r, format);

  if (!opts.log_path.empty()) {
    std::ofstream log(opts.log_path);
    if (!log) {
      err << "error: cannot write '" << opts.log_path << "'\n";
      return kExitSpecError;
    }
    io::write_log(log, reports.front());
  }

  const bool all_pass = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.posttest_passed(); });
  return all_pass ? kExitOk : kExitDefeat;
}

void list_attacks(std::ostream& out) {
  out << pad("vector", 32) << pad("capec", 11) << "description\n";
  for (const auto& v : vector_catalog()) {
    out << pad(std::string(v.id), 32) << pad(v.capec.empty() ? "-" : std::string(v.capec), 11) << v.summary << '\n';
  }
}

void list_guards(std::ostream& out) {
  out << pad("guard", 24) << pad("posture", 9) << pad("scope", 10) << "reused technique / behavior\n";
  for (const auto& g : guard_catalog()) {
    const auto c = classify(g.kind);
    out << pad(std::string(g.id), 24) << pad(std::string(to_string(c.posture)), 9)
        << pad(std::string(to_string(c.scope)), 10) << g.technique << ": " << g.behavior << '\n';
  }
}

int list_rules(const std::string& path, std::ostream& out, std::ostream& err) {
  ScenarioSpec spec;
  try {
    spec = io::load_scenario(path);
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSpecError;
  }
  out << pad("priority", 10) << pad("rule", 20) << pad("activates", 20) << "condition\n";
  for (const Rule* r : evaluation_order(spec.rulebook)) {
    std::string vectors;
    for (const auto& v : r->condition.vectors) vectors += (vectors.empty() ? "" : ",") + v;
    out << pad(std::to_string(r->priority), 10) << pad(r->rule_id, 20) << pad(r->guard_id, 20)
        << "vectors=[" << (vectors.empty() ? "*" : vectors) << "] target=" << r->condition.target
        << " count>=" << r->condition.count << " window=" << r->condition.window
        << (r->immediate ? " immediate" : "") << '\n';
  }
  return kExitOk;
}

int cmd_replay(const std::string& log_path, const std::string& scenario_path, std::ostream& out,
               std::ostream& err) {
  ScenarioSpec spec;
  io::RecordedLog recorded;
  try {
    spec = io::load_scenario(scenario_path);
    std::ifstream in(log_path);
    if (!in) throw SpecError("cannot open event log '" + log_path + "'");
    recorded = io::read_log(in);
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSpecError;
  }
  try {
    const HostState final_state = replay(recorded.log, spec.host);
    if (final_state != recorded.final_state) {
      err << "replay diverged: final state differs from the recorded final state\n";
      return kExitDefeat;
    }
  } catch (const ReplayDivergence& e) {
    err << "replay diverged: " << e.what() << '\n';
    return kExitDefeat;
  } catch (const SpecError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSpecError;
  }
  out << "replay ok: " << recorded.log.entries.size() << " entries reproduce the recorded final state\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Attack/defense simulator for self-protecting security tools", "selfguard"};
  app.require_subcommand(1);

  RunOptions run_opts;
  if (const char* env = std::getenv(kReportFormatEnv); env && *env) {
    run_opts.format = env;
  } else {
    run_opts.format = "human";
  }
  auto* run = app.add_subcommand("run", "Run one or more scenario files and report the outcome");
  run->add_option("scenarios", run_opts.scenarios, "Scenario file(s)")->required();
  run->add_option("--seed", run_opts.seed, "Override the scenario seed");
  run->add_option("--ticks", run_opts.ticks, "Override the run length")->check(CLI::PositiveNumber);
  run->add_option("--report-format", run_opts.format, "human or json (default from SELFGUARD_REPORT_FORMAT)");
  run->add_option("--out", run_opts.out_path, "Write the report here instead of standard output");
  run->add_option("--log", run_opts.log_path, "Write the event log (newline-delimited JSON) here");
  run->add_option("--jobs", run_opts.jobs, "Run up to N scenarios in parallel")->check(CLI::PositiveNumber);

  app.add_subcommand("list-attacks", "List the attack vector catalog");
  app.add_subcommand("list-guards", "List guard kinds with their classification");
  std::string rules_path;
  auto* rules = app.add_subcommand("list-rules", "Print a scenario's rulebook in evaluation order");
  rules->add_option("scenario", rules_path, "Scenario file")->required();

  std::string log_path;
  std::string scenario_path;
  auto* rep = app.add_subcommand("replay", "Replay an event log against its scenario's host");
  rep->add_option("log", log_path, "Event log file")->required();
  rep->add_option("scenario", scenario_path, "Scenario file")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSpecError;
  }

  if (run->parsed()) return cmd_run(run_opts, out, err);
  if (app.got_subcommand("list-attacks")) {
    list_attacks(out);
    return kExitOk;
  }
  if (app.got_subcommand("list-guards")) {
    list_guards(out);
    return kExitOk;
  }
  if (rules->parsed()) return list_rules(rules_path, out, err);
  if (rep->parsed()) return cmd_replay(log_path, scenario_path, out, err);
  return kExitSpecError;
}

}  // namespace selfguard
