#include "selfguard/engine.hpp"

#include <algorithm>
#include <set>

#include "selfguard/errors.hpp"

namespace selfguard {

namespace {

struct GuardRuntime {
  const GuardStrategy* config = nullptr;
  Schedule schedule;
  bool activated = false;
  Tick activated_at = 0;
  std::uint64_t runs = 0;
  std::size_t seen = 0;  // log index up to which events were observed
  bool host_lost = false;

  bool preemptive() const { return config->trigger.mode == Trigger::Mode::Preemptive; }

  bool due(Tick t) const {
    if (!activated || t < activated_at) return false;
    if (config->deactivate_at && t >= *config->deactivate_at) return false;
    if (schedule.iterations && runs >= *schedule.iterations) return false;
    const Tick since = t - activated_at;
    return since >= schedule.phase && (since - schedule.phase) % schedule.poll_period == 0;
  }
};

std::optional<ProcessId> lineage_root(const GuardStrategy& g, const HostState& host) {
  std::optional<ProcessId> pid = g.host_process;
  if (!pid && g.kind == GuardKind::ProcessRandomizer) pid = std::get<ProcessRef>(g.targets.front()).pid;
  if (!pid) return std::nullopt;
  auto it = host.processes.find(*pid);
  return it == host.processes.end() ? pid : std::optional(it->second.lineage);
}

class Run {
 public:
  explicit Run(const ScenarioSpec& spec) : spec_(spec), host_(build_host(spec.host)), names_(spec.seed) {
    guards_.reserve(spec.guards.size());
    for (const auto& g : spec.guards) guards_.push_back(GuardRuntime{&g, g.schedule});
  }

  ScenarioReport execute() {
    ScenarioReport report;
    report.scenario = spec_.name;
    report.seed = spec_.seed;
    report.run_length = spec_.run_length;

    activate_triggered(0);
    report.pretest = check(0, Phase::PreTest);

    std::vector<bool> in_state;
    for (std::size_t i = 0; i < spec_.protected_attributes.size(); ++i) {
      report.attributes.push_back({spec_.protected_attributes[i].attribute, {}, 0, {}});
      in_state.push_back(report.pretest[i].pass);
    }

    for (Tick t = 0; t < spec_.run_length; ++t) {
      advance_tick(host_, t);
      if (t > 0) activate_triggered(t);
      const HostState snapshot = host_;
      const std::size_t horizon = log_.entries.size();

      for (auto& g : guards_) {
        if (g.preemptive()) run_guard(g, t, Phase::Preempt, snapshot, horizon);
      }
      run_attackers(t);
      run_rules(t);
      for (auto& g : guards_) {
        if (!g.preemptive()) run_guard(g, t, Phase::Guard, snapshot, horizon);
      }
      sample(t, report.attributes, in_state);
    }

    report.posttest = check(spec_.run_length - 1, Phase::PostTest);
    const auto passed = std::count_if(report.posttest.begin(), report.posttest.end(), [](auto& r) { return r.pass; });
    report.control_score =
        report.posttest.empty() ? 1.0 : static_cast<double>(passed) / static_cast<double>(report.posttest.size());
    report.control = control_from_score(report.control_score, spec_.control_threshold);
    report.risk = assess_risk(report.control);
    report.guard_defeats = std::move(defeats_);
    report.log = std::move(log_);
    report.final_state = std::move(host_);
    return report;
  }

 private:
  void record(Tick t, Phase phase, decltype(LogEntry::detail) detail) {
    log_.entries.push_back(LogEntry{t, phase, std::move(detail)});
  }

  MutationRecord::Result apply(Tick t, Phase phase, const Mutation& m) {
    MutationRecord rec{m, MutationRecord::Result::Applied, {}};
    try {
      const auto outcome = apply_mutation(host_, m);
      rec.result = to_result(outcome.status);
      rec.reason = outcome.reason;
    } catch (const UnknownTarget& e) {
      rec.result = MutationRecord::Result::Failed;
      rec.reason = e.what();
    } catch (const InvalidMutation& e) {
      rec.result = MutationRecord::Result::Failed;
      rec.reason = e.what();
    }
    const auto result = rec.result;
    record(t, phase, std::move(rec));
    return result;
  }

  void defeat(GuardRuntime& g, Tick t, const std::string& reason) {
    record(t, g.preemptive() ? Phase::Preempt : Phase::Guard, GuardFailureRecord{g.config->guard_id, reason});
    const bool known = std::any_of(defeats_.begin(), defeats_.end(), [&](const GuardDefeat& d) {
      return d.guard_id == g.config->guard_id && d.reason == reason;
    });
    if (!known) defeats_.push_back({g.config->guard_id, t, reason});
  }

  void activate(GuardRuntime& g, Tick effective, const std::string& rule_id, Tick log_tick, Phase phase) {
    g.activated = true;
    g.activated_at = effective;
    record(log_tick, phase, ActivationRecord{g.config->guard_id, rule_id, effective});
  }

  void activate_triggered(Tick t) {
    for (auto& g : guards_) {
      if (g.activated) continue;
      const auto& trig = g.config->trigger;
      const bool now = (trig.mode == Trigger::Mode::Preemptive && t == 0) ||
                       (trig.mode == Trigger::Mode::Manual && trig.tick == t);
      if (now) activate(g, t, {}, t, Phase::Setup);
    }
  }

  std::vector<AttributeResult> check(Tick t, Phase phase) {
    std::vector<AttributeResult> out;
    for (const auto& pa : spec_.protected_attributes) {
      const auto observed = query_attribute(host_, pa.attribute);
      const bool pass = observed == pa.desired;
      out.push_back({pa.attribute, pa.desired, observed, pass});
      record(t, phase, CheckRecord{pa.attribute, pa.desired, observed, pass});
    }
    return out;
  }

  void run_guard(GuardRuntime& g, Tick t, Phase phase, const HostState& snapshot, std::size_t horizon) {
    if (!g.due(t)) return;
    if (auto root = lineage_root(*g.config, host_)) {
      if (!current_incarnation(host_, *root)) {
        if (!g.host_lost) {
          g.host_lost = true;
          defeat(g, t, "host process terminated");
        }
        return;
      }
    }
    ++g.runs;
    const std::size_t from = std::min(g.seen, horizon);
    g.seen = horizon;
    GuardObservation obs{t, std::span<const LogEntry>(log_.entries).subspan(from, horizon - from),
                         HostView(Actor::Organization, snapshot)};
    std::vector<Mutation> muts;
    try {
      muts = guard_step(*g.config, obs, names_);
    } catch (const UnknownTarget& e) {
      defeat(g, t, e.what());
      return;
    }
    // A guard's batch is a sequence (copy, spawn, exit); stop at the first
    // step the host refuses.
    for (const auto& m : muts) {
      const auto result = apply(t, phase, m);
      if (result == MutationRecord::Result::Blocked || result == MutationRecord::Result::Failed) break;
    }
  }

  void run_attackers(Tick t) {
    for (const auto& script : spec_.attackers) {
      if (script.process) {
        auto it = host_.processes.find(*script.process);
        if (it == host_.processes.end() || !it->second.alive) continue;
      }
      // Each step sees what earlier steps in the same tick already did.
      for (const auto& step : script.steps) {
        if (!step_fires(script, step, t)) continue;
        const auto view = visible_view(host_, Actor::Malware);
        for (const auto& m : execute_vector(step.vector, view)) apply(t, Phase::Attack, m);
      }
    }
  }

  void run_rules(Tick t) {
    if (spec_.rulebook.rules.empty()) return;
    std::set<std::string> active;
    for (const auto& g : guards_) {
      if (g.activated) active.insert(g.config->guard_id);
    }
    Tick widest = 1;
    for (const auto& r : spec_.rulebook.rules) widest = std::max(widest, r.condition.window);
    const Tick oldest = t + 1 >= widest ? t + 1 - widest : 0;
    auto first = std::lower_bound(log_.entries.begin(), log_.entries.end(), oldest,
                                  [](const LogEntry& e, Tick tick) { return e.tick < tick; });
    const std::span<const LogEntry> window(first, log_.entries.end());

    for (const auto& a : evaluate_rules(spec_.rulebook, window, t, active)) {
      auto it = std::find_if(guards_.begin(), guards_.end(),
                             [&](const GuardRuntime& g) { return g.config->guard_id == a.guard_id; });
      if (it == guards_.end()) continue;
      if (a.overrides.poll_period) it->schedule.poll_period = *a.overrides.poll_period;
      if (a.overrides.phase) it->schedule.phase = *a.overrides.phase;
      if (a.overrides.iterations) it->schedule.iterations = a.overrides.iterations;
      if (it->schedule.phase >= it->schedule.poll_period) it->schedule.phase %= it->schedule.poll_period;
      activate(*it, a.immediate ? t : t + 1, a.rule_id, t, Phase::Rule);
    }
  }

  void sample(Tick t, std::vector<AttributeHistory>& histories, std::vector<bool>& in_state) {
    for (std::size_t i = 0; i < spec_.protected_attributes.size(); ++i) {
      const auto& pa = spec_.protected_attributes[i];
      const bool ok = query_attribute(host_, pa.attribute) == pa.desired;
      auto& h = histories[i];
      h.in_desired_state.push_back(ok);
      if (!ok) ++h.downtime_ticks;
      if (in_state[i] && !ok) h.restorations.push_back({t, std::nullopt});
      if (!in_state[i] && ok && !h.restorations.empty() && !h.restorations.back().restored_tick) {
        h.restorations.back().restored_tick = t;
      }
      in_state[i] = ok;
    }
  }

  const ScenarioSpec& spec_;
  HostState host_;
  NameGenerator names_;
  std::vector<GuardRuntime> guards_;
  EventLog log_;
  std::vector<GuardDefeat> defeats_;
};

}  // namespace

void validate(const ScenarioSpec& spec) {
  if (spec.run_length < 1) throw SpecError("run length must be >= 1");
  if (!(spec.control_threshold >= 0.0 && spec.control_threshold <= 1.0)) {
    throw SpecError("control threshold must lie in [0, 1]");
  }
  const HostState host = build_host(spec.host);
  const HostView full(Actor::Organization, host);

  std::set<std::string> guard_ids;
  for (const auto& g : spec.guards) {
    validate(g);
    if (!guard_ids.insert(g.guard_id).second) throw SpecError("duplicate guard id '" + g.guard_id + "'");
    const std::string where = "guard '" + g.guard_id + "': ";
    if (g.host_process && !host.processes.contains(*g.host_process)) {
      throw SpecError(where + "unknown host process " + std::to_string(g.host_process->value));
    }
    for (const auto& t : g.targets) {
      const bool creatable = g.kind == GuardKind::RegistrySentinel;
      if (!creatable && !full.contains(t)) throw SpecError(where + "unknown target " + format_ref(t));
    }
    if (g.kind == GuardKind::RegistrySentinel && !std::get<SentinelParams>(g.params).desired) {
      for (const auto& t : g.targets) {
        auto it = host.registry.find(std::get<RegistryRef>(t).path);
        if (it == host.registry.end() || !it->second.desired_value) {
          throw SpecError(where + "no desired value for " + format_ref(t));
        }
      }
    }
    if (g.kind == GuardKind::RedundantStartup) {
      for (const auto& e : std::get<RedundantStartupParams>(g.params).entries) {
        if (!host.files.contains(e.target)) throw SpecError(where + "unknown startup target file '" + e.target + "'");
      }
    }
  }

  for (const auto& a : spec.attackers) {
    validate(a);
    if (a.process && !host.processes.contains(*a.process)) {
      throw SpecError("attacker '" + a.name + "': unknown process " + std::to_string(a.process->value));
    }
  }

  validate(spec.rulebook, guard_ids);

  for (const auto& pa : spec.protected_attributes) {
    try {
      (void)query_attribute(host, pa.attribute);
    } catch (const UnknownTarget&) {
      throw SpecError("protected attribute " + format_ref(pa.attribute) + " does not resolve");
    }
  }
}

ScenarioReport run_scenario(const ScenarioSpec& spec) {
  validate(spec);
  return Run(spec).execute();
}

bool ScenarioReport::pretest_passed() const {
  return std::all_of(pretest.begin(), pretest.end(), [](const auto& r) { return r.pass; });
}

bool ScenarioReport::posttest_passed() const {
  return std::all_of(posttest.begin(), posttest.end(), [](const auto& r) { return r.pass; });
}

std::uint64_t ScenarioReport::total_downtime() const {
  std::uint64_t n = 0;
  for (const auto& a : attributes) n += a.downtime_ticks;
  return n;
}

HostState replay(const EventLog& log, const HostSpec& host_spec) {
  HostState host = build_host(host_spec);
  for (std::size_t i = 0; i < log.entries.size(); ++i) {
    const auto& e = log.entries[i];
    if (e.tick < host.tick) throw ReplayDivergence("entry " + std::to_string(i) + ": tick goes backwards");
    host.tick = e.tick;
    const auto* rec = e.mutation();
    if (!rec) continue;

    MutationRecord::Result got = MutationRecord::Result::Failed;
    try {
      got = to_result(apply_mutation(host, rec->mutation).status);
    } catch (const UnknownTarget&) {
    } catch (const InvalidMutation&) {
    }
    if (got != rec->result) {
      throw ReplayDivergence("entry " + std::to_string(i) + " (" + std::string(to_string(rec->mutation.kind)) + " " +
                             format_ref(rec->mutation.target) + "): recorded " + std::string(to_string(rec->result)) +
                             ", replayed " + std::string(to_string(got)));
    }
  }
  return host;
}

}  // namespace selfguard
