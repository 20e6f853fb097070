// Acceptance suite: one PASS/FAIL line per criterion; exit status is the
// number of failing criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "selfguard/cli.hpp"
#include "selfguard/engine.hpp"
#include "selfguard/report.hpp"
#include "selfguard/serialization.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/random_scenario.hpp"

using namespace selfguard;
using namespace selfguard::test;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      failures.push_back(what);
    }
  }
};

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string fmt_ms(double ms) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f ms", ms);
  return buf;
}

ScenarioSpec load(const std::string& name) { return io::load_scenario(std::string(SCENARIO_DIR) + "/" + name); }

std::vector<const MutationRecord*> attack_records(const ScenarioReport& r, Tick t) {
  std::vector<const MutationRecord*> out;
  for (const auto& e : r.log.entries) {
    if (e.tick == t && e.phase == Phase::Attack) out.push_back(e.mutation());
  }
  return out;
}

// Experiment 1: firewall stopped at tick 3, restorer active.
Outcome ac1() {
  Outcome o;
  const auto start = Clock::now();
  const auto spec = load("experiment1.json");
  const auto r = run_scenario(spec);
  const double ms = ms_since(start);
  o.expect(r.pretest_passed(), "pre-test passes");
  const auto& samples = r.attributes.at(0).in_desired_state;
  for (Tick t = 0; t < samples.size(); ++t) {
    const bool expect = t != 3;
    o.expect(samples[t] == expect, "firewall running=" + std::string(expect ? "true" : "false") + " at end of tick " +
                                       std::to_string(t));
  }
  o.expect(r.attributes[0].restorations == std::vector<Restoration>{{3, 4}}, "one restoration, 3 -> 4");
  o.expect(r.posttest_passed(), "post-test passes");
  o.expect(ms < 1000.0, "runtime < 1 s");
  o.detail = "pre PASS, tick 3 running=false, tick 4+ running=true, post PASS, " + fmt_ms(ms);
  return o;
}

// Experiment 2: sentinel (period 2, 5 iterations) against a flip and a delete.
Outcome ac2() {
  Outcome o;
  const auto start = Clock::now();
  const auto full = load("experiment2.json");
  const Tick period = full.guards.at(0).schedule.poll_period;
  o.expect(period == 2 && full.guards[0].schedule.iterations == 5u, "sentinel period 2, 5 iterations");

  struct Variant {
    std::string name;
    std::vector<std::size_t> steps;
  };
  std::vector<std::string> parts;
  for (const Variant& v : {Variant{"flip", {0}}, Variant{"delete", {1}}, Variant{"flip+delete", {0, 1}}}) {
    auto spec = full;
    spec.attackers[0].steps.clear();
    for (auto i : v.steps) spec.attackers[0].steps.push_back(full.attackers[0].steps.at(i));
    const auto r = run_scenario(spec);
    const auto& rs = r.attributes.at(0).restorations;
    o.expect(rs.size() == v.steps.size(), v.name + ": one excursion per attack");
    for (const auto& x : rs) {
      o.expect(x.restored_tick && *x.restored_tick - x.attack_tick <= period,
               v.name + ": attack at " + std::to_string(x.attack_tick) + " restored within " + std::to_string(period));
      if (x.restored_tick) {
        parts.push_back(v.name + " " + std::to_string(x.attack_tick) + "->" + std::to_string(*x.restored_tick));
      }
    }
    o.expect(r.posttest_passed() && r.posttest[0].observed == AttributeValue{Scalar{true}}, v.name + ": post-test true");
    if (v.name == "delete") {
      std::vector<MutationKind> guard_kinds;
      for (const auto& e : r.log.entries) {
        if (const auto* m = e.mutation(); m && m->mutation.actor == Actor::Organization) guard_kinds.push_back(m->mutation.kind);
      }
      o.expect(guard_kinds == std::vector{MutationKind::CreateRegistryKey, MutationKind::SetRegistryValue},
               "delete: sentinel recreates then sets");
    }
  }
  const double ms = ms_since(start);
  o.expect(ms < 1000.0, "runtime < 1 s");
  std::string joined;
  for (const auto& p : parts) joined += (joined.empty() ? "" : ", ") + p;
  o.detail = joined + " (period 2), post true, " + fmt_ms(ms);
  return o;
}

// Experiment 3: exact-name kill without and with the randomizer.
Outcome ac3() {
  Outcome o;
  std::ostringstream out, err;
  const int unguarded = run_cli({"run", std::string(SCENARIO_DIR) + "/experiment3-noguard.json"}, out, err);
  const int guarded = run_cli({"run", std::string(SCENARIO_DIR) + "/experiment3.json"}, out, err);
  o.expect(unguarded == kExitDefeat, "phase 1 exits 1");
  o.expect(guarded == kExitOk, "phase 2 exits 0");

  const auto r1 = run_scenario(load("experiment3-noguard.json"));
  const auto kills = attack_records(r1, 2);
  o.expect(kills.size() == 1 && kills[0]->result == MutationRecord::Result::Applied, "phase 1: kill applied");
  o.expect(live_in_lineage(r1.final_state, kGuardPid) == 0, "phase 1: guard dead");

  const auto spec2 = load("experiment3.json");
  const auto r2 = run_scenario(spec2);
  o.expect(attack_records(r2, 2).empty(), "phase 2: attack misses");
  const auto live = live_in_lineage(r2.final_state, kGuardPid);
  o.expect(live == 1, "phase 2: exactly one live descendant");
  o.detail = "phase 1 exit " + std::to_string(unguarded) + ", phase 2 exit " + std::to_string(guarded) +
             ", live descendants " + std::to_string(live);
  return o;
}

// Restoration latency sweep over kind x attack tick x period x phase.
Outcome ac4() {
  Outcome o;
  const auto start = Clock::now();
  std::size_t runs = 0;
  std::size_t violations = 0;
  enum class Kind { Restorer, SentinelFlip, SentinelDelete, Startup };
  for (Kind kind : {Kind::Restorer, Kind::SentinelFlip, Kind::SentinelDelete, Kind::Startup}) {
    for (Tick p = 1; p <= 5; ++p) {
      for (Tick phase = 0; phase < p; ++phase) {
        for (Tick t = 0; t <= 20; ++t) {
          ScenarioSpec s;
          s.host = small_host();
          s.run_length = t + p + 6;
          const Schedule sched{p, phase, std::nullopt};
          AttributeRef attr;
          switch (kind) {
            case Kind::Restorer:
              s.attackers.push_back(script_at(t, AttackVector::disable_guard_logic("firewall")));
              s.guards.push_back(guard_of("g", GuardKind::ServiceRestorer, {ServiceRef{"firewall"}}, Trigger::manual(0), sched));
              attr = ServiceRef{"firewall"};
              break;
            case Kind::SentinelFlip:
            case Kind::SentinelDelete:
              s.attackers.push_back(script_at(t, kind == Kind::SentinelFlip
                                                     ? AttackVector::manipulate_registry(kFlagKey, Scalar{false})
                                                     : AttackVector::delete_registry_key(kFlagKey)));
              s.guards.push_back(guard_of("g", GuardKind::RegistrySentinel, {RegistryRef{kFlagKey}}, Trigger::manual(0),
                                          sched, SentinelParams{Scalar{true}}));
              attr = RegistryRef{kFlagKey};
              break;
            case Kind::Startup:
              s.attackers.push_back(script_at(t, AttackVector::remove_startup_entry("guardapp-run")));
              s.guards.push_back(guard_of("g", GuardKind::RedundantStartup, {}, Trigger::manual(0), sched,
                                          RedundantStartupParams{{{"guardapp-run", kGuardImage}}}));
              attr = StartupRef{"guardapp-run"};
              break;
          }
          s.protected_attributes = {{attr, query_attribute(build_host(s.host), attr)}};
          const auto r = run_scenario(s);
          ++runs;
          const auto& samples = r.attributes[0].in_desired_state;
          bool ok = r.attributes[0].restorations.size() == 1;
          for (Tick k = t + p + 1; k < samples.size(); ++k) ok = ok && samples[k];
          if (!ok) ++violations;
        }
      }
    }
  }
  const double ms = ms_since(start);
  o.expect(violations == 0, "zero violations");
  o.expect(ms < 30000.0, "runtime < 30 s");
  o.detail = std::to_string(runs) + " runs, " + std::to_string(violations) + " violations, " + fmt_ms(ms);
  return o;
}

// Determinism and replay over generated scenarios.
Outcome ac5() {
  Outcome o;
  ScenarioGenerator gen(20240501);
  std::size_t divergences = 0;
  std::size_t entries = 0;
  for (int i = 0; i < 100; ++i) {
    const auto spec = gen.next();
    const auto a = run_scenario(spec);
    const auto b = run_scenario(spec);
    if (render_report(a, ReportFormat::Json) != render_report(b, ReportFormat::Json)) ++divergences;
    std::stringstream log;
    io::write_log(log, a);
    const auto rec = io::read_log(log);
    try {
      if (replay(rec.log, spec.host) != rec.final_state || rec.final_state != a.final_state) ++divergences;
    } catch (const std::exception&) {
      ++divergences;
    }
    entries += a.log.entries.size();
  }
  o.expect(divergences == 0, "zero divergences");
  o.detail = "100 scenarios x 2 runs, " + std::to_string(entries) + " log entries, " + std::to_string(divergences) +
             " divergences";
  return o;
}

void set_flags(HostSpec& h, const AttributeRef& ref, bool lock, bool hide) {
  for (auto& x : h.services) x.locked |= lock && ref == AttributeRef{ServiceRef{x.service_id}};
  for (auto& x : h.registry) x.locked |= lock && ref == AttributeRef{RegistryRef{x.path}};
  for (auto& x : h.startup_entries) x.locked |= lock && ref == AttributeRef{StartupRef{x.entry_id}};
  for (auto& x : h.processes) {
    const bool hit = ref == AttributeRef{ProcessRef{x.pid}};
    x.locked |= lock && hit;
    x.hidden |= hide && hit;
  }
  for (auto& x : h.files) {
    const bool hit = ref == AttributeRef{FileRef{x.path}};
    x.locked |= lock && hit;
    x.hidden |= hide && hit;
  }
}

// Exhaustive lock x visibility x destructive vector enumeration.
Outcome ac6() {
  Outcome o;
  struct Target {
    std::string name;
    AttackVector vector;
    AttributeRef ref;
    bool lockable;
    bool hideable;
  };
  const std::vector<Target> targets = {
      {"disable-guard-logic", AttackVector::disable_guard_logic("firewall"), ServiceRef{"firewall"}, true, false},
      {"manipulate-registry", AttackVector::manipulate_registry(kFlagKey, Scalar{false}), RegistryRef{kFlagKey}, true, false},
      {"delete-registry-key", AttackVector::delete_registry_key(kFlagKey), RegistryRef{kFlagKey}, true, false},
      {"terminate-exact-name", AttackVector::terminate_executable({ProcessMatcher::Mode::ByExactName, "guardapp.exe"}),
       ProcessRef{kGuardPid}, true, true},
      {"terminate-name-prefix", AttackVector::terminate_executable({ProcessMatcher::Mode::ByNamePrefix, "guard"}),
       ProcessRef{kGuardPid}, true, true},
      {"terminate-image-dir", AttackVector::terminate_executable({ProcessMatcher::Mode::ByImagePath, kGuardDir}),
       ProcessRef{kGuardPid}, true, true},
      {"disable-support-tool", AttackVector::disable_support_tool("taskmgr"), ToolRef{"taskmgr"}, false, false},
      {"remove-startup-entry", AttackVector::remove_startup_entry("guardapp-run"), StartupRef{"guardapp-run"}, true, false},
      {"delete-file", AttackVector::delete_file(kGuardConfig), FileRef{kGuardConfig}, true, true},
  };
  std::size_t combos = 0;
  std::size_t applicable = 0;
  std::size_t violations = 0;
  for (const auto& tg : targets) {
    for (bool locked : {false, true}) {
      for (bool hidden : {false, true}) {
        ++combos;
        const bool lock = locked && tg.lockable;
        const bool hide = hidden && tg.hideable;
        if (locked == lock && hidden == hide) ++applicable;
        ScenarioSpec s;
        s.host = small_host();
        s.run_length = 3;
        set_flags(s.host, tg.ref, lock, hide);
        s.attackers.push_back(script_at(1, tg.vector));
        const auto r = run_scenario(s);
        const auto bad = soundness_violations(s, r);
        violations += bad.size();
        const auto hits = attack_records(r, 1);
        if (hide && !hits.empty()) ++violations;
        for (const auto* m : hits) {
          if (lock && m->result == MutationRecord::Result::Applied) ++violations;
          if (!lock && !hide && m->result != MutationRecord::Result::Applied) ++violations;  // control case
        }
        if (!lock && !hide && hits.empty()) ++violations;
      }
    }
  }
  o.expect(violations == 0, "zero violations");
  o.detail = std::to_string(combos) + " combinations (" + std::to_string(applicable) + " distinct), " +
             std::to_string(violations) + " violations";
  return o;
}

// Post-randomization, directory matching still finds the guard.
Outcome ac7() {
  Outcome o;
  const auto spec = load("residual-risk.json");
  const auto r = run_scenario(spec);
  const auto by_name = attack_records(r, 2);
  const auto by_dir = attack_records(r, 4);
  o.expect(by_name.empty(), "exact-name attack at tick 2 misses");
  bool dir_hit = false;
  std::string victim;
  for (const auto* m : by_dir) {
    const auto pid = std::get<ProcessRef>(m->mutation.target).pid;
    const auto& p = r.final_state.processes.at(pid);
    if (m->result == MutationRecord::Result::Applied && p.lineage == kGuardPid && pid != kGuardPid) {
      dir_hit = true;
      victim = p.name;
    }
  }
  o.expect(dir_hit, "image-path attack at tick 4 kills the renamed guard");
  o.expect(live_in_lineage(r.final_state, kGuardPid) == 0, "guard lineage dead at end");
  o.detail = "exact-name missed, image-path killed " + victim + " in the same run";
  return o;
}

Outcome ac8() {
  Outcome o;
  const auto org = assess_risk(control_from_score(1.0));
  const auto mal = assess_risk(control_from_score(0.0));
  o.expect(org.confidentiality.narrative == "Reduces data leakage Protects confidentiality", "org confidentiality");
  o.expect(org.integrity.narrative == "Improves security posture Improves reliability of IT assets", "org integrity");
  o.expect(org.availability.narrative == "Improves resiliency Enhances business continuity", "org availability");
  o.expect(mal.confidentiality.narrative == "Increases data leakage Losses confidentiality", "malware confidentiality");
  o.expect(mal.integrity.narrative == "Degrades security posture Degrades reliability of IT assets", "malware integrity");
  o.expect(mal.availability.narrative == "Degrades resiliency Affects business continuity", "malware availability");
  for (const auto* c : {&org.confidentiality, &org.integrity, &org.availability}) {
    o.expect(c->level == RiskLevel::Reduced, "org level reduced");
  }
  for (const auto* c : {&mal.confidentiality, &mal.integrity, &mal.availability}) {
    o.expect(c->level == RiskLevel::Elevated, "malware level elevated");
  }
  o.detail = "2 control states x 3 cells verbatim";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1 experiment 1 firewall restore", ac1},
      {"AC2 experiment 2 registry sentinel", ac2},
      {"AC3 experiment 3 process randomizer", ac3},
      {"AC4 restoration latency sweep", ac4},
      {"AC5 determinism and replay", ac5},
      {"AC6 lock and visibility soundness", ac6},
      {"AC7 residual risk of same-directory copies", ac7},
      {"AC8 Table 1 narratives", ac8},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.expect(false, std::string("exception: ") + e.what());
    }
    std::printf("%s  %-44s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    for (const auto& f : o.failures) std::printf("      not met: %s\n", f.c_str());
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed;
}
