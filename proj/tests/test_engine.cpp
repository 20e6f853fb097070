#include <doctest.h>

#include <algorithm>

#include "selfguard/engine.hpp"
#include "selfguard/errors.hpp"
#include "selfguard/serialization.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace selfguard;
using namespace selfguard::test;

namespace {

ScenarioSpec load(const std::string& name) { return io::load_scenario(std::string(SCENARIO_DIR) + "/" + name); }

const std::vector<std::string> kBundled = {"experiment1.json",         "experiment2.json", "experiment3.json",
                                           "experiment3-noguard.json", "residual-risk.json", "layered-defense.json"};

}  // namespace

TEST_CASE("experiment 1: restore after the service is stopped") {
  const auto spec = load("experiment1.json");
  const auto r = run_scenario(spec);
  CHECK(r.pretest_passed());
  CHECK(r.posttest_passed());
  REQUIRE(r.attributes.size() == 1);
  CHECK(r.attributes[0].restorations == std::vector<Restoration>{{3, 4}});
  CHECK(r.control.holder == ControlHolder::OrganizationMoreControl);
}

TEST_CASE("no attack: clean run") {
  ScenarioSpec s;
  s.host = small_host();
  s.run_length = 5;
  s.guards.push_back(guard_of("r", GuardKind::ServiceRestorer, {ServiceRef{"firewall"}}));
  s.protected_attributes = {{ServiceRef{"firewall"}, Scalar{true}}, {RegistryRef{kFlagKey}, Scalar{true}}};
  const auto r = run_scenario(s);
  CHECK(r.pretest_passed());
  CHECK(r.posttest_passed());
  CHECK(r.total_downtime() == 0);
  CHECK(std::none_of(r.log.entries.begin(), r.log.entries.end(), [](const LogEntry& e) { return e.phase == Phase::Attack; }));
  CHECK(r.control_score == 1.0);
}

TEST_CASE("experiment 3 without the randomizer: guard process is killed") {
  const auto spec = load("experiment3-noguard.json");
  const auto r = run_scenario(spec);
  CHECK(r.pretest_passed());
  CHECK_FALSE(r.posttest_passed());
  CHECK(query_attribute(r.final_state, ProcessRef{kGuardPid}) == AttributeValue{Scalar{false}});
  CHECK(live_in_lineage(r.final_state, kGuardPid) == 0);
  CHECK(r.control.holder == ControlHolder::MalwareMoreControl);
}

TEST_CASE("experiment 3 with the randomizer: exactly one descendant at every tick") {
  const auto spec = load("experiment3.json");
  const auto r = run_scenario(spec);
  CHECK(r.posttest_passed());
  std::vector<std::size_t> live;
  walk_log(r, spec.host, [](const HostState&, const LogEntry&) {},
           [&](const HostState& h, Tick) { live.push_back(live_in_lineage(h, kGuardPid)); });
  CHECK(live == std::vector<std::size_t>(spec.run_length, 1));
  // The attack at tick 2 found nothing to kill.
  CHECK(std::none_of(r.log.entries.begin(), r.log.entries.end(), [](const LogEntry& e) { return e.phase == Phase::Attack; }));
}

TEST_CASE("control score is the fraction of attributes passing post-test") {
  ScenarioSpec s;
  s.host = small_host();
  s.run_length = 3;
  s.attackers.push_back(script_at(1, AttackVector::disable_guard_logic("firewall")));
  s.protected_attributes = {{ServiceRef{"firewall"}, Scalar{true}},
                            {RegistryRef{kFlagKey}, Scalar{true}},
                            {StartupRef{"guardapp-run"}, Scalar{true}},
                            {ToolRef{"taskmgr"}, Scalar{std::string("enabled")}}};
  auto r = run_scenario(s);
  CHECK(r.control_score == doctest::Approx(0.75));
  CHECK(r.control.holder == ControlHolder::OrganizationMoreControl);
  s.control_threshold = 0.8;
  r = run_scenario(s);
  CHECK(r.control.holder == ControlHolder::MalwareMoreControl);
  CHECK(r.risk.availability.level == RiskLevel::Elevated);
}

TEST_CASE("replay reproduces every bundled scenario") {
  for (const auto& name : kBundled) {
    CAPTURE(name);
    const auto spec = load(name);
    const auto r = run_scenario(spec);
    CHECK(replay(r.log, spec.host) == r.final_state);
    CHECK(downtime_oracle(spec, r) == [&] {
      std::vector<std::uint64_t> d;
      for (const auto& h : r.attributes) d.push_back(h.downtime_ticks);
      return d;
    }());
    CHECK(soundness_violations(spec, r).empty());
  }
}

TEST_CASE("replay of an empty log over an empty host") {
  CHECK(replay(EventLog{}, HostSpec{}) == HostState{});
}

TEST_CASE("replay detects a tampered outcome") {
  const auto spec = load("experiment2.json");
  const auto r = run_scenario(spec);
  std::size_t tampered = 0;
  for (std::size_t i = 0; i < r.log.entries.size(); ++i) {
    if (!r.log.entries[i].mutation()) continue;
    for (auto flip : {MutationRecord::Result::Applied, MutationRecord::Result::Blocked, MutationRecord::Result::NoOp,
                      MutationRecord::Result::Failed}) {
      auto log = r.log;
      auto& rec = std::get<MutationRecord>(log.entries[i].detail);
      if (rec.result == flip) continue;
      rec.result = flip;
      CHECK_THROWS_AS(replay(log, spec.host), ReplayDivergence);
      ++tampered;
    }
  }
  CHECK(tampered > 0);

  auto backwards = r.log;
  std::swap(backwards.entries.front(), backwards.entries.back());
  CHECK_THROWS_AS(replay(backwards, spec.host), ReplayDivergence);
}

TEST_CASE("seed determinism") {
  auto spec = load("experiment3.json");
  const auto a = run_scenario(spec);
  const auto b = run_scenario(spec);
  CHECK(a == b);
  spec.seed += 1;
  const auto c = run_scenario(spec);
  CHECK(c.final_state != a.final_state);  // a different random name
  CHECK(c.posttest_passed());
}

TEST_CASE("phase order within every tick") {
  for (const auto& name : kBundled) {
    CAPTURE(name);
    const auto r = run_scenario(load(name));
    for (std::size_t i = 1; i < r.log.entries.size(); ++i) {
      const auto& p = r.log.entries[i - 1];
      const auto& e = r.log.entries[i];
      CHECK((p.tick < e.tick || (p.tick == e.tick && p.phase <= e.phase)));
    }
    CHECK(r.log.entries.back().phase == Phase::PostTest);
  }
}

TEST_CASE("scenario validation") {
  ScenarioSpec s;
  s.host = small_host();
  s.run_length = 0;
  CHECK_THROWS_AS(run_scenario(s), SpecError);
  s.run_length = 3;
  s.protected_attributes = {{ServiceRef{"nope"}, Scalar{true}}};
  CHECK_THROWS_AS(run_scenario(s), SpecError);
  s.protected_attributes.clear();
  s.guards = {guard_of("g", GuardKind::ServiceRestorer, {ServiceRef{"firewall"}}),
              guard_of("g", GuardKind::ServiceRestorer, {ServiceRef{"firewall"}})};
  CHECK_THROWS_AS(run_scenario(s), SpecError);
  s.guards = {guard_of("g", GuardKind::ServiceRestorer, {ServiceRef{"nope"}})};
  CHECK_THROWS_AS(run_scenario(s), SpecError);
  s.guards.clear();
  s.control_threshold = 1.5;
  CHECK_THROWS_AS(run_scenario(s), SpecError);
  s.control_threshold = 0.5;
  CHECK_NOTHROW(run_scenario(s));
}

TEST_CASE("a startup entry pins its target file against deletion") {
  ScenarioSpec s;
  s.host = small_host();
  s.run_length = 4;
  s.attackers.push_back(script_at(1, AttackVector::delete_file(kGuardConfig)));
  auto g = guard_of("rs", GuardKind::RedundantStartup, {}, Trigger::manual(0), {},
                    RedundantStartupParams{{{"cfg-run", kGuardConfig}}});
  s.guards.push_back(g);
  const auto r = run_scenario(s);
  const auto* del = [&]() -> const MutationRecord* {
    for (const auto& e : r.log.entries) {
      if (const auto* m = e.mutation(); m && m->mutation.kind == MutationKind::DeleteFile) return m;
    }
    return nullptr;
  }();
  REQUIRE(del);
  CHECK(del->result == MutationRecord::Result::Blocked);
  CHECK(r.guard_defeats.empty());
}

TEST_CASE("a startup template whose file vanished before the first run is a defeat") {
  ScenarioSpec s;
  s.host = small_host();
  s.run_length = 4;
  s.attackers.push_back(script_at(0, AttackVector::delete_file(kGuardConfig)));
  s.guards.push_back(guard_of("rs", GuardKind::RedundantStartup, {}, Trigger::manual(1), {},
                              RedundantStartupParams{{{"cfg-run", kGuardConfig}}}));
  const auto r = run_scenario(s);
  REQUIRE_FALSE(r.guard_defeats.empty());
  CHECK(r.guard_defeats[0].guard_id == "rs");
  CHECK(r.guard_defeats[0].tick == 1);
  CHECK(std::any_of(r.log.entries.begin(), r.log.entries.end(),
                    [](const LogEntry& e) { return std::holds_alternative<GuardFailureRecord>(e.detail); }));
}
