#pragma once

// Deterministic tick loop.
//
// A run verifies each protected attribute (pre-test), then for every tick t:
//   1. preemptive guards act on the state as of the end of t-1;
//   2. attack scripts act on the malware-visible view;
//   3. rules inspect the tick's attack events and activate guards;
//   4. the remaining active guards act on the state as of the end of t-1;
//   5. every protected attribute is sampled for downtime accounting.
// After the final tick each attribute is verified again (post-test). The run
// is a pure function of the ScenarioSpec, seed included.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "selfguard/attack.hpp"
#include "selfguard/event_log.hpp"
#include "selfguard/guard.hpp"
#include "selfguard/host.hpp"
#include "selfguard/risk.hpp"
#include "selfguard/rules.hpp"

namespace selfguard {

struct ProtectedAttribute {
  AttributeRef attribute;
  AttributeValue desired;
  bool operator==(const ProtectedAttribute&) const = default;
};

struct ScenarioSpec {
  std::string name;
  HostSpec host;
  std::vector<AttackScript> attackers;
  std::vector<GuardStrategy> guards;
  Rulebook rulebook;
  std::vector<ProtectedAttribute> protected_attributes;
  Tick run_length = 1;
  std::uint64_t seed = 0;
  double control_threshold = kDefaultControlThreshold;
  bool operator==(const ScenarioSpec&) const = default;
};

/// Full consistency check of a scenario. Throws SpecError.
void validate(const ScenarioSpec& spec);

struct AttributeResult {
  AttributeRef attribute;
  AttributeValue desired;
  AttributeValue observed;
  bool pass = false;
  bool operator==(const AttributeResult&) const = default;
};

/// An excursion from the desired state: the tick the attribute was first
/// sampled out of state and the tick it was first sampled back in (unset if
/// it never recovered).
struct Restoration {
  Tick attack_tick = 0;
  std::optional<Tick> restored_tick;
  bool operator==(const Restoration&) const = default;
};

struct AttributeHistory {
  AttributeRef attribute;
  std::vector<Restoration> restorations;
  std::uint64_t downtime_ticks = 0;
  /// End-of-tick samples: true when the attribute was in its desired state.
  std::vector<bool> in_desired_state;
  bool operator==(const AttributeHistory&) const = default;
};

struct GuardDefeat {
  std::string guard_id;
  Tick tick = 0;
  std::string reason;
  bool operator==(const GuardDefeat&) const = default;
};

struct ScenarioReport {
  std::string scenario;
  std::uint64_t seed = 0;
  Tick run_length = 0;
  std::vector<AttributeResult> pretest;
  std::vector<AttributeResult> posttest;
  std::vector<AttributeHistory> attributes;
  std::vector<GuardDefeat> guard_defeats;
  double control_score = 1.0;
  ControlState control;
  RiskAssessment risk;
  EventLog log;
  HostState final_state;
  bool operator==(const ScenarioReport&) const = default;

  bool pretest_passed() const;
  bool posttest_passed() const;
  std::uint64_t total_downtime() const;
};

ScenarioReport run_scenario(const ScenarioSpec& spec);

/// Re-applies every mutation in the log to a fresh host and checks each one
/// reproduces its recorded result. Throws ReplayDivergence on the first
/// mismatch; returns the final state otherwise.
HostState replay(const EventLog& log, const HostSpec& host_spec);

}  // namespace selfguard
