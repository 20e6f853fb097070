#pragma once

// Rule-based countermeasure selection: attack events observed in a sliding
// window activate guards.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "selfguard/event_log.hpp"

namespace selfguard {

/// Matches attack-sourced mutation events only. An event counts when its
/// vector id is listed (or the list is empty), its target reference matches
/// the glob, and it happened within the last `window` ticks.
struct RuleCondition {
  std::vector<std::string> vectors;
  std::string target = "*";
  std::uint64_t count = 1;
  Tick window = 1;
  bool operator==(const RuleCondition&) const = default;
};

struct ScheduleOverride {
  std::optional<Tick> poll_period;
  std::optional<Tick> phase;
  std::optional<std::uint64_t> iterations;
  bool operator==(const ScheduleOverride&) const = default;
};

struct Rule {
  std::string rule_id;
  RuleCondition condition;
  std::string guard_id;
  ScheduleOverride overrides;
  std::int64_t priority = 0;
  /// Activated guard runs in the current tick's guard phase instead of the
  /// next tick.
  bool immediate = false;
  bool operator==(const Rule&) const = default;
};

struct Rulebook {
  std::vector<Rule> rules;
  bool operator==(const Rulebook&) const = default;
};

struct Activation {
  std::string rule_id;
  std::string guard_id;
  ScheduleOverride overrides;
  bool immediate = false;
  bool operator==(const Activation&) const = default;
};

/// Throws SpecError on duplicate rule ids, window or count of zero, or a
/// guard id not in `guard_ids`.
void validate(const Rulebook& book, const std::set<std::string>& guard_ids);

/// Rules in evaluation order: descending priority, declaration order on ties.
std::vector<const Rule*> evaluation_order(const Rulebook& book);

/// Shell-style glob with '*' and '?'.
bool glob_match(std::string_view pattern, std::string_view text);

std::uint64_t matching_events(const RuleCondition& cond, std::span<const LogEntry> events, Tick now);

/// One activation per guard whose first matching rule (in evaluation order)
/// holds, skipping guards already active.
std::vector<Activation> evaluate_rules(const Rulebook& book, std::span<const LogEntry> events, Tick now,
                                       const std::set<std::string>& active_guards);

}  // namespace selfguard
