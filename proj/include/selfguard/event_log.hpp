#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "selfguard/host.hpp"

namespace selfguard {

/// Phases in the order they occur within a tick. Setup and PreTest precede
/// tick 0's loop phases; PostTest follows the final tick.
enum class Phase { Setup, PreTest, Preempt, Attack, Rule, Guard, PostTest };

std::string_view to_string(Phase p);
Phase parse_phase(std::string_view s);

/// A mutation and what the host did with it. Failed marks a mutation the host
/// rejected with an error (unknown target or malformed).
struct MutationRecord {
  enum class Result { Applied, Blocked, NoOp, Failed };
  Mutation mutation;
  Result result = Result::Applied;
  std::string reason;
  bool operator==(const MutationRecord&) const = default;
};

std::string_view to_string(MutationRecord::Result r);
MutationRecord::Result parse_result(std::string_view s);
MutationRecord::Result to_result(MutationOutcome::Status s);

/// Pre- or post-test probe of one protected attribute.
struct CheckRecord {
  AttributeRef attribute;
  AttributeValue desired;
  AttributeValue observed;
  bool pass = false;
  bool operator==(const CheckRecord&) const = default;
};

/// A guard became active. rule_id is empty for trigger-driven activation.
struct ActivationRecord {
  std::string guard_id;
  std::string rule_id;
  Tick effective_tick = 0;
  bool operator==(const ActivationRecord&) const = default;
};

/// A guard could not act: its host process is gone or its target no longer
/// resolves.
struct GuardFailureRecord {
  std::string guard_id;
  std::string reason;
  bool operator==(const GuardFailureRecord&) const = default;
};

struct LogEntry {
  Tick tick = 0;
  Phase phase = Phase::Setup;
  std::variant<MutationRecord, CheckRecord, ActivationRecord, GuardFailureRecord> detail;
  bool operator==(const LogEntry&) const = default;

  const MutationRecord* mutation() const { return std::get_if<MutationRecord>(&detail); }
};

struct EventLog {
  std::vector<LogEntry> entries;
  bool operator==(const EventLog&) const = default;
};

}  // namespace selfguard
