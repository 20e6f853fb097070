#include "selfguard/event_log.hpp"

#include <array>

#include "selfguard/errors.hpp"

namespace selfguard {

namespace {

constexpr std::array<std::pair<Phase, std::string_view>, 7> kPhaseNames{{
    {Phase::Setup, "setup"},
    {Phase::PreTest, "pre-test"},
    {Phase::Preempt, "preempt"},
    {Phase::Attack, "attack"},
    {Phase::Rule, "rule"},
    {Phase::Guard, "guard"},
    {Phase::PostTest, "post-test"},
}};

constexpr std::array<std::pair<MutationRecord::Result, std::string_view>, 4> kResultNames{{
    {MutationRecord::Result::Applied, "applied"},
    {MutationRecord::Result::Blocked, "blocked"},
    {MutationRecord::Result::NoOp, "noop"},
    {MutationRecord::Result::Failed, "failed"},
}};

}  // namespace

std::string_view to_string(Phase p) {
  for (const auto& [phase, name] : kPhaseNames) {
    if (phase == p) return name;
  }
  return "?";
}

Phase parse_phase(std::string_view s) {
  for (const auto& [phase, name] : kPhaseNames) {
    if (name == s) return phase;
  }
  throw SpecError("unknown phase '" + std::string(s) + "'");
}

std::string_view to_string(MutationRecord::Result r) {
  for (const auto& [result, name] : kResultNames) {
    if (result == r) return name;
  }
  return "?";
}

MutationRecord::Result parse_result(std::string_view s) {
  for (const auto& [result, name] : kResultNames) {
    if (name == s) return result;
  }
  throw SpecError("unknown mutation result '" + std::string(s) + "'");
}

MutationRecord::Result to_result(MutationOutcome::Status s) {
  switch (s) {
    case MutationOutcome::Status::Applied: return MutationRecord::Result::Applied;
    case MutationOutcome::Status::Blocked: return MutationRecord::Result::Blocked;
    case MutationOutcome::Status::NoOp: return MutationRecord::Result::NoOp;
  }
  return MutationRecord::Result::Failed;
}

}  // namespace selfguard
