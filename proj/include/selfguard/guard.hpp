#pragma once

// Guard strategies: defensive reuse of malware resilience techniques.
//
// Every guard is a pure step function from its configuration and an
// observation of the host (as of the end of the previous tick) to a list of
// organization-actor mutations. Scheduling, activation and any per-run state
// live in the engine.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "selfguard/attack.hpp"
#include "selfguard/event_log.hpp"
#include "selfguard/host.hpp"
#include "selfguard/random.hpp"

namespace selfguard {

enum class GuardKind {
  ServiceRestorer,
  RegistrySentinel,
  ProcessRandomizer,
  RedundantStartup,
  AdversaryTerminator,
  AttributeLocker,
  Hider,
  SupportToolDisabler,
};

enum class Posture { Passive, Active };
enum class Scope { Generic, Targeted };

struct Classification {
  Posture posture;
  Scope scope;
  bool operator==(const Classification&) const = default;
};

std::string_view to_string(GuardKind k);
std::string_view to_string(Posture p);
std::string_view to_string(Scope s);
GuardKind parse_guard_kind(std::string_view s);

/// Fixed taxonomy table: hiding and locking are passive, everything else
/// active; only the adversary terminator is targeted.
Classification classify(GuardKind k);

struct GuardKindInfo {
  GuardKind kind;
  std::string_view id;
  std::string_view technique;  // the malware behavior being reused
  std::string_view behavior;   // what the guard does
};

const std::vector<GuardKindInfo>& guard_catalog();

struct Trigger {
  enum class Mode { Preemptive, Manual, AutomaticOnEvent };
  Mode mode = Mode::Manual;
  Tick tick = 0;  // activation tick for Manual
  bool operator==(const Trigger&) const = default;

  static Trigger preemptive() { return {Mode::Preemptive, 0}; }
  static Trigger manual(Tick t) { return {Mode::Manual, t}; }
  static Trigger automatic() { return {Mode::AutomaticOnEvent, 0}; }
};

std::string_view to_string(Trigger::Mode m);
Trigger::Mode parse_trigger_mode(std::string_view s);

/// When an active guard runs: at activation + phase + k * poll_period, for at
/// most `iterations` runs (unbounded when unset).
struct Schedule {
  Tick poll_period = 1;
  Tick phase = 0;
  std::optional<std::uint64_t> iterations;
  bool operator==(const Schedule&) const = default;
};

struct SentinelParams {
  /// Falls back to the key's declared desired value when unset.
  std::optional<Scalar> desired;
  bool operator==(const SentinelParams&) const = default;
};

struct StartupTemplate {
  EntryId entry_id;
  FilePath target;
  bool operator==(const StartupTemplate&) const = default;
};

struct RedundantStartupParams {
  std::vector<StartupTemplate> entries;
  bool operator==(const RedundantStartupParams&) const = default;
};

struct TerminatorParams {
  std::vector<ProcessMatcher> blocklist;
  bool operator==(const TerminatorParams&) const = default;
};

using GuardParams = std::variant<std::monostate, SentinelParams, RedundantStartupParams, TerminatorParams>;

struct GuardStrategy {
  std::string guard_id;
  GuardKind kind = GuardKind::ServiceRestorer;
  std::vector<AttributeRef> targets;
  Trigger trigger;
  Schedule schedule;
  GuardParams params;
  /// Lineage the guard runs in; the guard cannot act once it has no live
  /// process. The randomizer always runs in its own target's lineage.
  std::optional<ProcessId> host_process;
  std::optional<Tick> deactivate_at;
  bool operator==(const GuardStrategy&) const = default;

  Classification classification() const { return classify(kind); }
};

/// Checks target classes and params shape against the kind. Throws SpecError.
void validate(const GuardStrategy& g);

struct GuardObservation {
  Tick tick = 0;
  /// Log entries since the guard last ran, up to the end of the previous tick.
  std::span<const LogEntry> events;
  HostView view;
};

/// Live member of a process lineage (the newest, if several are alive).
std::optional<ProcessId> current_incarnation(const HostState& host, ProcessId root);

// Per-kind behaviors. Each returns organization-actor mutations sourced from
// the guard, and nothing when the target is already in its desired state.

std::vector<Mutation> service_restorer_step(const std::string& guard_id, const ServiceId& target,
                                            const GuardObservation& obs);

/// Key absent: create then set. Wrong value: set. Otherwise nothing.
std::vector<Mutation> registry_sentinel_step(const std::string& guard_id, const KeyPath& target,
                                             const Scalar& desired, const GuardObservation& obs);

/// Copies the image to a fresh random name in the same directory, spawns the
/// copy with the same flags and lineage, then exits the original. Throws
/// UnknownTarget if the process is already dead.
std::vector<Mutation> process_randomizer_step(const std::string& guard_id, ProcessId self,
                                              const GuardObservation& obs, NameGenerator& names);

std::vector<Mutation> redundant_startup_step(const std::string& guard_id,
                                             std::span<const StartupTemplate> templates,
                                             const GuardObservation& obs);

/// Kills live malware processes matching the blocklist. Organization
/// processes are never killed even when they match.
std::vector<Mutation> adversary_terminator_step(const std::string& guard_id,
                                                std::span<const ProcessMatcher> blocklist,
                                                const GuardObservation& obs);

std::vector<Mutation> locker_step(const std::string& guard_id, std::span<const AttributeRef> targets,
                                  const GuardObservation& obs);

std::vector<Mutation> hider_step(const std::string& guard_id, std::span<const AttributeRef> targets,
                                 const GuardObservation& obs);

std::vector<Mutation> support_tool_disabler_step(const std::string& guard_id,
                                                 std::span<const AttributeRef> targets,
                                                 const GuardObservation& obs);

/// Dispatches on kind.
std::vector<Mutation> guard_step(const GuardStrategy& guard, const GuardObservation& obs, NameGenerator& names);

}  // namespace selfguard
