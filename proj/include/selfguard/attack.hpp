#pragma once

// CAPEC-mapped attack vectors and the scripted attacker.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "selfguard/host.hpp"

namespace selfguard {

enum class VectorKind {
  DisableGuardLogic,    // CAPEC-56
  ManipulateRegistry,   // CAPEC-203
  TerminateExecutable,  // CAPEC-17
  DisableSupportTool,
  RemoveStartupEntry,
  DeleteFile,
};

/// Scenario-file identifier, e.g. "capec-56-disable-guard-logic".
std::string_view vector_id(VectorKind k);
VectorKind parse_vector_id(std::string_view id);

struct VectorInfo {
  VectorKind kind;
  std::string_view id;
  std::string_view capec;  // empty when the vector has no CAPEC number of its own
  std::string_view summary;
};

/// Every vector in catalog order.
const std::vector<VectorInfo>& vector_catalog();

struct ProcessMatcher {
  enum class Mode { ByExactName, ByNamePrefix, ByImagePath };
  Mode mode = Mode::ByExactName;
  /// For ByImagePath, a pattern ending in '/' or '\\' matches every image
  /// directly inside that directory; otherwise the full path must match.
  std::string pattern;
  bool operator==(const ProcessMatcher&) const = default;

  bool matches(const ProcessEntry& p) const;
};

std::string_view to_string(ProcessMatcher::Mode m);
ProcessMatcher::Mode parse_matcher_mode(std::string_view s);

struct RegistryManipulation {
  KeyPath key;
  /// Value to write; nullopt means delete the key.
  std::optional<Scalar> value;
  bool operator==(const RegistryManipulation&) const = default;
};

struct AttackVector {
  VectorKind kind = VectorKind::DisableGuardLogic;
  /// ServiceId, ToolId, EntryId or FilePath for the single-target vectors.
  using Params = std::variant<std::string, RegistryManipulation, ProcessMatcher>;
  Params params;
  bool operator==(const AttackVector&) const = default;

  static AttackVector disable_guard_logic(ServiceId service);
  static AttackVector manipulate_registry(KeyPath key, Scalar value);
  static AttackVector delete_registry_key(KeyPath key);
  static AttackVector terminate_executable(ProcessMatcher matcher);
  static AttackVector disable_support_tool(ToolId tool);
  static AttackVector remove_startup_entry(EntryId entry);
  static AttackVector delete_file(FilePath path);
};

/// Params alternative matches the kind and names a non-empty target.
bool well_formed(const AttackVector& v);

struct ScriptStep {
  Tick tick = 0;
  AttackVector vector;
  bool operator==(const ScriptStep&) const = default;
};

struct AttackScript {
  std::string name;
  std::vector<ScriptStep> steps;  // sorted by tick
  /// When set, every step also fires at tick + k * repeat for k >= 1.
  std::optional<Tick> repeat;
  /// When set, the script only runs while this malware process is alive.
  std::optional<ProcessId> process;
  bool operator==(const AttackScript&) const = default;
};

/// Throws SpecError if steps are unsorted, repeat is zero, or a vector is
/// malformed.
void validate(const AttackScript& script);

/// Mutations one vector produces against the malware-visible view. Targets
/// absent from the view yield an empty list.
std::vector<Mutation> execute_vector(const AttackVector& vector, const HostView& view);

/// True if the step is scheduled at the tick, honoring the script's repeat.
bool step_fires(const AttackScript& script, const ScriptStep& step, Tick tick);

/// True if any step of the script is scheduled at the tick.
bool fires_at(const AttackScript& script, Tick tick);

/// Concatenated mutations of every vector scheduled at the tick, in step
/// order.
std::vector<Mutation> attacker_step(const AttackScript& script, Tick tick, const HostView& view);

}  // namespace selfguard
