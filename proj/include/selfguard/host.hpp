#pragma once

// Simulated host state and the single mutation choke-point.
//
// Every change an attacker or guard makes to a HostState goes through
// apply_mutation(), which enforces locks and reports whether the change was
// applied, blocked, or a no-op. The engine records each outcome in the event
// log, which makes runs auditable and replayable.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace selfguard {

struct ProcessId {
  std::uint32_t value = 0;
  auto operator<=>(const ProcessId&) const = default;
};

using ServiceId = std::string;
using KeyPath = std::string;
using FilePath = std::string;
using EntryId = std::string;
using ToolId = std::string;
using Tick = std::uint64_t;

/// Registry values are flat scalars.
using Scalar = std::variant<bool, std::int64_t, std::string>;

/// Result of probing an attribute; nullopt means the attribute is absent
/// (for example a deleted registry key).
using AttributeValue = std::optional<Scalar>;

enum class Actor { Organization, Malware };
enum class ToolStatus { Enabled, Disabled };

std::string_view to_string(Actor a);
std::string_view to_string(ToolStatus s);
std::string to_string(const Scalar& s);
std::string to_string(const AttributeValue& v);

// ---------------------------------------------------------------------------
// Attribute references

struct ServiceRef {
  ServiceId id;
  auto operator<=>(const ServiceRef&) const = default;
};
struct RegistryRef {
  KeyPath path;
  auto operator<=>(const RegistryRef&) const = default;
};
struct ProcessRef {
  ProcessId pid;
  auto operator<=>(const ProcessRef&) const = default;
};
/// Aliveness of any process descended from (or equal to) the root pid.
/// Follows a guard across self-renames.
struct LineageRef {
  ProcessId root;
  auto operator<=>(const LineageRef&) const = default;
};
struct FileRef {
  FilePath path;
  auto operator<=>(const FileRef&) const = default;
};
struct StartupRef {
  EntryId id;
  auto operator<=>(const StartupRef&) const = default;
};
struct ToolRef {
  ToolId id;
  auto operator<=>(const ToolRef&) const = default;
};

using AttributeRef = std::variant<ServiceRef, RegistryRef, ProcessRef, LineageRef, FileRef,
                                  StartupRef, ToolRef>;

/// Textual form "<class>:<name>", e.g. "service:firewall", "process:100".
std::string format_ref(const AttributeRef& ref);
/// Inverse of format_ref. Throws SpecError on malformed input.
AttributeRef parse_ref(std::string_view text);

// ---------------------------------------------------------------------------
// Host entities

struct ProcessEntry {
  ProcessId pid;
  std::string name;
  FilePath image_path;
  bool hidden = false;
  bool locked = false;
  Actor owner = Actor::Organization;
  bool alive = true;
  /// Root of the spawn lineage; equals pid for processes declared at setup.
  ProcessId lineage;
  bool operator==(const ProcessEntry&) const = default;
};

struct ServiceEntry {
  ServiceId service_id;
  bool running = false;
  bool locked = false;
  bool desired_running = true;
  bool operator==(const ServiceEntry&) const = default;
};

struct RegistryKey {
  KeyPath path;
  std::optional<Scalar> value;
  bool exists = true;
  bool locked = false;
  std::optional<Scalar> desired_value;
  bool operator==(const RegistryKey&) const = default;
};

struct FileEntry {
  FilePath path;
  std::string content_id;
  bool hidden = false;
  bool locked = false;
  bool operator==(const FileEntry&) const = default;
};

struct StartupEntry {
  EntryId entry_id;
  FilePath target;
  bool locked = false;
  bool operator==(const StartupEntry&) const = default;
};

struct HostState {
  std::map<ProcessId, ProcessEntry> processes;
  std::map<ServiceId, ServiceEntry> services;
  std::map<KeyPath, RegistryKey> registry;
  std::map<FilePath, FileEntry> files;
  std::map<EntryId, StartupEntry> startup_entries;
  std::map<ToolId, ToolStatus> support_tools;
  Tick tick = 0;
  bool operator==(const HostState&) const = default;
};

/// Declarative host description as read from a scenario file. Vectors keep
/// declaration order so duplicates can be reported.
struct HostSpec {
  std::vector<ProcessEntry> processes;
  std::vector<ServiceEntry> services;
  std::vector<RegistryKey> registry;
  std::vector<FileEntry> files;
  std::vector<StartupEntry> startup_entries;
  std::vector<std::pair<ToolId, ToolStatus>> support_tools;
  bool operator==(const HostSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Mutations

enum class MutationKind {
  SetServiceRunning,
  SetRegistryValue,
  DeleteRegistryKey,
  CreateRegistryKey,
  KillProcess,
  SpawnProcess,
  RenameProcess,
  CopyFile,
  DeleteFile,
  AddStartupEntry,
  RemoveStartupEntry,
  SetToolStatus,
  SetHidden,
  SetLocked,
};

std::string_view to_string(MutationKind k);
MutationKind parse_mutation_kind(std::string_view s);

struct SpawnSpec {
  std::string name;
  FilePath image_path;
  bool hidden = false;
  bool locked = false;
  Actor owner = Actor::Organization;
  ProcessId lineage;
  bool operator==(const SpawnSpec&) const = default;
};

struct NoPayload {
  bool operator==(const NoPayload&) const = default;
};

/// One payload alternative per shape: flag (bool), registry value, new
/// process name or destination path (string), spawn description, tool status.
using Payload = std::variant<NoPayload, bool, Scalar, std::string, SpawnSpec, ToolStatus>;

enum class SourceKind { Setup, Attack, Guard };

struct Source {
  SourceKind kind = SourceKind::Setup;
  std::string id;  // vector id or guard id
  bool operator==(const Source&) const = default;

  static Source setup() { return {SourceKind::Setup, {}}; }
  static Source attack(std::string vector_id) { return {SourceKind::Attack, std::move(vector_id)}; }
  static Source guard(std::string guard_id) { return {SourceKind::Guard, std::move(guard_id)}; }
};

std::string format_source(const Source& s);
Source parse_source(std::string_view text);

struct Mutation {
  MutationKind kind;
  AttributeRef target;
  Payload payload;
  Actor actor = Actor::Organization;
  Source source;
  bool operator==(const Mutation&) const = default;

  static Mutation set_service_running(ServiceId id, bool running, Actor a, Source s);
  static Mutation set_registry_value(KeyPath path, Scalar value, Actor a, Source s);
  static Mutation delete_registry_key(KeyPath path, Actor a, Source s);
  static Mutation create_registry_key(KeyPath path, Actor a, Source s);
  static Mutation kill_process(ProcessId pid, Actor a, Source s);
  static Mutation spawn_process(ProcessId pid, SpawnSpec spec, Actor a, Source s);
  static Mutation rename_process(ProcessId pid, std::string name, Actor a, Source s);
  static Mutation copy_file(FilePath from, FilePath to, Actor a, Source s);
  static Mutation delete_file(FilePath path, Actor a, Source s);
  static Mutation add_startup_entry(EntryId id, FilePath target, Actor a, Source s);
  static Mutation remove_startup_entry(EntryId id, Actor a, Source s);
  static Mutation set_tool_status(ToolId id, ToolStatus status, Actor a, Source s);
  static Mutation set_hidden(AttributeRef target, bool hidden, Actor a, Source s);
  static Mutation set_locked(AttributeRef target, bool locked, Actor a, Source s);
};

/// True when the payload alternative is the one required by the kind and the
/// target class is one the kind can act on.
bool well_formed(const Mutation& m);

/// True for kinds a lock protects against (kill, delete, remove, set, rename).
bool is_destructive(MutationKind k);

struct MutationOutcome {
  enum class Status { Applied, Blocked, NoOp };
  Status status = Status::Applied;
  std::string reason;
  bool operator==(const MutationOutcome&) const = default;

  static MutationOutcome applied() { return {Status::Applied, {}}; }
  static MutationOutcome noop() { return {Status::NoOp, {}}; }
  static MutationOutcome blocked(std::string why) { return {Status::Blocked, std::move(why)}; }
};

std::string_view to_string(MutationOutcome::Status s);

// ---------------------------------------------------------------------------
// Operations

/// Validates the spec and materialises a host at tick 0. Throws SpecError on
/// duplicate ids or dangling file references.
HostState build_host(const HostSpec& spec);

/// The choke-point. Leaves the host untouched unless the outcome is Applied.
/// Throws UnknownTarget if the target does not resolve and InvalidMutation if
/// the mutation is not well formed.
MutationOutcome apply_mutation(HostState& host, const Mutation& m);

/// Read-only probe. Services, processes and lineages read as booleans,
/// registry keys as their value (absent when deleted), files and startup
/// entries as presence, tools as "enabled"/"disabled".
AttributeValue query_attribute(const HostState& host, const AttributeRef& ref);

/// Advances the simulation clock. Throws std::logic_error if time would go
/// backwards.
void advance_tick(HostState& host, Tick tick);

/// What an actor can see of the host. Malware does not see hidden entries or
/// dead processes; the organization sees everything.
class HostView {
 public:
  HostView(Actor observer, HostState state) : observer_(observer), state_(std::move(state)) {}
  Actor observer() const { return observer_; }
  const HostState& state() const { return state_; }
  bool contains(const AttributeRef& ref) const;

 private:
  Actor observer_;
  HostState state_;
};

HostView visible_view(const HostState& host, Actor observer);

/// Checks the cross-reference invariants (image paths and startup targets
/// resolve). Used by build_host and by tests after arbitrary runs.
std::vector<std::string> invariant_violations(const HostState& host);

/// Directory part of a path ('/' or '\\' separated), including the trailing
/// separator; empty if the path has none.
std::string_view parent_directory(std::string_view path);

}  // namespace selfguard
