#include "selfguard/host.hpp"

#include <array>
#include <set>
#include <stdexcept>
#include <utility>

#include "overloaded.hpp"
#include "selfguard/errors.hpp"

namespace selfguard {

namespace {

using detail::Overloaded;

constexpr std::array<std::pair<MutationKind, std::string_view>, 14> kKindNames{{
    {MutationKind::SetServiceRunning, "set-service-running"},
    {MutationKind::SetRegistryValue, "set-registry-value"},
    {MutationKind::DeleteRegistryKey, "delete-registry-key"},
    {MutationKind::CreateRegistryKey, "create-registry-key"},
    {MutationKind::KillProcess, "kill-process"},
    {MutationKind::SpawnProcess, "spawn-process"},
    {MutationKind::RenameProcess, "rename-process"},
    {MutationKind::CopyFile, "copy-file"},
    {MutationKind::DeleteFile, "delete-file"},
    {MutationKind::AddStartupEntry, "add-startup-entry"},
    {MutationKind::RemoveStartupEntry, "remove-startup-entry"},
    {MutationKind::SetToolStatus, "set-tool-status"},
    {MutationKind::SetHidden, "set-hidden"},
    {MutationKind::SetLocked, "set-locked"},
}};

[[noreturn]] void unknown(const AttributeRef& ref) {
  throw UnknownTarget("unknown target " + format_ref(ref));
}

bool blocks(bool locked, Actor actor) { return locked && actor == Actor::Malware; }

const MutationOutcome kLocked = MutationOutcome::blocked("locked");

bool file_in_use(const HostState& host, const FilePath& path) {
  for (const auto& [pid, p] : host.processes) {
    if (p.image_path == path) return true;
  }
  for (const auto& [id, e] : host.startup_entries) {
    if (e.target == path) return true;
  }
  return false;
}

MutationOutcome set_flag(bool& field, bool value, bool locked, Actor actor) {
  if (blocks(locked, actor)) return kLocked;
  if (field == value) return MutationOutcome::noop();
  field = value;
  return MutationOutcome::applied();
}

}  // namespace

std::string_view to_string(Actor a) { return a == Actor::Malware ? "malware" : "organization"; }

std::string_view to_string(ToolStatus s) { return s == ToolStatus::Enabled ? "enabled" : "disabled"; }

std::string to_string(const Scalar& s) {
  return std::visit(Overloaded{
                        [](bool b) -> std::string { return b ? "true" : "false"; },
                        [](std::int64_t i) { return std::to_string(i); },
                        [](const std::string& str) { return "\"" + str + "\""; },
                    },
                    s);
}

std::string to_string(const AttributeValue& v) { return v ? to_string(*v) : std::string("absent"); }

std::string_view to_string(MutationKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  throw std::logic_error("unnamed mutation kind");
}

MutationKind parse_mutation_kind(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == s) return kind;
  }
  throw SpecError("unknown mutation kind '" + std::string(s) + "'");
}

std::string_view to_string(MutationOutcome::Status s) {
  switch (s) {
    case MutationOutcome::Status::Applied: return "applied";
    case MutationOutcome::Status::Blocked: return "blocked";
    case MutationOutcome::Status::NoOp: return "noop";
  }
  return "?";
}

// ---------------------------------------------------------------------------

std::string format_ref(const AttributeRef& ref) {
  return std::visit(Overloaded{
                        [](const ServiceRef& r) { return "service:" + r.id; },
                        [](const RegistryRef& r) { return "registry:" + r.path; },
                        [](const ProcessRef& r) { return "process:" + std::to_string(r.pid.value); },
                        [](const LineageRef& r) { return "lineage:" + std::to_string(r.root.value); },
                        [](const FileRef& r) { return "file:" + r.path; },
                        [](const StartupRef& r) { return "startup:" + r.id; },
                        [](const ToolRef& r) { return "tool:" + r.id; },
                    },
                    ref);
}

namespace {

ProcessId parse_pid(std::string_view text, std::string_view whole) {
  std::uint64_t v = 0;
  if (text.empty() || text.size() > 10) {
    throw SpecError("bad process id in reference '" + std::string(whole) + "'");
  }
  for (char c : text) {
    if (c < '0' || c > '9') throw SpecError("bad process id in reference '" + std::string(whole) + "'");
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  if (v > 0xffffffffULL) throw SpecError("process id out of range in '" + std::string(whole) + "'");
  return ProcessId{static_cast<std::uint32_t>(v)};
}

}  // namespace

AttributeRef parse_ref(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos || colon + 1 == text.size()) {
    throw SpecError("malformed attribute reference '" + std::string(text) + "'");
  }
  const auto cls = text.substr(0, colon);
  const std::string name(text.substr(colon + 1));
  if (cls == "service") return ServiceRef{name};
  if (cls == "registry") return RegistryRef{name};
  if (cls == "process") return ProcessRef{parse_pid(name, text)};
  if (cls == "lineage") return LineageRef{parse_pid(name, text)};
  if (cls == "file") return FileRef{name};
  if (cls == "startup") return StartupRef{name};
  if (cls == "tool") return ToolRef{name};
  throw SpecError("unknown attribute class '" + std::string(cls) + "' in '" + std::string(text) + "'");
}

std::string format_source(const Source& s) {
  switch (s.kind) {
    case SourceKind::Setup: return "setup";
    case SourceKind::Attack: return "attack:" + s.id;
    case SourceKind::Guard: return "guard:" + s.id;
  }
  return "setup";
}

Source parse_source(std::string_view text) {
  if (text == "setup") return Source::setup();
  if (text.starts_with("attack:")) return Source::attack(std::string(text.substr(7)));
  if (text.starts_with("guard:")) return Source::guard(std::string(text.substr(6)));
  throw SpecError("malformed mutation source '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// Mutation factories

Mutation Mutation::set_service_running(ServiceId id, bool running, Actor a, Source s) {
  return {MutationKind::SetServiceRunning, ServiceRef{std::move(id)}, running, a, std::move(s)};
}
Mutation Mutation::set_registry_value(KeyPath path, Scalar value, Actor a, Source s) {
  return {MutationKind::SetRegistryValue, RegistryRef{std::move(path)}, std::move(value), a, std::move(s)};
}
Mutation Mutation::delete_registry_key(KeyPath path, Actor a, Source s) {
  return {MutationKind::DeleteRegistryKey, RegistryRef{std::move(path)}, NoPayload{}, a, std::move(s)};
}
Mutation Mutation::create_registry_key(KeyPath path, Actor a, Source s) {
  return {MutationKind::CreateRegistryKey, RegistryRef{std::move(path)}, NoPayload{}, a, std::move(s)};
}
Mutation Mutation::kill_process(ProcessId pid, Actor a, Source s) {
  return {MutationKind::KillProcess, ProcessRef{pid}, NoPayload{}, a, std::move(s)};
}
Mutation Mutation::spawn_process(ProcessId pid, SpawnSpec spec, Actor a, Source s) {
  return {MutationKind::SpawnProcess, ProcessRef{pid}, std::move(spec), a, std::move(s)};
}
Mutation Mutation::rename_process(ProcessId pid, std::string name, Actor a, Source s) {
  return {MutationKind::RenameProcess, ProcessRef{pid}, Payload{std::move(name)}, a, std::move(s)};
}
Mutation Mutation::copy_file(FilePath from, FilePath to, Actor a, Source s) {
  return {MutationKind::CopyFile, FileRef{std::move(from)}, Payload{std::move(to)}, a, std::move(s)};
}
Mutation Mutation::delete_file(FilePath path, Actor a, Source s) {
  return {MutationKind::DeleteFile, FileRef{std::move(path)}, NoPayload{}, a, std::move(s)};
}
Mutation Mutation::add_startup_entry(EntryId id, FilePath target, Actor a, Source s) {
  return {MutationKind::AddStartupEntry, StartupRef{std::move(id)}, Payload{std::move(target)}, a, std::move(s)};
}
Mutation Mutation::remove_startup_entry(EntryId id, Actor a, Source s) {
  return {MutationKind::RemoveStartupEntry, StartupRef{std::move(id)}, NoPayload{}, a, std::move(s)};
}
Mutation Mutation::set_tool_status(ToolId id, ToolStatus status, Actor a, Source s) {
  return {MutationKind::SetToolStatus, ToolRef{std::move(id)}, status, a, std::move(s)};
}
Mutation Mutation::set_hidden(AttributeRef target, bool hidden, Actor a, Source s) {
  return {MutationKind::SetHidden, std::move(target), hidden, a, std::move(s)};
}
Mutation Mutation::set_locked(AttributeRef target, bool locked, Actor a, Source s) {
  return {MutationKind::SetLocked, std::move(target), locked, a, std::move(s)};
}

bool well_formed(const Mutation& m) {
  const auto& t = m.target;
  const auto& p = m.payload;
  switch (m.kind) {
    case MutationKind::SetServiceRunning:
      return std::holds_alternative<ServiceRef>(t) && std::holds_alternative<bool>(p);
    case MutationKind::SetRegistryValue:
      return std::holds_alternative<RegistryRef>(t) && std::holds_alternative<Scalar>(p);
    case MutationKind::DeleteRegistryKey:
    case MutationKind::CreateRegistryKey:
      return std::holds_alternative<RegistryRef>(t) && std::holds_alternative<NoPayload>(p);
    case MutationKind::KillProcess:
      return std::holds_alternative<ProcessRef>(t) && std::holds_alternative<NoPayload>(p);
    case MutationKind::SpawnProcess:
      return std::holds_alternative<ProcessRef>(t) && std::holds_alternative<SpawnSpec>(p);
    case MutationKind::RenameProcess:
      return std::holds_alternative<ProcessRef>(t) && std::holds_alternative<std::string>(p);
    case MutationKind::CopyFile:
      return std::holds_alternative<FileRef>(t) && std::holds_alternative<std::string>(p);
    case MutationKind::DeleteFile:
      return std::holds_alternative<FileRef>(t) && std::holds_alternative<NoPayload>(p);
    case MutationKind::AddStartupEntry:
      return std::holds_alternative<StartupRef>(t) && std::holds_alternative<std::string>(p);
    case MutationKind::RemoveStartupEntry:
      return std::holds_alternative<StartupRef>(t) && std::holds_alternative<NoPayload>(p);
    case MutationKind::SetToolStatus:
      return std::holds_alternative<ToolRef>(t) && std::holds_alternative<ToolStatus>(p);
    case MutationKind::SetHidden:
      return (std::holds_alternative<ProcessRef>(t) || std::holds_alternative<FileRef>(t)) &&
             std::holds_alternative<bool>(p);
    case MutationKind::SetLocked:
      return !std::holds_alternative<LineageRef>(t) && !std::holds_alternative<ToolRef>(t) &&
             std::holds_alternative<bool>(p);
  }
  return false;
}

bool is_destructive(MutationKind k) {
  switch (k) {
    case MutationKind::CreateRegistryKey:
    case MutationKind::SpawnProcess:
    case MutationKind::CopyFile:
    case MutationKind::AddStartupEntry:
      return false;
    default:
      return true;
  }
}

// ---------------------------------------------------------------------------

HostState build_host(const HostSpec& spec) {
  HostState host;
  for (const auto& f : spec.files) {
    if (f.path.empty()) throw SpecError("file with empty path");
    if (!host.files.emplace(f.path, f).second) throw SpecError("duplicate file '" + f.path + "'");
  }
  for (auto p : spec.processes) {
    p.lineage = p.pid;
    if (!host.processes.emplace(p.pid, p).second) {
      throw SpecError("duplicate process id " + std::to_string(p.pid.value));
    }
  }
  for (const auto& s : spec.services) {
    if (!host.services.emplace(s.service_id, s).second) {
      throw SpecError("duplicate service '" + s.service_id + "'");
    }
  }
  for (const auto& k : spec.registry) {
    if (!k.exists && k.value) throw SpecError("registry key '" + k.path + "' is absent but has a value");
    if (!host.registry.emplace(k.path, k).second) throw SpecError("duplicate registry key '" + k.path + "'");
  }
  for (const auto& e : spec.startup_entries) {
    if (!host.startup_entries.emplace(e.entry_id, e).second) {
      throw SpecError("duplicate startup entry '" + e.entry_id + "'");
    }
  }
  for (const auto& [id, status] : spec.support_tools) {
    if (!host.support_tools.emplace(id, status).second) throw SpecError("duplicate support tool '" + id + "'");
  }
  if (auto bad = invariant_violations(host); !bad.empty()) throw SpecError(bad.front());
  return host;
}

std::vector<std::string> invariant_violations(const HostState& host) {
  std::vector<std::string> out;
  for (const auto& [pid, p] : host.processes) {
    if (!p.image_path.empty() && !host.files.contains(p.image_path)) {
      out.push_back("process " + std::to_string(pid.value) + " references undeclared file '" + p.image_path + "'");
    }
  }
  for (const auto& [id, e] : host.startup_entries) {
    if (!host.files.contains(e.target)) {
      out.push_back("startup entry '" + id + "' references undeclared file '" + e.target + "'");
    }
  }
  for (const auto& [path, k] : host.registry) {
    if (!k.exists && k.value) out.push_back("registry key '" + path + "' is absent but has a value");
  }
  return out;
}

void advance_tick(HostState& host, Tick tick) {
  if (tick < host.tick) throw std::logic_error("simulation time cannot go backwards");
  host.tick = tick;
}

MutationOutcome apply_mutation(HostState& host, const Mutation& m) {
  if (!well_formed(m)) {
    throw InvalidMutation(std::string("payload/target mismatch for ") + std::string(to_string(m.kind)));
  }
  const Actor actor = m.actor;

  switch (m.kind) {
    case MutationKind::SetServiceRunning: {
      auto it = host.services.find(std::get<ServiceRef>(m.target).id);
      if (it == host.services.end()) unknown(m.target);
      return set_flag(it->second.running, std::get<bool>(m.payload), it->second.locked, actor);
    }
    case MutationKind::SetRegistryValue: {
      auto it = host.registry.find(std::get<RegistryRef>(m.target).path);
      if (it == host.registry.end() || !it->second.exists) unknown(m.target);
      auto& key = it->second;
      if (blocks(key.locked, actor)) return kLocked;
      const auto& value = std::get<Scalar>(m.payload);
      if (key.value == value) return MutationOutcome::noop();
      key.value = value;
      return MutationOutcome::applied();
    }
    case MutationKind::DeleteRegistryKey: {
      auto it = host.registry.find(std::get<RegistryRef>(m.target).path);
      if (it == host.registry.end()) unknown(m.target);
      auto& key = it->second;
      if (blocks(key.locked, actor)) return kLocked;
      if (!key.exists) return MutationOutcome::noop();
      key.exists = false;
      key.value.reset();
      return MutationOutcome::applied();
    }
    case MutationKind::CreateRegistryKey: {
      const auto& path = std::get<RegistryRef>(m.target).path;
      auto it = host.registry.find(path);
      if (it == host.registry.end()) {
        host.registry.emplace(path, RegistryKey{path, std::nullopt, true, false, std::nullopt});
        return MutationOutcome::applied();
      }
      if (it->second.exists) return MutationOutcome::noop();
      it->second.exists = true;
      return MutationOutcome::applied();
    }
    case MutationKind::KillProcess: {
      auto it = host.processes.find(std::get<ProcessRef>(m.target).pid);
      if (it == host.processes.end()) unknown(m.target);
      auto& p = it->second;
      if (blocks(p.locked, actor)) return kLocked;
      if (!p.alive) return MutationOutcome::noop();
      p.alive = false;
      return MutationOutcome::applied();
    }
    case MutationKind::SpawnProcess: {
      const auto pid = std::get<ProcessRef>(m.target).pid;
      const auto& spec = std::get<SpawnSpec>(m.payload);
      if (host.processes.contains(pid)) return MutationOutcome::blocked("pid in use");
      if (!spec.image_path.empty() && !host.files.contains(spec.image_path)) {
        throw UnknownTarget("unknown image file '" + spec.image_path + "'");
      }
      host.processes.emplace(pid, ProcessEntry{pid, spec.name, spec.image_path, spec.hidden, spec.locked,
                                               spec.owner, true, spec.lineage});
      return MutationOutcome::applied();
    }
    case MutationKind::RenameProcess: {
      auto it = host.processes.find(std::get<ProcessRef>(m.target).pid);
      if (it == host.processes.end()) unknown(m.target);
      auto& p = it->second;
      if (blocks(p.locked, actor)) return kLocked;
      const auto& name = std::get<std::string>(m.payload);
      if (p.name == name) return MutationOutcome::noop();
      p.name = name;
      return MutationOutcome::applied();
    }
    case MutationKind::CopyFile: {
      auto src = host.files.find(std::get<FileRef>(m.target).path);
      if (src == host.files.end()) unknown(m.target);
      const auto& dest_path = std::get<std::string>(m.payload);
      FileEntry copy = src->second;
      copy.path = dest_path;
      auto dst = host.files.find(dest_path);
      if (dst == host.files.end()) {
        host.files.emplace(dest_path, std::move(copy));
        return MutationOutcome::applied();
      }
      if (blocks(dst->second.locked, actor)) return kLocked;
      if (dst->second.content_id == copy.content_id) return MutationOutcome::noop();
      dst->second.content_id = copy.content_id;
      return MutationOutcome::applied();
    }
    case MutationKind::DeleteFile: {
      const auto& path = std::get<FileRef>(m.target).path;
      auto it = host.files.find(path);
      if (it == host.files.end()) unknown(m.target);
      if (blocks(it->second.locked, actor)) return kLocked;
      if (file_in_use(host, path)) return MutationOutcome::blocked("in use");
      host.files.erase(it);
      return MutationOutcome::applied();
    }
    case MutationKind::AddStartupEntry: {
      const auto& id = std::get<StartupRef>(m.target).id;
      const auto& target = std::get<std::string>(m.payload);
      if (!host.files.contains(target)) throw UnknownTarget("unknown startup target file '" + target + "'");
      auto it = host.startup_entries.find(id);
      if (it == host.startup_entries.end()) {
        host.startup_entries.emplace(id, StartupEntry{id, target, false});
        return MutationOutcome::applied();
      }
      if (blocks(it->second.locked, actor)) return kLocked;
      if (it->second.target == target) return MutationOutcome::noop();
      it->second.target = target;
      return MutationOutcome::applied();
    }
    case MutationKind::RemoveStartupEntry: {
      auto it = host.startup_entries.find(std::get<StartupRef>(m.target).id);
      if (it == host.startup_entries.end()) return MutationOutcome::noop();
      if (blocks(it->second.locked, actor)) return kLocked;
      host.startup_entries.erase(it);
      return MutationOutcome::applied();
    }
    case MutationKind::SetToolStatus: {
      auto it = host.support_tools.find(std::get<ToolRef>(m.target).id);
      if (it == host.support_tools.end()) unknown(m.target);
      const auto status = std::get<ToolStatus>(m.payload);
      if (it->second == status) return MutationOutcome::noop();
      it->second = status;
      return MutationOutcome::applied();
    }
    case MutationKind::SetHidden: {
      const bool hidden = std::get<bool>(m.payload);
      if (const auto* pr = std::get_if<ProcessRef>(&m.target)) {
        auto it = host.processes.find(pr->pid);
        if (it == host.processes.end()) unknown(m.target);
        return set_flag(it->second.hidden, hidden, it->second.locked, actor);
      }
      auto it = host.files.find(std::get<FileRef>(m.target).path);
      if (it == host.files.end()) unknown(m.target);
      return set_flag(it->second.hidden, hidden, it->second.locked, actor);
    }
    case MutationKind::SetLocked: {
      const bool locked = std::get<bool>(m.payload);
      return std::visit(
          Overloaded{
              [&](const ServiceRef& r) {
                auto it = host.services.find(r.id);
                if (it == host.services.end()) unknown(m.target);
                return set_flag(it->second.locked, locked, it->second.locked, actor);
              },
              [&](const RegistryRef& r) {
                auto it = host.registry.find(r.path);
                if (it == host.registry.end()) unknown(m.target);
                return set_flag(it->second.locked, locked, it->second.locked, actor);
              },
              [&](const ProcessRef& r) {
                auto it = host.processes.find(r.pid);
                if (it == host.processes.end()) unknown(m.target);
                return set_flag(it->second.locked, locked, it->second.locked, actor);
              },
              [&](const FileRef& r) {
                auto it = host.files.find(r.path);
                if (it == host.files.end()) unknown(m.target);
                return set_flag(it->second.locked, locked, it->second.locked, actor);
              },
              [&](const StartupRef& r) {
                auto it = host.startup_entries.find(r.id);
                if (it == host.startup_entries.end()) unknown(m.target);
                return set_flag(it->second.locked, locked, it->second.locked, actor);
              },
              [&](const auto&) -> MutationOutcome { unknown(m.target); },
          },
          m.target);
    }
  }
  throw std::logic_error("unhandled mutation kind");
}

AttributeValue query_attribute(const HostState& host, const AttributeRef& ref) {
  return std::visit(
      Overloaded{
          [&](const ServiceRef& r) -> AttributeValue {
            auto it = host.services.find(r.id);
            if (it == host.services.end()) unknown(ref);
            return Scalar{it->second.running};
          },
          [&](const RegistryRef& r) -> AttributeValue {
            auto it = host.registry.find(r.path);
            if (it == host.registry.end()) unknown(ref);
            if (!it->second.exists) return std::nullopt;
            return it->second.value;
          },
          [&](const ProcessRef& r) -> AttributeValue {
            auto it = host.processes.find(r.pid);
            if (it == host.processes.end()) unknown(ref);
            return Scalar{it->second.alive};
          },
          [&](const LineageRef& r) -> AttributeValue {
            if (!host.processes.contains(r.root)) unknown(ref);
            for (const auto& [pid, p] : host.processes) {
              if (p.lineage == r.root && p.alive) return Scalar{true};
            }
            return Scalar{false};
          },
          [&](const FileRef& r) -> AttributeValue { return Scalar{host.files.contains(r.path)}; },
          [&](const StartupRef& r) -> AttributeValue { return Scalar{host.startup_entries.contains(r.id)}; },
          [&](const ToolRef& r) -> AttributeValue {
            auto it = host.support_tools.find(r.id);
            if (it == host.support_tools.end()) unknown(ref);
            return Scalar{std::string(to_string(it->second))};
          },
      },
      ref);
}

// ---------------------------------------------------------------------------

HostView visible_view(const HostState& host, Actor observer) {
  if (observer == Actor::Organization) return HostView(observer, host);
  HostState v = host;
  std::erase_if(v.processes, [](const auto& kv) { return kv.second.hidden || !kv.second.alive; });
  std::erase_if(v.files, [](const auto& kv) { return kv.second.hidden; });
  return HostView(observer, std::move(v));
}

bool HostView::contains(const AttributeRef& ref) const {
  return std::visit(Overloaded{
                        [&](const ServiceRef& r) { return state_.services.contains(r.id); },
                        [&](const RegistryRef& r) {
                          auto it = state_.registry.find(r.path);
                          return it != state_.registry.end() && it->second.exists;
                        },
                        [&](const ProcessRef& r) { return state_.processes.contains(r.pid); },
                        [&](const LineageRef& r) { return state_.processes.contains(r.root); },
                        [&](const FileRef& r) { return state_.files.contains(r.path); },
                        [&](const StartupRef& r) { return state_.startup_entries.contains(r.id); },
                        [&](const ToolRef& r) { return state_.support_tools.contains(r.id); },
                    },
                    ref);
}

std::string_view parent_directory(std::string_view path) {
  const auto pos = path.find_last_of("/\\");
  if (pos == std::string_view::npos) return {};
  return path.substr(0, pos + 1);
}

}  // namespace selfguard
