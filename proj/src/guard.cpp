#include "selfguard/guard.hpp"

#include <algorithm>

#include "overloaded.hpp"
#include "selfguard/errors.hpp"

namespace selfguard {

namespace {

using detail::Overloaded;

constexpr Actor kOrg = Actor::Organization;

const std::vector<GuardKindInfo> kCatalog{
    {GuardKind::ServiceRestorer, "service-restorer", "recovery of disabled components",
     "restarts a protective service that has been stopped"},
    {GuardKind::RegistrySentinel, "registry-sentinel", "recovery of configuration",
     "polls a registry value; recreates the key and rewrites the desired value"},
    {GuardKind::ProcessRandomizer, "process-randomizer", "obfuscation of process and file names",
     "relaunches itself from a randomly named copy in the same directory"},
    {GuardKind::RedundantStartup, "redundant-startup", "redundant and reinstated startup points",
     "keeps k startup entries present, re-adding any that are removed"},
    {GuardKind::AdversaryTerminator, "adversary-terminator", "termination of adversarial software",
     "kills live malware processes matching a blocklist"},
    {GuardKind::AttributeLocker, "attribute-locker", "protection from manipulation",
     "locks processes, files, services, keys and startup entries against malware"},
    {GuardKind::Hider, "hider", "hiding of files and processes",
     "hides processes and files from malware's view of the host"},
    {GuardKind::SupportToolDisabler, "support-tool-disabler", "disabling of support tools",
     "disables support tools malware could use"},
};

[[noreturn]] void unknown(const AttributeRef& ref) {
  throw UnknownTarget("unknown target " + format_ref(ref));
}

std::string_view extension_of(std::string_view path) {
  const auto dir = parent_directory(path);
  const auto base = path.substr(dir.size());
  const auto dot = base.rfind('.');
  if (dot == std::string_view::npos || dot == 0) return {};
  return base.substr(dot);
}

bool name_taken(const HostState& host, const std::string& name, const std::string& path) {
  if (host.files.contains(path)) return true;
  return std::any_of(host.processes.begin(), host.processes.end(),
                     [&](const auto& kv) { return kv.second.name == name; });
}

const ProcessEntry& process_at(const HostState& host, ProcessId pid) {
  auto it = host.processes.find(pid);
  if (it == host.processes.end()) unknown(ProcessRef{pid});
  return it->second;
}

}  // namespace

std::string_view to_string(GuardKind k) {
  for (const auto& info : kCatalog) {
    if (info.kind == k) return info.id;
  }
  return "?";
}

std::string_view to_string(Posture p) { return p == Posture::Passive ? "passive" : "active"; }
std::string_view to_string(Scope s) { return s == Scope::Generic ? "generic" : "targeted"; }

GuardKind parse_guard_kind(std::string_view s) {
  for (const auto& info : kCatalog) {
    if (info.id == s) return info.kind;
  }
  throw SpecError("unknown guard kind '" + std::string(s) + "'");
}

Classification classify(GuardKind k) {
  switch (k) {
    case GuardKind::Hider:
    case GuardKind::AttributeLocker:
      return {Posture::Passive, Scope::Generic};
    case GuardKind::AdversaryTerminator:
      return {Posture::Active, Scope::Targeted};
    default:
      return {Posture::Active, Scope::Generic};
  }
}

const std::vector<GuardKindInfo>& guard_catalog() { return kCatalog; }

std::string_view to_string(Trigger::Mode m) {
  switch (m) {
    case Trigger::Mode::Preemptive: return "preemptive";
    case Trigger::Mode::Manual: return "manual";
    case Trigger::Mode::AutomaticOnEvent: return "automatic";
  }
  return "?";
}

Trigger::Mode parse_trigger_mode(std::string_view s) {
  if (s == "preemptive") return Trigger::Mode::Preemptive;
  if (s == "manual") return Trigger::Mode::Manual;
  if (s == "automatic") return Trigger::Mode::AutomaticOnEvent;
  throw SpecError("unknown trigger mode '" + std::string(s) + "'");
}

void validate(const GuardStrategy& g) {
  const std::string where = "guard '" + g.guard_id + "': ";
  if (g.guard_id.empty()) throw SpecError("guard with empty id");
  if (g.schedule.poll_period == 0) throw SpecError(where + "poll_period must be >= 1");
  if (g.schedule.phase >= g.schedule.poll_period) throw SpecError(where + "phase must be < poll_period");
  if (g.schedule.iterations && *g.schedule.iterations == 0) throw SpecError(where + "iterations must be >= 1");

  auto targets_all = [&](auto pred, std::string_view what) {
    if (g.targets.empty()) throw SpecError(where + "needs at least one target");
    for (const auto& t : g.targets) {
      if (!pred(t)) throw SpecError(where + "target " + format_ref(t) + " is not " + std::string(what));
    }
  };
  auto no_targets = [&] {
    if (!g.targets.empty()) throw SpecError(where + "takes no targets");
  };
  auto params_are = [&]<class P>(std::type_identity<P>) {
    if (!std::holds_alternative<P>(g.params)) throw SpecError(where + "params do not match kind");
  };

  switch (g.kind) {
    case GuardKind::ServiceRestorer:
      targets_all([](const auto& t) { return std::holds_alternative<ServiceRef>(t); }, "a service");
      params_are(std::type_identity<std::monostate>{});
      break;
    case GuardKind::RegistrySentinel:
      targets_all([](const auto& t) { return std::holds_alternative<RegistryRef>(t); }, "a registry key");
      params_are(std::type_identity<SentinelParams>{});
      break;
    case GuardKind::ProcessRandomizer:
      targets_all([](const auto& t) { return std::holds_alternative<ProcessRef>(t); }, "a process");
      if (g.targets.size() != 1) throw SpecError(where + "randomizer protects exactly one process");
      params_are(std::type_identity<std::monostate>{});
      break;
    case GuardKind::RedundantStartup:
      no_targets();
      params_are(std::type_identity<RedundantStartupParams>{});
      if (std::get<RedundantStartupParams>(g.params).entries.empty()) {
        throw SpecError(where + "needs at least one startup entry template");
      }
      break;
    case GuardKind::AdversaryTerminator:
      no_targets();
      params_are(std::type_identity<TerminatorParams>{});
      for (const auto& m : std::get<TerminatorParams>(g.params).blocklist) {
        if (m.pattern.empty()) throw SpecError(where + "empty blocklist pattern");
      }
      break;
    case GuardKind::AttributeLocker:
      targets_all(
          [](const auto& t) { return !std::holds_alternative<LineageRef>(t) && !std::holds_alternative<ToolRef>(t); },
          "lockable");
      params_are(std::type_identity<std::monostate>{});
      break;
    case GuardKind::Hider:
      targets_all(
          [](const auto& t) { return std::holds_alternative<ProcessRef>(t) || std::holds_alternative<FileRef>(t); },
          "a process or file");
      params_are(std::type_identity<std::monostate>{});
      break;
    case GuardKind::SupportToolDisabler:
      targets_all([](const auto& t) { return std::holds_alternative<ToolRef>(t); }, "a support tool");
      params_are(std::type_identity<std::monostate>{});
      break;
  }
}

std::optional<ProcessId> current_incarnation(const HostState& host, ProcessId root) {
  std::optional<ProcessId> found;
  for (const auto& [pid, p] : host.processes) {
    if (p.lineage == root && p.alive) found = pid;
  }
  return found;
}

// ---------------------------------------------------------------------------

std::vector<Mutation> service_restorer_step(const std::string& guard_id, const ServiceId& target,
                                            const GuardObservation& obs) {
  const auto& services = obs.view.state().services;
  auto it = services.find(target);
  if (it == services.end()) unknown(ServiceRef{target});
  if (it->second.running == it->second.desired_running) return {};
  return {Mutation::set_service_running(target, it->second.desired_running, kOrg, Source::guard(guard_id))};
}

std::vector<Mutation> registry_sentinel_step(const std::string& guard_id, const KeyPath& target,
                                             const Scalar& desired, const GuardObservation& obs) {
  const auto& registry = obs.view.state().registry;
  const auto src = Source::guard(guard_id);
  auto it = registry.find(target);
  if (it == registry.end() || !it->second.exists) {
    return {Mutation::create_registry_key(target, kOrg, src), Mutation::set_registry_value(target, desired, kOrg, src)};
  }
  if (it->second.value == desired) return {};
  return {Mutation::set_registry_value(target, desired, kOrg, src)};
}

std::vector<Mutation> process_randomizer_step(const std::string& guard_id, ProcessId self,
                                              const GuardObservation& obs, NameGenerator& names) {
  const auto& host = obs.view.state();
  const auto& proc = process_at(host, self);
  if (!proc.alive) throw UnknownTarget("process " + std::to_string(self.value) + " is no longer alive");
  if (!host.files.contains(proc.image_path)) unknown(FileRef{proc.image_path});

  const std::string dir(parent_directory(proc.image_path));
  const std::string ext(extension_of(proc.image_path));
  std::string name;
  std::string path;
  do {
    name = names.next() + ext;
    path = dir + name;
  } while (name_taken(host, name, path));

  const ProcessId child{host.processes.rbegin()->first.value + 1};
  const auto src = Source::guard(guard_id);
  return {
      Mutation::copy_file(proc.image_path, path, kOrg, src),
      Mutation::spawn_process(child, SpawnSpec{name, path, proc.hidden, proc.locked, proc.owner, proc.lineage}, kOrg,
                              src),
      Mutation::kill_process(self, kOrg, src),
  };
}

std::vector<Mutation> redundant_startup_step(const std::string& guard_id,
                                             std::span<const StartupTemplate> templates,
                                             const GuardObservation& obs) {
  const auto& host = obs.view.state();
  std::vector<Mutation> out;
  for (const auto& t : templates) {
    auto it = host.startup_entries.find(t.entry_id);
    if (it != host.startup_entries.end() && it->second.target == t.target) continue;
    if (!host.files.contains(t.target)) {
      throw UnknownTarget("startup target file '" + t.target + "' no longer exists");
    }
    out.push_back(Mutation::add_startup_entry(t.entry_id, t.target, kOrg, Source::guard(guard_id)));
  }
  return out;
}

std::vector<Mutation> adversary_terminator_step(const std::string& guard_id,
                                                std::span<const ProcessMatcher> blocklist,
                                                const GuardObservation& obs) {
  std::vector<Mutation> out;
  for (const auto& [pid, p] : obs.view.state().processes) {
    if (!p.alive || p.owner != Actor::Malware) continue;
    const bool listed = std::any_of(blocklist.begin(), blocklist.end(), [&](const auto& m) { return m.matches(p); });
    if (listed) out.push_back(Mutation::kill_process(pid, kOrg, Source::guard(guard_id)));
  }
  return out;
}

std::vector<Mutation> locker_step(const std::string& guard_id, std::span<const AttributeRef> targets,
                                  const GuardObservation& obs) {
  const auto& host = obs.view.state();
  std::vector<Mutation> out;
  for (const auto& ref : targets) {
    const bool locked = std::visit(
        Overloaded{
            [&](const ServiceRef& r) {
              auto it = host.services.find(r.id);
              if (it == host.services.end()) unknown(ref);
              return it->second.locked;
            },
            [&](const RegistryRef& r) {
              auto it = host.registry.find(r.path);
              if (it == host.registry.end()) unknown(ref);
              return it->second.locked;
            },
            [&](const ProcessRef& r) { return process_at(host, r.pid).locked; },
            [&](const FileRef& r) {
              auto it = host.files.find(r.path);
              if (it == host.files.end()) unknown(ref);
              return it->second.locked;
            },
            [&](const StartupRef& r) {
              auto it = host.startup_entries.find(r.id);
              if (it == host.startup_entries.end()) unknown(ref);
              return it->second.locked;
            },
            [&](const auto&) -> bool { unknown(ref); },
        },
        ref);
    if (!locked) out.push_back(Mutation::set_locked(ref, true, kOrg, Source::guard(guard_id)));
  }
  return out;
}

std::vector<Mutation> hider_step(const std::string& guard_id, std::span<const AttributeRef> targets,
                                 const GuardObservation& obs) {
  const auto& host = obs.view.state();
  std::vector<Mutation> out;
  for (const auto& ref : targets) {
    bool hidden = false;
    if (const auto* p = std::get_if<ProcessRef>(&ref)) {
      hidden = process_at(host, p->pid).hidden;
    } else if (const auto* f = std::get_if<FileRef>(&ref)) {
      auto it = host.files.find(f->path);
      if (it == host.files.end()) unknown(ref);
      hidden = it->second.hidden;
    } else {
      unknown(ref);
    }
    if (!hidden) out.push_back(Mutation::set_hidden(ref, true, kOrg, Source::guard(guard_id)));
  }
  return out;
}

std::vector<Mutation> support_tool_disabler_step(const std::string& guard_id,
                                                 std::span<const AttributeRef> targets,
                                                 const GuardObservation& obs) {
  const auto& tools = obs.view.state().support_tools;
  std::vector<Mutation> out;
  for (const auto& ref : targets) {
    const auto* t = std::get_if<ToolRef>(&ref);
    if (!t) unknown(ref);
    auto it = tools.find(t->id);
    if (it == tools.end()) unknown(ref);
    if (it->second != ToolStatus::Disabled) {
      out.push_back(Mutation::set_tool_status(t->id, ToolStatus::Disabled, kOrg, Source::guard(guard_id)));
    }
  }
  return out;
}

std::vector<Mutation> guard_step(const GuardStrategy& guard, const GuardObservation& obs, NameGenerator& names) {
  const auto& id = guard.guard_id;
  std::vector<Mutation> out;
  auto append = [&out](std::vector<Mutation> ms) {
    out.insert(out.end(), std::make_move_iterator(ms.begin()), std::make_move_iterator(ms.end()));
  };

  switch (guard.kind) {
    case GuardKind::ServiceRestorer:
      for (const auto& t : guard.targets) append(service_restorer_step(id, std::get<ServiceRef>(t).id, obs));
      break;
    case GuardKind::RegistrySentinel: {
      const auto& params = std::get<SentinelParams>(guard.params);
      for (const auto& t : guard.targets) {
        const auto& path = std::get<RegistryRef>(t).path;
        std::optional<Scalar> desired = params.desired;
        if (!desired) {
          auto it = obs.view.state().registry.find(path);
          if (it != obs.view.state().registry.end()) desired = it->second.desired_value;
        }
        if (!desired) throw UnknownTarget("no desired value for registry key '" + path + "'");
        append(registry_sentinel_step(id, path, *desired, obs));
      }
      break;
    }
    case GuardKind::ProcessRandomizer: {
      const auto root = std::get<ProcessRef>(guard.targets.front()).pid;
      const auto lineage = process_at(obs.view.state(), root).lineage;
      const auto self = current_incarnation(obs.view.state(), lineage);
      if (!self) throw UnknownTarget("no live process in lineage of " + std::to_string(root.value));
      append(process_randomizer_step(id, *self, obs, names));
      break;
    }
    case GuardKind::RedundantStartup:
      append(redundant_startup_step(id, std::get<RedundantStartupParams>(guard.params).entries, obs));
      break;
    case GuardKind::AdversaryTerminator:
      append(adversary_terminator_step(id, std::get<TerminatorParams>(guard.params).blocklist, obs));
      break;
    case GuardKind::AttributeLocker:
      append(locker_step(id, guard.targets, obs));
      break;
    case GuardKind::Hider:
      append(hider_step(id, guard.targets, obs));
      break;
    case GuardKind::SupportToolDisabler:
      append(support_tool_disabler_step(id, guard.targets, obs));
      break;
  }
  return out;
}

}  // namespace selfguard
