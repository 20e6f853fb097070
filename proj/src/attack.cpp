#include "selfguard/attack.hpp"

#include "selfguard/errors.hpp"

namespace selfguard {

namespace {

const std::vector<VectorInfo> kCatalog{
    {VectorKind::DisableGuardLogic, "capec-56-disable-guard-logic", "CAPEC-56",
     "stop a protective service (removing/short-circuiting guard logic)"},
    {VectorKind::ManipulateRegistry, "capec-203-manipulate-registry", "CAPEC-203",
     "overwrite or delete an application registry value"},
    {VectorKind::TerminateExecutable, "capec-17-terminate-executable", "CAPEC-17",
     "find processes by name or image path and terminate them"},
    {VectorKind::DisableSupportTool, "disable-support-tool", "",
     "disable a support tool such as a task manager or registry editor"},
    {VectorKind::RemoveStartupEntry, "remove-startup-entry", "", "remove a startup entry"},
    {VectorKind::DeleteFile, "delete-file", "", "delete a file"},
};

Source source_of(VectorKind k) { return Source::attack(std::string(vector_id(k))); }

}  // namespace

std::string_view vector_id(VectorKind k) {
  for (const auto& info : kCatalog) {
    if (info.kind == k) return info.id;
  }
  return "?";
}

VectorKind parse_vector_id(std::string_view id) {
  for (const auto& info : kCatalog) {
    if (info.id == id) return info.kind;
  }
  throw SpecError("unknown attack vector '" + std::string(id) + "'");
}

const std::vector<VectorInfo>& vector_catalog() { return kCatalog; }

std::string_view to_string(ProcessMatcher::Mode m) {
  switch (m) {
    case ProcessMatcher::Mode::ByExactName: return "exact-name";
    case ProcessMatcher::Mode::ByNamePrefix: return "name-prefix";
    case ProcessMatcher::Mode::ByImagePath: return "image-path";
  }
  return "?";
}

ProcessMatcher::Mode parse_matcher_mode(std::string_view s) {
  if (s == "exact-name") return ProcessMatcher::Mode::ByExactName;
  if (s == "name-prefix") return ProcessMatcher::Mode::ByNamePrefix;
  if (s == "image-path") return ProcessMatcher::Mode::ByImagePath;
  throw SpecError("unknown matcher mode '" + std::string(s) + "'");
}

bool ProcessMatcher::matches(const ProcessEntry& p) const {
  switch (mode) {
    case Mode::ByExactName: return p.name == pattern;
    case Mode::ByNamePrefix: return p.name.starts_with(pattern);
    case Mode::ByImagePath:
      if (pattern.ends_with('/') || pattern.ends_with('\\')) return parent_directory(p.image_path) == pattern;
      return p.image_path == pattern;
  }
  return false;
}

AttackVector AttackVector::disable_guard_logic(ServiceId service) {
  return {VectorKind::DisableGuardLogic, std::move(service)};
}
AttackVector AttackVector::manipulate_registry(KeyPath key, Scalar value) {
  return {VectorKind::ManipulateRegistry, RegistryManipulation{std::move(key), std::move(value)}};
}
AttackVector AttackVector::delete_registry_key(KeyPath key) {
  return {VectorKind::ManipulateRegistry, RegistryManipulation{std::move(key), std::nullopt}};
}
AttackVector AttackVector::terminate_executable(ProcessMatcher matcher) {
  return {VectorKind::TerminateExecutable, std::move(matcher)};
}
AttackVector AttackVector::disable_support_tool(ToolId tool) {
  return {VectorKind::DisableSupportTool, std::move(tool)};
}
AttackVector AttackVector::remove_startup_entry(EntryId entry) {
  return {VectorKind::RemoveStartupEntry, std::move(entry)};
}
AttackVector AttackVector::delete_file(FilePath path) { return {VectorKind::DeleteFile, std::move(path)}; }

bool well_formed(const AttackVector& v) {
  switch (v.kind) {
    case VectorKind::ManipulateRegistry: {
      const auto* r = std::get_if<RegistryManipulation>(&v.params);
      return r && !r->key.empty();
    }
    case VectorKind::TerminateExecutable: {
      const auto* m = std::get_if<ProcessMatcher>(&v.params);
      return m && !m->pattern.empty();
    }
    default: {
      const auto* s = std::get_if<std::string>(&v.params);
      return s && !s->empty();
    }
  }
}

void validate(const AttackScript& script) {
  if (script.repeat && *script.repeat == 0) throw SpecError("attacker '" + script.name + "': repeat must be >= 1");
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    if (i > 0 && script.steps[i].tick < script.steps[i - 1].tick) {
      throw SpecError("attacker '" + script.name + "': steps must be sorted by tick");
    }
    if (!well_formed(script.steps[i].vector)) {
      throw SpecError("attacker '" + script.name + "': step " + std::to_string(i) + " has malformed parameters");
    }
  }
}

std::vector<Mutation> execute_vector(const AttackVector& vector, const HostView& view) {
  const auto& host = view.state();
  const auto src = source_of(vector.kind);
  constexpr Actor kMalware = Actor::Malware;
  std::vector<Mutation> out;

  switch (vector.kind) {
    case VectorKind::DisableGuardLogic: {
      const auto& id = std::get<std::string>(vector.params);
      if (host.services.contains(id)) out.push_back(Mutation::set_service_running(id, false, kMalware, src));
      break;
    }
    case VectorKind::ManipulateRegistry: {
      const auto& r = std::get<RegistryManipulation>(vector.params);
      if (!view.contains(RegistryRef{r.key})) break;
      if (r.value) {
        out.push_back(Mutation::set_registry_value(r.key, *r.value, kMalware, src));
      } else {
        out.push_back(Mutation::delete_registry_key(r.key, kMalware, src));
      }
      break;
    }
    case VectorKind::TerminateExecutable: {
      const auto& matcher = std::get<ProcessMatcher>(vector.params);
      for (const auto& [pid, p] : host.processes) {
        if (p.alive && matcher.matches(p)) out.push_back(Mutation::kill_process(pid, kMalware, src));
      }
      break;
    }
    case VectorKind::DisableSupportTool: {
      const auto& id = std::get<std::string>(vector.params);
      if (host.support_tools.contains(id)) {
        out.push_back(Mutation::set_tool_status(id, ToolStatus::Disabled, kMalware, src));
      }
      break;
    }
    case VectorKind::RemoveStartupEntry: {
      const auto& id = std::get<std::string>(vector.params);
      if (host.startup_entries.contains(id)) out.push_back(Mutation::remove_startup_entry(id, kMalware, src));
      break;
    }
    case VectorKind::DeleteFile: {
      const auto& path = std::get<std::string>(vector.params);
      if (host.files.contains(path)) out.push_back(Mutation::delete_file(path, kMalware, src));
      break;
    }
  }
  return out;
}

bool step_fires(const AttackScript& script, const ScriptStep& step, Tick tick) {
  if (tick == step.tick) return true;
  return script.repeat && tick > step.tick && (tick - step.tick) % *script.repeat == 0;
}

bool fires_at(const AttackScript& script, Tick tick) {
  for (const auto& step : script.steps) {
    if (step_fires(script, step, tick)) return true;
  }
  return false;
}

std::vector<Mutation> attacker_step(const AttackScript& script, Tick tick, const HostView& view) {
  std::vector<Mutation> out;
  for (const auto& step : script.steps) {
    if (!step_fires(script, step, tick)) continue;
    auto ms = execute_vector(step.vector, view);
    out.insert(out.end(), std::make_move_iterator(ms.begin()), std::make_move_iterator(ms.end()));
  }
  return out;
}

}  // namespace selfguard
