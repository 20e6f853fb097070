#pragma once

#include <string>
#include <vector>

#include "selfguard/engine.hpp"

namespace selfguard::test {

inline const std::string kGuardDir = "C:/Program Files/SelfGuard/";
inline const std::string kGuardImage = kGuardDir + "guardapp.exe";
inline const std::string kGuardConfig = kGuardDir + "guardapp.cfg";
inline const std::string kPayloadImage = "C:/Users/Public/payload.exe";
inline const std::string kFlagKey = "HKLM/Software/SelfGuard/ProtectionEnabled";
inline constexpr ProcessId kGuardPid{100};
inline constexpr ProcessId kMalwarePid{666};

/// Guard process, firewall service, registry flag, one startup entry, a
/// config file, a support tool and a running malware process.
inline HostSpec small_host() {
  HostSpec h;
  h.files = {{kGuardImage, "guardapp-1", false, false},
             {kGuardConfig, "cfg-1", false, false},
             {kPayloadImage, "payload", false, false}};
  ProcessEntry guard;
  guard.pid = kGuardPid;
  guard.name = "guardapp.exe";
  guard.image_path = kGuardImage;
  guard.lineage = kGuardPid;
  ProcessEntry mal;
  mal.pid = kMalwarePid;
  mal.name = "payload.exe";
  mal.image_path = kPayloadImage;
  mal.owner = Actor::Malware;
  mal.lineage = kMalwarePid;
  h.processes = {guard, mal};
  h.services = {{"firewall", true, false, true}};
  h.registry = {{kFlagKey, Scalar{true}, true, false, Scalar{true}}};
  h.startup_entries = {{"guardapp-run", kGuardImage, false}};
  h.support_tools = {{"taskmgr", ToolStatus::Enabled}};
  return h;
}

inline Source attack_source(VectorKind k) { return Source::attack(std::string(vector_id(k))); }
inline Source guard_source(const std::string& id) { return Source::guard(id); }

inline AttackScript script_at(Tick t, AttackVector v, std::string name = "attacker") {
  return AttackScript{std::move(name), {ScriptStep{t, std::move(v)}}, std::nullopt, std::nullopt};
}

inline GuardStrategy guard_of(std::string id, GuardKind kind, std::vector<AttributeRef> targets,
                              Trigger trigger = Trigger::manual(0), Schedule schedule = {},
                              GuardParams params = std::monostate{}) {
  GuardStrategy g;
  g.guard_id = std::move(id);
  g.kind = kind;
  g.targets = std::move(targets);
  g.trigger = trigger;
  g.schedule = schedule;
  g.params = std::move(params);
  return g;
}

inline std::size_t live_in_lineage(const HostState& host, ProcessId root) {
  std::size_t n = 0;
  for (const auto& [pid, p] : host.processes) n += (p.alive && p.lineage == root) ? 1 : 0;
  return n;
}

}  // namespace selfguard::test
