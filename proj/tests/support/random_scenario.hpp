#pragma once

// Seeded generator of valid scenarios over the full vector and guard
// catalogs, for determinism and property tests.

#include <cstdint>
#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "fixtures.hpp"

namespace selfguard::test {

class ScenarioGenerator {
 public:
  explicit ScenarioGenerator(std::uint64_t seed) : rng_(seed) {}

  ScenarioSpec next() {
    ScenarioSpec s;
    s.name = "random-" + std::to_string(counter_++);
    s.seed = rng_();
    s.run_length = pick(4, 24);
    s.host = host();
    const int n_attackers = static_cast<int>(pick(0, 3));
    for (int i = 0; i < n_attackers; ++i) s.attackers.push_back(attacker(s.host, s.run_length, i));
    const int n_guards = static_cast<int>(pick(0, 5));
    for (int i = 0; i < n_guards; ++i) s.guards.push_back(guard(s.host, i));
    if (!s.guards.empty()) {
      const int n_rules = static_cast<int>(pick(0, 3));
      for (int i = 0; i < n_rules; ++i) s.rulebook.rules.push_back(rule(s.guards, i));
    }
    s.protected_attributes = protect(s.host);
    return s;
  }

 private:
  std::uint64_t pick(std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng_);
  }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }
  template <class T>
  const T& one_of(const std::vector<T>& v) {
    return v[pick(0, v.size() - 1)];
  }

  HostSpec host() {
    HostSpec h;
    const int n_dirs = 2;
    for (int d = 0; d < n_dirs; ++d) {
      for (int f = 0; f < 3; ++f) {
        const std::string path = "C:/App" + std::to_string(d) + "/bin" + std::to_string(f) + ".exe";
        h.files.push_back({path, "c" + std::to_string(d) + std::to_string(f), coin(0.2), coin(0.2)});
      }
    }
    std::uint32_t pid = 100;
    for (int i = 0; i < 3; ++i) {
      ProcessEntry p;
      p.pid = ProcessId{pid++};
      p.image_path = h.files[pick(0, h.files.size() - 1)].path;
      p.name = p.image_path.substr(p.image_path.rfind('/') + 1);
      p.hidden = coin(0.2);
      p.locked = coin(0.2);
      p.owner = i == 2 ? Actor::Malware : Actor::Organization;
      p.lineage = p.pid;
      h.processes.push_back(p);
    }
    for (const char* svc : {"firewall", "defender", "updater"}) h.services.push_back({svc, coin(0.9), coin(0.3), true});
    for (int k = 0; k < 3; ++k) {
      RegistryKey key;
      key.path = "HKLM/Software/App/key" + std::to_string(k);
      key.exists = coin(0.9);
      if (key.exists) key.value = Scalar{static_cast<std::int64_t>(pick(0, 2))};
      key.locked = coin(0.3);
      key.desired_value = Scalar{std::int64_t{1}};
      h.registry.push_back(key);
    }
    for (int e = 0; e < 3; ++e) {
      h.startup_entries.push_back({"run" + std::to_string(e), h.files[pick(0, h.files.size() - 1)].path, coin(0.3)});
    }
    h.support_tools = {{"taskmgr", coin() ? ToolStatus::Enabled : ToolStatus::Disabled},
                       {"regedit", ToolStatus::Enabled}};
    return h;
  }

  AttackVector vector(const HostSpec& h) {
    switch (pick(0, 6)) {
      case 0: return AttackVector::disable_guard_logic(one_of(h.services).service_id);
      case 1: return AttackVector::manipulate_registry(one_of(h.registry).path, Scalar{static_cast<std::int64_t>(pick(0, 2))});
      case 2: return AttackVector::delete_registry_key(one_of(h.registry).path);
      case 3: {
        const auto& p = one_of(h.processes);
        switch (pick(0, 2)) {
          case 0: return AttackVector::terminate_executable({ProcessMatcher::Mode::ByExactName, p.name});
          case 1: return AttackVector::terminate_executable({ProcessMatcher::Mode::ByNamePrefix, p.name.substr(0, 3)});
          default:
            return AttackVector::terminate_executable(
                {ProcessMatcher::Mode::ByImagePath, std::string(parent_directory(p.image_path))});
        }
      }
      case 4: return AttackVector::disable_support_tool(one_of(h.support_tools).first);
      case 5: return AttackVector::remove_startup_entry(one_of(h.startup_entries).entry_id);
      default: return AttackVector::delete_file(one_of(h.files).path);
    }
  }

  AttackScript attacker(const HostSpec& h, Tick length, int index) {
    AttackScript a;
    a.name = "attacker" + std::to_string(index);
    const int n = static_cast<int>(pick(1, 5));
    std::vector<Tick> ticks;
    for (int i = 0; i < n; ++i) ticks.push_back(pick(0, length - 1));
    std::sort(ticks.begin(), ticks.end());
    for (Tick t : ticks) a.steps.push_back({t, vector(h)});
    if (coin(0.25)) a.repeat = pick(1, 6);
    if (coin(0.3)) a.process = h.processes.back().pid;
    return a;
  }

  GuardStrategy guard(const HostSpec& h, int index) {
    GuardStrategy g;
    g.guard_id = "guard" + std::to_string(index);
    g.schedule.poll_period = pick(1, 3);
    g.schedule.phase = pick(0, g.schedule.poll_period - 1);
    if (coin(0.3)) g.schedule.iterations = pick(1, 4);
    switch (pick(0, 3)) {
      case 0: g.trigger = Trigger::preemptive(); break;
      case 1: g.trigger = Trigger::manual(pick(0, 3)); break;
      default: g.trigger = Trigger::automatic(); break;
    }
    if (coin(0.4)) g.host_process = h.processes[pick(0, 1)].pid;
    if (coin(0.1)) g.deactivate_at = pick(2, 12);
    g.kind = static_cast<GuardKind>(pick(0, 7));
    switch (g.kind) {
      case GuardKind::ServiceRestorer: g.targets = {ServiceRef{one_of(h.services).service_id}}; break;
      case GuardKind::RegistrySentinel:
        g.targets = {RegistryRef{one_of(h.registry).path}};
        g.params = SentinelParams{coin() ? std::optional<Scalar>(Scalar{std::int64_t{1}}) : std::nullopt};
        break;
      case GuardKind::ProcessRandomizer: g.targets = {ProcessRef{h.processes[pick(0, 1)].pid}}; break;
      case GuardKind::RedundantStartup: {
        RedundantStartupParams p;
        const int k = static_cast<int>(pick(1, 3));
        for (int i = 0; i < k; ++i) p.entries.push_back({"run" + std::to_string(i), one_of(h.files).path});
        g.params = p;
        break;
      }
      case GuardKind::AdversaryTerminator:
        g.params = TerminatorParams{{{ProcessMatcher::Mode::ByNamePrefix, h.processes.back().name.substr(0, 2)},
                                     {ProcessMatcher::Mode::ByExactName, h.processes.front().name}}};
        break;
      case GuardKind::AttributeLocker:
        g.targets = {ServiceRef{one_of(h.services).service_id}, FileRef{one_of(h.files).path}};
        for (const auto& k : h.registry) {
          if (k.exists) {
            g.targets.push_back(RegistryRef{k.path});
            break;
          }
        }
        break;
      case GuardKind::Hider: g.targets = {ProcessRef{h.processes[0].pid}, FileRef{one_of(h.files).path}}; break;
      case GuardKind::SupportToolDisabler: g.targets = {ToolRef{one_of(h.support_tools).first}}; break;
    }
    return g;
  }

  Rule rule(const std::vector<GuardStrategy>& guards, int index) {
    Rule r;
    r.rule_id = "rule" + std::to_string(index);
    r.guard_id = one_of(guards).guard_id;
    r.priority = static_cast<std::int64_t>(pick(0, 10)) - 5;
    if (coin()) r.condition.vectors = {std::string(vector_id(static_cast<VectorKind>(pick(0, 5))))};
    r.condition.target = coin() ? "*" : "service:*";
    r.condition.count = pick(1, 2);
    r.condition.window = pick(1, 4);
    r.immediate = coin(0.3);
    if (coin(0.3)) r.overrides.poll_period = pick(1, 2);
    return r;
  }

  std::vector<ProtectedAttribute> protect(const HostSpec& h) {
    std::vector<ProtectedAttribute> out;
    for (const auto& s : h.services) {
      if (coin(0.6)) out.push_back({ServiceRef{s.service_id}, Scalar{true}});
    }
    for (const auto& k : h.registry) {
      if (coin(0.5)) out.push_back({RegistryRef{k.path}, k.desired_value});
    }
    if (coin(0.7)) out.push_back({LineageRef{h.processes.front().pid}, Scalar{true}});
    if (coin(0.5)) out.push_back({StartupRef{h.startup_entries.front().entry_id}, Scalar{true}});
    if (coin(0.5)) out.push_back({FileRef{h.files.front().path}, Scalar{true}});
    return out;
  }

  std::mt19937_64 rng_;
  int counter_ = 0;
};

}  // namespace selfguard::test
