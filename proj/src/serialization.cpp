#include "selfguard/serialization.hpp"

#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "overloaded.hpp"
#include "selfguard/errors.hpp"

namespace selfguard::io {

namespace {

using detail::Overloaded;

[[noreturn]] void fail(const std::string& where, const std::string& msg) { throw SpecError(where + ": " + msg); }

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) fail(where, "expected a string");
  return j.get<std::string>();
}

bool as_bool(const json& j, const std::string& where) {
  if (!j.is_boolean()) fail(where, "expected true or false");
  return j.get<bool>();
}

std::uint64_t as_u64(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  fail(where, "expected a non-negative integer");
}

std::int64_t as_i64(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) {
    const auto v = j.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) fail(where, "integer out of range");
    return static_cast<std::int64_t>(v);
  }
  if (j.is_number_integer()) return j.get<std::int64_t>();
  fail(where, "expected an integer");
}

double as_double(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  return j.get<double>();
}

const json& as_array(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array");
  return j;
}

ProcessId as_pid(const json& j, const std::string& where) {
  const auto v = as_u64(j, where);
  if (v > std::numeric_limits<std::uint32_t>::max()) fail(where, "process id out of range");
  return ProcessId{static_cast<std::uint32_t>(v)};
}

template <class F>
auto wrap(const std::string& where, F&& f) {
  try {
    return f();
  } catch (const SpecError& e) {
    const std::string msg = e.what();
    if (msg.starts_with(where)) throw;
    fail(where, msg);
  }
}

AttributeRef as_ref(const json& j, const std::string& where) {
  const auto text = as_string(j, where);
  return wrap(where, [&] { return parse_ref(text); });
}

Actor as_actor(const json& j, const std::string& where) {
  const auto s = as_string(j, where);
  if (s == "organization") return Actor::Organization;
  if (s == "malware") return Actor::Malware;
  fail(where, "expected \"organization\" or \"malware\"");
}

ToolStatus as_tool_status(const json& j, const std::string& where) {
  const auto s = as_string(j, where);
  if (s == "enabled") return ToolStatus::Enabled;
  if (s == "disabled") return ToolStatus::Disabled;
  fail(where, "expected \"enabled\" or \"disabled\"");
}

/// Object accessor that remembers which keys were read so leftovers can be
/// rejected.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) fail(where_, "expected an object");
  }

  std::string path(std::string_view key) const { return where_ + "." + std::string(key); }

  const json* find(std::string_view key) {
    auto it = j_.find(std::string(key));
    if (it == j_.end()) return nullptr;
    used_.insert(std::string(key));
    return &*it;
  }

  const json& at(std::string_view key) {
    const json* v = find(key);
    if (!v) fail(where_, "missing key '" + std::string(key) + "'");
    return *v;
  }

  std::string str(std::string_view key) { return as_string(at(key), path(key)); }
  std::string str_or(std::string_view key, std::string def) {
    const json* v = find(key);
    return v ? as_string(*v, path(key)) : std::move(def);
  }
  bool flag_or(std::string_view key, bool def) {
    const json* v = find(key);
    return v ? as_bool(*v, path(key)) : def;
  }
  bool flag(std::string_view key) { return as_bool(at(key), path(key)); }
  std::uint64_t u64(std::string_view key) { return as_u64(at(key), path(key)); }
  std::uint64_t u64_or(std::string_view key, std::uint64_t def) {
    const json* v = find(key);
    return v ? as_u64(*v, path(key)) : def;
  }
  std::optional<std::uint64_t> opt_u64(std::string_view key) {
    const json* v = find(key);
    if (!v || v->is_null()) return std::nullopt;
    return as_u64(*v, path(key));
  }
  std::optional<ProcessId> opt_pid(std::string_view key) {
    const json* v = find(key);
    if (!v || v->is_null()) return std::nullopt;
    return as_pid(*v, path(key));
  }
  std::optional<Scalar> opt_scalar(std::string_view key) {
    const json* v = find(key);
    if (!v || v->is_null()) return std::nullopt;
    return scalar_from_json(*v, path(key));
  }
  const json& array(std::string_view key) { return as_array(at(key), path(key)); }
  const json* opt_array(std::string_view key) {
    const json* v = find(key);
    if (v) as_array(*v, path(key));
    return v;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.contains(it.key())) fail(where_, "unknown key '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

std::string index(const std::string& where, std::size_t i) { return where + "[" + std::to_string(i) + "]"; }

json opt_to_json(const std::optional<Scalar>& v) { return v ? to_json(*v) : json(nullptr); }

template <class T>
json opt_num(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

// ---------------------------------------------------------------------------
// Host entities

ProcessEntry process_from_json(const json& j, const std::string& where, bool with_lineage) {
  ObjectReader r(j, where);
  ProcessEntry p;
  p.pid = as_pid(r.at("pid"), r.path("pid"));
  p.name = r.str("name");
  p.image_path = r.str_or("image", "");
  p.hidden = r.flag_or("hidden", false);
  p.locked = r.flag_or("locked", false);
  if (const json* o = r.find("owner")) p.owner = as_actor(*o, r.path("owner"));
  p.alive = r.flag_or("alive", true);
  p.lineage = p.pid;
  if (with_lineage) p.lineage = as_pid(r.at("lineage"), r.path("lineage"));
  r.finish();
  return p;
}

json to_json(const ProcessEntry& p) {
  return {{"pid", p.pid.value}, {"name", p.name},     {"image", p.image_path},
          {"hidden", p.hidden}, {"locked", p.locked}, {"owner", std::string(to_string(p.owner))},
          {"alive", p.alive},   {"lineage", p.lineage.value}};
}

ServiceEntry service_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  ServiceEntry s;
  s.service_id = r.str("id");
  s.running = r.flag_or("running", true);
  s.locked = r.flag_or("locked", false);
  s.desired_running = r.flag_or("desired_running", true);
  r.finish();
  return s;
}

json to_json(const ServiceEntry& s) {
  return {{"id", s.service_id}, {"running", s.running}, {"locked", s.locked}, {"desired_running", s.desired_running}};
}

RegistryKey registry_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  RegistryKey k;
  k.path = r.str("path");
  k.value = r.opt_scalar("value");
  k.exists = r.flag_or("exists", true);
  k.locked = r.flag_or("locked", false);
  k.desired_value = r.opt_scalar("desired");
  r.finish();
  return k;
}

json to_json(const RegistryKey& k) {
  return {{"path", k.path},
          {"value", opt_to_json(k.value)},
          {"exists", k.exists},
          {"locked", k.locked},
          {"desired", opt_to_json(k.desired_value)}};
}

FileEntry file_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  FileEntry f;
  f.path = r.str("path");
  f.content_id = r.str_or("content", "");
  f.hidden = r.flag_or("hidden", false);
  f.locked = r.flag_or("locked", false);
  r.finish();
  return f;
}

json to_json(const FileEntry& f) {
  return {{"path", f.path}, {"content", f.content_id}, {"hidden", f.hidden}, {"locked", f.locked}};
}

StartupEntry startup_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  StartupEntry e;
  e.entry_id = r.str("id");
  e.target = r.str("target");
  e.locked = r.flag_or("locked", false);
  r.finish();
  return e;
}

json to_json(const StartupEntry& e) { return {{"id", e.entry_id}, {"target", e.target}, {"locked", e.locked}}; }

std::pair<ToolId, ToolStatus> tool_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  ToolId id = r.str("id");
  ToolStatus status = ToolStatus::Enabled;
  if (const json* s = r.find("status")) status = as_tool_status(*s, r.path("status"));
  r.finish();
  return {std::move(id), status};
}

template <class T, class F>
std::vector<T> read_list(ObjectReader& r, std::string_view key, F&& one) {
  std::vector<T> out;
  if (const json* arr = r.opt_array(key)) {
    for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(one((*arr)[i], index(r.path(key), i)));
  }
  return out;
}

HostSpec host_spec_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  HostSpec spec;
  spec.processes = read_list<ProcessEntry>(
      r, "processes", [](const json& e, const std::string& w) { return process_from_json(e, w, false); });
  spec.services = read_list<ServiceEntry>(r, "services", service_from_json);
  spec.registry = read_list<RegistryKey>(r, "registry", registry_from_json);
  spec.files = read_list<FileEntry>(r, "files", file_from_json);
  spec.startup_entries = read_list<StartupEntry>(r, "startup", startup_from_json);
  spec.support_tools = read_list<std::pair<ToolId, ToolStatus>>(r, "tools", tool_from_json);
  r.finish();
  return spec;
}

// ---------------------------------------------------------------------------
// Attackers, guards, rules

ProcessMatcher matcher_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  ProcessMatcher m;
  const auto mode = r.str("mode");
  m.mode = wrap(r.path("mode"), [&] { return parse_matcher_mode(mode); });
  m.pattern = r.str("pattern");
  if (m.pattern.empty()) fail(r.path("pattern"), "must not be empty");
  r.finish();
  return m;
}

ScriptStep step_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  ScriptStep step;
  step.tick = r.u64("tick");
  const auto id = r.str("vector");
  const auto kind = wrap(r.path("vector"), [&] { return parse_vector_id(id); });
  switch (kind) {
    case VectorKind::DisableGuardLogic: step.vector = AttackVector::disable_guard_logic(r.str("service")); break;
    case VectorKind::ManipulateRegistry: {
      auto key = r.str("key");
      const bool del = r.flag_or("delete", false);
      auto value = r.opt_scalar("value");
      if (del == value.has_value()) fail(where, "capec-203 step needs exactly one of 'value' or 'delete': true");
      step.vector = del ? AttackVector::delete_registry_key(std::move(key))
                        : AttackVector::manipulate_registry(std::move(key), std::move(*value));
      break;
    }
    case VectorKind::TerminateExecutable:
      step.vector = AttackVector::terminate_executable(matcher_from_json(r.at("match"), r.path("match")));
      break;
    case VectorKind::DisableSupportTool: step.vector = AttackVector::disable_support_tool(r.str("tool")); break;
    case VectorKind::RemoveStartupEntry: step.vector = AttackVector::remove_startup_entry(r.str("entry")); break;
    case VectorKind::DeleteFile: step.vector = AttackVector::delete_file(r.str("file")); break;
  }
  r.finish();
  if (!well_formed(step.vector)) fail(where, "empty attack target");
  return step;
}

AttackScript attacker_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  AttackScript s;
  s.name = r.str_or("name", where);
  s.process = r.opt_pid("process");
  s.repeat = r.opt_u64("repeat");
  s.steps = read_list<ScriptStep>(r, "steps", step_from_json);
  r.finish();
  wrap(where, [&] {
    validate(s);
    return 0;
  });
  return s;
}

Trigger trigger_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  Trigger t;
  const auto mode = r.str("mode");
  t.mode = wrap(r.path("mode"), [&] { return parse_trigger_mode(mode); });
  if (t.mode == Trigger::Mode::Manual) {
    t.tick = r.u64("tick");
  }
  r.finish();
  return t;
}

GuardStrategy guard_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  GuardStrategy g;
  g.guard_id = r.str("id");
  const auto kind = r.str("kind");
  g.kind = wrap(r.path("kind"), [&] { return parse_guard_kind(kind); });
  g.targets = read_list<AttributeRef>(r, "targets", as_ref);
  g.trigger = trigger_from_json(r.at("trigger"), r.path("trigger"));
  g.schedule.poll_period = r.u64_or("poll_period", 1);
  g.schedule.phase = r.u64_or("phase", 0);
  g.schedule.iterations = r.opt_u64("iterations");
  g.host_process = r.opt_pid("host_process");
  g.deactivate_at = r.opt_u64("deactivate_at");

  switch (g.kind) {
    case GuardKind::RegistrySentinel: g.params = SentinelParams{r.opt_scalar("desired")}; break;
    case GuardKind::RedundantStartup: {
      RedundantStartupParams p;
      p.entries = read_list<StartupTemplate>(r, "entries", [](const json& e, const std::string& w) {
        ObjectReader er(e, w);
        StartupTemplate t{er.str("id"), er.str("target")};
        er.finish();
        return t;
      });
      g.params = std::move(p);
      break;
    }
    case GuardKind::AdversaryTerminator:
      g.params = TerminatorParams{read_list<ProcessMatcher>(r, "blocklist", matcher_from_json)};
      break;
    default: g.params = std::monostate{}; break;
  }
  r.finish();
  wrap(where, [&] {
    validate(g);
    return 0;
  });
  return g;
}

ScheduleOverride overrides_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  ScheduleOverride o;
  o.poll_period = r.opt_u64("poll_period");
  o.phase = r.opt_u64("phase");
  o.iterations = r.opt_u64("iterations");
  r.finish();
  return o;
}

Rule rule_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  Rule rule;
  rule.rule_id = r.str("id");
  rule.priority = as_i64(r.at("priority"), r.path("priority"));
  {
    ObjectReader w(r.at("when"), r.path("when"));
    rule.condition.vectors = read_list<std::string>(w, "vectors", [](const json& e, const std::string& p) {
      auto id = as_string(e, p);
      wrap(p, [&] { return parse_vector_id(id); });
      return id;
    });
    rule.condition.target = w.str_or("target", "*");
    rule.condition.count = w.u64_or("count", 1);
    rule.condition.window = w.u64_or("window", 1);
    w.finish();
  }
  rule.guard_id = r.str("activate");
  rule.immediate = r.flag_or("immediate", false);
  if (const json* o = r.find("overrides")) rule.overrides = overrides_from_json(*o, r.path("overrides"));
  r.finish();
  return rule;
}

ProtectedAttribute protected_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  ProtectedAttribute pa;
  pa.attribute = as_ref(r.at("attribute"), r.path("attribute"));
  // null is a legal desired value: the attribute should be absent.
  const json& desired = r.at("desired");
  if (!desired.is_null()) pa.desired = scalar_from_json(desired, r.path("desired"));
  r.finish();
  return pa;
}

// ---------------------------------------------------------------------------
// Report pieces

json to_json(const AttributeResult& a) {
  return {{"attribute", format_ref(a.attribute)},
          {"desired", opt_to_json(a.desired)},
          {"observed", opt_to_json(a.observed)},
          {"pass", a.pass}};
}

AttributeResult attribute_result_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  AttributeResult a;
  a.attribute = as_ref(r.at("attribute"), r.path("attribute"));
  r.at("desired");
  r.at("observed");
  a.desired = r.opt_scalar("desired");
  a.observed = r.opt_scalar("observed");
  a.pass = r.flag("pass");
  r.finish();
  return a;
}

json to_json(const AttributeHistory& h) {
  json restorations = json::array();
  for (const auto& rs : h.restorations) {
    json latency = rs.restored_tick ? json(*rs.restored_tick - rs.attack_tick) : json(nullptr);
    restorations.push_back(
        {{"attack_tick", rs.attack_tick}, {"restored_tick", opt_num(rs.restored_tick)}, {"latency", latency}});
  }
  return {{"attribute", format_ref(h.attribute)},
          {"downtime_ticks", h.downtime_ticks},
          {"restorations", std::move(restorations)},
          {"samples", h.in_desired_state}};
}

AttributeHistory history_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  AttributeHistory h;
  h.attribute = as_ref(r.at("attribute"), r.path("attribute"));
  h.downtime_ticks = r.u64("downtime_ticks");
  h.restorations = read_list<Restoration>(r, "restorations", [](const json& e, const std::string& w) {
    ObjectReader er(e, w);
    Restoration rs;
    rs.attack_tick = er.u64("attack_tick");
    er.at("restored_tick");
    rs.restored_tick = er.opt_u64("restored_tick");
    er.find("latency");
    er.finish();
    return rs;
  });
  h.in_desired_state = read_list<bool>(r, "samples", as_bool);
  r.finish();
  return h;
}

json to_json(const RiskCell& c) { return {{"level", std::string(to_string(c.level))}, {"narrative", c.narrative}}; }

RiskCell risk_cell_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  RiskCell c;
  const auto level = r.str("level");
  c.level = wrap(r.path("level"), [&] { return parse_risk_level(level); });
  c.narrative = r.str("narrative");
  r.finish();
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------

json to_json(const Scalar& s) {
  return std::visit(Overloaded{
                        [](bool b) { return json(b); },
                        [](std::int64_t i) { return json(i); },
                        [](const std::string& str) { return json(str); },
                    },
                    s);
}

Scalar scalar_from_json(const json& j, const std::string& where) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_integer()) return as_i64(j, where);
  if (j.is_string()) return j.get<std::string>();
  fail(where, "expected a boolean, integer or string value");
}

json to_json(const HostState& host) {
  json processes = json::array();
  for (const auto& [pid, p] : host.processes) processes.push_back(to_json(p));
  json services = json::array();
  for (const auto& [id, s] : host.services) services.push_back(to_json(s));
  json registry = json::array();
  for (const auto& [path, k] : host.registry) registry.push_back(to_json(k));
  json files = json::array();
  for (const auto& [path, f] : host.files) files.push_back(to_json(f));
  json startup = json::array();
  for (const auto& [id, e] : host.startup_entries) startup.push_back(to_json(e));
  json tools = json::array();
  for (const auto& [id, status] : host.support_tools) {
    tools.push_back({{"id", id}, {"status", std::string(to_string(status))}});
  }
  return {{"tick", host.tick},          {"processes", std::move(processes)}, {"services", std::move(services)},
          {"registry", std::move(registry)}, {"files", std::move(files)},         {"startup", std::move(startup)},
          {"tools", std::move(tools)}};
}

HostState host_state_from_json(const json& j) {
  ObjectReader r(j, "state");
  HostState host;
  host.tick = r.u64("tick");
  for (auto& p : read_list<ProcessEntry>(
           r, "processes", [](const json& e, const std::string& w) { return process_from_json(e, w, true); })) {
    host.processes.emplace(p.pid, std::move(p));
  }
  for (auto& s : read_list<ServiceEntry>(r, "services", service_from_json)) host.services.emplace(s.service_id, s);
  for (auto& k : read_list<RegistryKey>(r, "registry", registry_from_json)) host.registry.emplace(k.path, k);
  for (auto& f : read_list<FileEntry>(r, "files", file_from_json)) host.files.emplace(f.path, f);
  for (auto& e : read_list<StartupEntry>(r, "startup", startup_from_json)) host.startup_entries.emplace(e.entry_id, e);
  for (auto& [id, status] : read_list<std::pair<ToolId, ToolStatus>>(r, "tools", tool_from_json)) {
    host.support_tools.emplace(id, status);
  }
  r.finish();
  return host;
}

json to_json(const Mutation& m) {
  json j{{"kind", std::string(to_string(m.kind))},
         {"target", format_ref(m.target)},
         {"actor", std::string(to_string(m.actor))},
         {"source", format_source(m.source)}};
  std::visit(Overloaded{
                 [](const NoPayload&) {},
                 [&](bool b) { j["payload"] = b; },
                 [&](const Scalar& s) { j["payload"] = to_json(s); },
                 [&](const std::string& s) { j["payload"] = s; },
                 [&](const SpawnSpec& s) {
                   j["payload"] = {{"name", s.name},     {"image", s.image_path},
                                   {"hidden", s.hidden}, {"locked", s.locked},
                                   {"owner", std::string(to_string(s.owner))}, {"lineage", s.lineage.value}};
                 },
                 [&](ToolStatus s) { j["payload"] = std::string(to_string(s)); },
             },
             m.payload);
  return j;
}

Mutation mutation_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  Mutation m;
  const auto kind = r.str("kind");
  m.kind = wrap(r.path("kind"), [&] { return parse_mutation_kind(kind); });
  m.target = as_ref(r.at("target"), r.path("target"));
  m.actor = as_actor(r.at("actor"), r.path("actor"));
  const auto source = r.str("source");
  m.source = wrap(r.path("source"), [&] { return parse_source(source); });
  const std::string pw = r.path("payload");

  switch (m.kind) {
    case MutationKind::SetServiceRunning:
    case MutationKind::SetHidden:
    case MutationKind::SetLocked:
      m.payload = as_bool(r.at("payload"), pw);
      break;
    case MutationKind::SetRegistryValue: m.payload = scalar_from_json(r.at("payload"), pw); break;
    case MutationKind::RenameProcess:
    case MutationKind::CopyFile:
    case MutationKind::AddStartupEntry:
      m.payload = Payload{as_string(r.at("payload"), pw)};
      break;
    case MutationKind::SpawnProcess: {
      ObjectReader sr(r.at("payload"), pw);
      SpawnSpec s;
      s.name = sr.str("name");
      s.image_path = sr.str("image");
      s.hidden = sr.flag("hidden");
      s.locked = sr.flag("locked");
      s.owner = as_actor(sr.at("owner"), sr.path("owner"));
      s.lineage = as_pid(sr.at("lineage"), sr.path("lineage"));
      sr.finish();
      m.payload = std::move(s);
      break;
    }
    case MutationKind::SetToolStatus: m.payload = as_tool_status(r.at("payload"), pw); break;
    default: m.payload = NoPayload{}; break;
  }
  r.finish();
  if (!well_formed(m)) fail(where, "target does not fit mutation kind");
  return m;
}

json to_json(const LogEntry& e) {
  json j{{"tick", e.tick}, {"phase", std::string(to_string(e.phase))}};
  std::visit(Overloaded{
                 [&](const MutationRecord& m) {
                   j["type"] = "mutation";
                   j["mutation"] = to_json(m.mutation);
                   j["result"] = std::string(to_string(m.result));
                   j["reason"] = m.reason;
                 },
                 [&](const CheckRecord& c) {
                   j["type"] = "check";
                   j["attribute"] = format_ref(c.attribute);
                   j["desired"] = opt_to_json(c.desired);
                   j["observed"] = opt_to_json(c.observed);
                   j["pass"] = c.pass;
                 },
                 [&](const ActivationRecord& a) {
                   j["type"] = "activation";
                   j["guard"] = a.guard_id;
                   j["rule"] = a.rule_id;
                   j["effective_tick"] = a.effective_tick;
                 },
                 [&](const GuardFailureRecord& g) {
                   j["type"] = "guard-failure";
                   j["guard"] = g.guard_id;
                   j["reason"] = g.reason;
                 },
             },
             e.detail);
  return j;
}

LogEntry log_entry_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  LogEntry e;
  e.tick = r.u64("tick");
  const auto phase = r.str("phase");
  e.phase = wrap(r.path("phase"), [&] { return parse_phase(phase); });
  const auto type = r.str("type");
  if (type == "mutation") {
    MutationRecord m;
    m.mutation = mutation_from_json(r.at("mutation"), r.path("mutation"));
    const auto result = r.str("result");
    m.result = wrap(r.path("result"), [&] { return parse_result(result); });
    m.reason = r.str("reason");
    e.detail = std::move(m);
  } else if (type == "check") {
    CheckRecord c;
    c.attribute = as_ref(r.at("attribute"), r.path("attribute"));
    r.at("desired");
    r.at("observed");
    c.desired = r.opt_scalar("desired");
    c.observed = r.opt_scalar("observed");
    c.pass = r.flag("pass");
    e.detail = std::move(c);
  } else if (type == "activation") {
    e.detail = ActivationRecord{r.str("guard"), r.str("rule"), r.u64("effective_tick")};
  } else if (type == "guard-failure") {
    e.detail = GuardFailureRecord{r.str("guard"), r.str("reason")};
  } else {
    fail(r.path("type"), "unknown entry type '" + type + "'");
  }
  r.finish();
  return e;
}

json to_json(const ScenarioReport& rep) {
  json pre = json::array();
  for (const auto& a : rep.pretest) pre.push_back(to_json(a));
  json post = json::array();
  for (const auto& a : rep.posttest) post.push_back(to_json(a));
  json attrs = json::array();
  for (const auto& h : rep.attributes) attrs.push_back(to_json(h));
  json defeats = json::array();
  for (const auto& d : rep.guard_defeats) defeats.push_back({{"guard", d.guard_id}, {"tick", d.tick}, {"reason", d.reason}});
  json log = json::array();
  for (const auto& e : rep.log.entries) log.push_back(to_json(e));

  return {
      {"schema", std::string(kReportSchema)},
      {"scenario", rep.scenario},
      {"seed", rep.seed},
      {"run_length", rep.run_length},
      {"pretest", std::move(pre)},
      {"posttest", std::move(post)},
      {"attributes", std::move(attrs)},
      {"guard_defeats", std::move(defeats)},
      {"control_score", rep.control_score},
      {"control",
       {{"holder", std::string(to_string(rep.control.holder))},
        {"score", rep.control.control_score},
        {"threshold", rep.control.threshold}}},
      {"risk",
       {{"confidentiality", to_json(rep.risk.confidentiality)},
        {"integrity", to_json(rep.risk.integrity)},
        {"availability", to_json(rep.risk.availability)}}},
      {"log", std::move(log)},
      {"final_state", to_json(rep.final_state)},
  };
}

ScenarioReport report_from_json(const json& j) {
  ObjectReader r(j, "report");
  const auto schema = r.str("schema");
  if (schema != kReportSchema) fail(r.path("schema"), "unsupported schema '" + schema + "'");
  ScenarioReport rep;
  rep.scenario = r.str("scenario");
  rep.seed = r.u64("seed");
  rep.run_length = r.u64("run_length");
  rep.pretest = read_list<AttributeResult>(r, "pretest", attribute_result_from_json);
  rep.posttest = read_list<AttributeResult>(r, "posttest", attribute_result_from_json);
  rep.attributes = read_list<AttributeHistory>(r, "attributes", history_from_json);
  rep.guard_defeats = read_list<GuardDefeat>(r, "guard_defeats", [](const json& e, const std::string& w) {
    ObjectReader er(e, w);
    GuardDefeat d{er.str("guard"), er.u64("tick"), er.str("reason")};
    er.finish();
    return d;
  });
  rep.control_score = as_double(r.at("control_score"), r.path("control_score"));
  {
    ObjectReader cr(r.at("control"), r.path("control"));
    const auto holder = cr.str("holder");
    rep.control.holder = wrap(cr.path("holder"), [&] { return parse_control_holder(holder); });
    rep.control.control_score = as_double(cr.at("score"), cr.path("score"));
    rep.control.threshold = as_double(cr.at("threshold"), cr.path("threshold"));
    cr.finish();
  }
  {
    ObjectReader rr(r.at("risk"), r.path("risk"));
    rep.risk.confidentiality = risk_cell_from_json(rr.at("confidentiality"), rr.path("confidentiality"));
    rep.risk.integrity = risk_cell_from_json(rr.at("integrity"), rr.path("integrity"));
    rep.risk.availability = risk_cell_from_json(rr.at("availability"), rr.path("availability"));
    rr.finish();
  }
  rep.log.entries = read_list<LogEntry>(r, "log", log_entry_from_json);
  rep.final_state = host_state_from_json(r.at("final_state"));
  r.finish();
  return rep;
}

ScenarioSpec scenario_from_json(const json& j) {
  ObjectReader r(j, "scenario");
  ScenarioSpec spec;
  spec.name = r.str_or("name", "");
  spec.host = host_spec_from_json(r.at("host"), r.path("host"));
  spec.attackers = read_list<AttackScript>(r, "attackers", attacker_from_json);
  spec.guards = read_list<GuardStrategy>(r, "guards", guard_from_json);
  spec.rulebook.rules = read_list<Rule>(r, "rules", rule_from_json);
  spec.protected_attributes = read_list<ProtectedAttribute>(r, "protected", protected_from_json);
  {
    ObjectReader run(r.at("run"), r.path("run"));
    spec.run_length = run.u64("length");
    spec.seed = run.u64_or("seed", 0);
    if (const json* t = run.find("control_threshold")) {
      spec.control_threshold = as_double(*t, run.path("control_threshold"));
    }
    run.finish();
  }
  r.finish();
  validate(spec);
  return spec;
}

ScenarioSpec parse_scenario(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw SpecError(std::string("malformed JSON at byte ") + std::to_string(e.byte) + ": " + e.what());
  }
  return scenario_from_json(j);
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open scenario file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const SpecError& e) {
    throw SpecError(path + ": " + e.what());
  }
}

void write_log(std::ostream& out, const ScenarioReport& report) {
  out << json{{"schema", std::string(kLogSchema)}, {"scenario", report.scenario}, {"seed", report.seed}}.dump() << '\n';
  for (const auto& e : report.log.entries) out << to_json(e).dump() << '\n';
  out << json{{"final_state", to_json(report.final_state)}}.dump() << '\n';
}

RecordedLog read_log(std::istream& in) {
  RecordedLog rec;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  bool have_final = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (have_final) fail(where, "content after final state");
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(where, std::string("malformed JSON: ") + e.what());
    }
    if (!have_header) {
      ObjectReader r(j, where);
      const auto schema = r.str("schema");
      if (schema != kLogSchema) fail(where, "unsupported log schema '" + schema + "'");
      rec.scenario = r.str("scenario");
      rec.seed = r.u64("seed");
      r.finish();
      have_header = true;
    } else if (j.is_object() && j.contains("final_state")) {
      ObjectReader r(j, where);
      rec.final_state = host_state_from_json(r.at("final_state"));
      r.finish();
      have_final = true;
    } else {
      rec.log.entries.push_back(log_entry_from_json(j, where));
    }
  }
  if (!have_header) throw SpecError("event log is empty");
  if (!have_final) throw SpecError("event log has no final state trailer");
  return rec;
}

}  // namespace selfguard::io
