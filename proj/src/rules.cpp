#include "selfguard/rules.hpp"

#include <algorithm>
#include <fnmatch.h>

#include "selfguard/errors.hpp"

namespace selfguard {

void validate(const Rulebook& book, const std::set<std::string>& guard_ids) {
  std::set<std::string> seen;
  for (const auto& r : book.rules) {
    const std::string where = "rule '" + r.rule_id + "': ";
    if (r.rule_id.empty()) throw SpecError("rule with empty id");
    if (!seen.insert(r.rule_id).second) throw SpecError("duplicate rule id '" + r.rule_id + "'");
    if (r.condition.window == 0) throw SpecError(where + "window must be >= 1");
    if (r.condition.count == 0) throw SpecError(where + "count must be >= 1");
    if (!guard_ids.contains(r.guard_id)) throw SpecError(where + "unknown guard '" + r.guard_id + "'");
    if (r.overrides.poll_period && *r.overrides.poll_period == 0) throw SpecError(where + "poll_period must be >= 1");
    if (r.overrides.iterations && *r.overrides.iterations == 0) throw SpecError(where + "iterations must be >= 1");
  }
}

std::vector<const Rule*> evaluation_order(const Rulebook& book) {
  std::vector<const Rule*> order;
  order.reserve(book.rules.size());
  for (const auto& r : book.rules) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const Rule* a, const Rule* b) { return a->priority > b->priority; });
  return order;
}

bool glob_match(std::string_view pattern, std::string_view text) {
  const std::string p(pattern);
  const std::string t(text);
  return fnmatch(p.c_str(), t.c_str(), FNM_NOESCAPE) == 0;
}

std::uint64_t matching_events(const RuleCondition& cond, std::span<const LogEntry> events, Tick now) {
  const Tick oldest = now + 1 >= cond.window ? now + 1 - cond.window : 0;
  std::uint64_t n = 0;
  for (const auto& e : events) {
    if (e.tick < oldest || e.tick > now) continue;
    const auto* rec = e.mutation();
    if (!rec || rec->mutation.source.kind != SourceKind::Attack) continue;
    if (!cond.vectors.empty() &&
        std::find(cond.vectors.begin(), cond.vectors.end(), rec->mutation.source.id) == cond.vectors.end()) {
      continue;
    }
    if (!glob_match(cond.target, format_ref(rec->mutation.target))) continue;
    ++n;
  }
  return n;
}

std::vector<Activation> evaluate_rules(const Rulebook& book, std::span<const LogEntry> events, Tick now,
                                       const std::set<std::string>& active_guards) {
  std::vector<Activation> out;
  std::set<std::string> claimed = active_guards;
  for (const Rule* r : evaluation_order(book)) {
    if (claimed.contains(r->guard_id)) continue;
    if (matching_events(r->condition, events, now) < r->condition.count) continue;
    claimed.insert(r->guard_id);
    out.push_back({r->rule_id, r->guard_id, r->overrides, r->immediate});
  }
  return out;
}

}  // namespace selfguard
