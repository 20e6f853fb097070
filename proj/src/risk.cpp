#include "selfguard/risk.hpp"

#include "selfguard/errors.hpp"

namespace selfguard {

std::string_view to_string(ControlHolder h) {
  return h == ControlHolder::OrganizationMoreControl ? "organization-more-control" : "malware-more-control";
}

ControlHolder parse_control_holder(std::string_view s) {
  if (s == "organization-more-control") return ControlHolder::OrganizationMoreControl;
  if (s == "malware-more-control") return ControlHolder::MalwareMoreControl;
  throw SpecError("unknown control holder '" + std::string(s) + "'");
}

std::string_view to_string(RiskLevel l) { return l == RiskLevel::Reduced ? "reduced" : "elevated"; }

RiskLevel parse_risk_level(std::string_view s) {
  if (s == "reduced") return RiskLevel::Reduced;
  if (s == "elevated") return RiskLevel::Elevated;
  throw SpecError("unknown risk level '" + std::string(s) + "'");
}

ControlState control_from_score(double score, double threshold) {
  return {score >= threshold ? ControlHolder::OrganizationMoreControl : ControlHolder::MalwareMoreControl, score,
          threshold};
}

RiskAssessment assess_risk(const ControlState& control) {
  // Narratives are reproduced verbatim, spelling included.
  if (control.holder == ControlHolder::OrganizationMoreControl) {
    constexpr auto r = RiskLevel::Reduced;
    return {
        {r, "Reduces data leakage Protects confidentiality"},
        {r, "Improves security posture Improves reliability of IT assets"},
        {r, "Improves resiliency Enhances business continuity"},
    };
  }
  constexpr auto e = RiskLevel::Elevated;
  return {
      {e, "Increases data leakage Losses confidentiality"},
      {e, "Degrades security posture Degrades reliability of IT assets"},
      {e, "Degrades resiliency Affects business continuity"},
  };
}

}  // namespace selfguard
