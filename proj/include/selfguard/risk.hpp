#pragma once

#include <string>
#include <string_view>

namespace selfguard {

enum class ControlHolder { OrganizationMoreControl, MalwareMoreControl };

std::string_view to_string(ControlHolder h);
ControlHolder parse_control_holder(std::string_view s);

inline constexpr double kDefaultControlThreshold = 0.5;

struct ControlState {
  ControlHolder holder = ControlHolder::OrganizationMoreControl;
  double control_score = 1.0;
  double threshold = kDefaultControlThreshold;
  bool operator==(const ControlState&) const = default;
};

/// holder is the organization iff score >= threshold.
ControlState control_from_score(double score, double threshold = kDefaultControlThreshold);

enum class RiskLevel { Reduced, Elevated };

std::string_view to_string(RiskLevel l);
RiskLevel parse_risk_level(std::string_view s);

struct RiskCell {
  RiskLevel level = RiskLevel::Reduced;
  std::string narrative;
  bool operator==(const RiskCell&) const = default;
};

struct RiskAssessment {
  RiskCell confidentiality;
  RiskCell integrity;
  RiskCell availability;
  bool operator==(const RiskAssessment&) const = default;
};

/// Table lookup of the organizational risk row for the control holder.
RiskAssessment assess_risk(const ControlState& control);

}  // namespace selfguard
