#include "floc/decision.hpp"

#include <algorithm>
#include <cmath>

namespace floc::decision {

void check(const RuleConfig& c) {
  auto bad_range = [](const Range& r) {
    return !std::isfinite(r.min) || !std::isfinite(r.max) || !(r.min < r.max);
  };
  if (bad_range(c.ph_range)) throw InvalidConfig("rules.ph_range needs min < max");
  if (bad_range(c.temp_range)) throw InvalidConfig("rules.temp_range needs min < max");
  if (!std::isfinite(c.floc_max) || c.floc_max < 0.0)
    throw InvalidConfig("rules.floc_max must be finite and >= 0");
  for (std::size_t k = 1; k < kNumClasses; ++k)
    if (c.class_severity[k] > c.class_severity[k - 1])
      throw InvalidConfig("rules.class_severity must not increase with DO class");
  for (auto id : {rule::kLowDo, rule::kFlocHigh, rule::kPhLow, rule::kPhHigh, rule::kTempRange}) {
    const auto it = c.actions.find(id);
    if (it == c.actions.end() || it->second.empty())
      throw InvalidConfig("rules.actions has no text for rule '" + std::string(id) + "'");
  }
}

Advisory evaluate(const SensorFrame& frame, DoClass predicted, const Probabilities& probabilities,
                  const RuleConfig& c) {
  check(c);
  Advisory a;
  a.device_id = frame.device_id;
  a.timestamp = frame.timestamp;
  a.predicted_class = predicted;
  a.probabilities = probabilities;

  auto fire = [&](std::string_view id, Severity s) {
    a.triggered_rules.emplace_back(id);
    a.actions.push_back(c.actions.find(id)->second);
    a.severity = std::max(a.severity, s);
  };

  const auto& s = frame.sample;
  const auto class_sev = c.class_severity[static_cast<std::size_t>(predicted)];
  if (class_sev > Severity::Info) fire(rule::kLowDo, class_sev);
  if (s.floc > c.floc_max) fire(rule::kFlocHigh, Severity::Warning);
  if (s.ph < c.ph_range.min) fire(rule::kPhLow, Severity::Warning);
  if (s.ph > c.ph_range.max) fire(rule::kPhHigh, Severity::Warning);
  if (s.temp < c.temp_range.min || s.temp > c.temp_range.max) fire(rule::kTempRange, Severity::Warning);

  if (a.triggered_rules.empty()) a.actions.emplace_back(kNoAction);
  return a;
}

}  // namespace floc::decision
