#pragma once

// Rule table turning a classified reading into an Advisory.

#include <array>
#include <map>
#include <stdexcept>
#include <string>

#include "floc/datamodel.hpp"

namespace floc::decision {

namespace rule {
inline constexpr std::string_view kLowDo = "low_do";
inline constexpr std::string_view kFlocHigh = "floc_high";
inline constexpr std::string_view kPhLow = "ph_low";
inline constexpr std::string_view kPhHigh = "ph_high";
inline constexpr std::string_view kTempRange = "temp_out_of_range";
}  // namespace rule

inline constexpr std::string_view kNoAction = "no action required";

class InvalidConfig : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct RuleConfig {
  Range ph_range{6.5, 8.5};
  Range temp_range{25.0, 32.0};
  double floc_max = 100.0;
  /// Indexed by DoClass; must be non-increasing from class 0 to class 3.
  std::array<Severity, kNumClasses> class_severity{Severity::Critical, Severity::Warning,
                                                   Severity::Info, Severity::Info};
  std::map<std::string, std::string, std::less<>> actions{
      {std::string(rule::kLowDo), "increase aeration"},
      {std::string(rule::kFlocHigh), "filter out excess bioflocs"},
      {std::string(rule::kPhLow), "raise pH with baking soda in a safe amount"},
      {std::string(rule::kPhHigh), "partial water exchange; move fish before adjusting pH"},
      {std::string(rule::kTempRange), "adjust tank temperature"},
  };
};

/// Throws InvalidConfig describing the first problem.
void check(const RuleConfig& config);

/// Rules fire independently; severity is the maximum over the predicted
/// class's policy and any range violation (warning).
Advisory evaluate(const SensorFrame& frame, DoClass predicted, const Probabilities& probabilities,
                  const RuleConfig& config = {});

}  // namespace floc::decision
