#pragma once

#include <span>
#include <string>
#include <vector>

#include "uishift/action.hpp"

namespace uishift {

// Rule-based reward: binary format term plus binary accuracy term.
struct RewardBreakdown {
  int r_format = 0;
  int r_accuracy = 0;
  int total = 0;

  bool operator==(const RewardBreakdown&) const = default;
};

struct RewardOptions {
  ReasoningMode mode = ReasoningMode::kReasoningFree;
  // When set, accuracy is only credited to outputs that also pass the format
  // check. Off by default: the two terms are scored independently.
  bool gate_accuracy_on_format = false;
};

RewardBreakdown score(std::string_view raw, const GoldTarget& gold, const RewardOptions& opts);

inline RewardBreakdown score(std::string_view raw, const GoldTarget& gold, ReasoningMode mode) {
  return score(raw, gold, RewardOptions{mode, false});
}

// Element-wise score over a sampled group. Throws InvalidArgumentError on an
// empty group.
std::vector<RewardBreakdown> score_group(std::span<const std::string> raws, const GoldTarget& gold,
                                         const RewardOptions& opts);

inline std::vector<RewardBreakdown> score_group(std::span<const std::string> raws,
                                                const GoldTarget& gold, ReasoningMode mode) {
  return score_group(raws, gold, RewardOptions{mode, false});
}

std::vector<double> totals(std::span<const RewardBreakdown> rewards);

}  // namespace uishift
