#include "uishift/reward.hpp"

namespace uishift {

RewardBreakdown score(std::string_view raw, const GoldTarget& gold, const RewardOptions& opts) {
  auto parsed = parse_model_output(raw, opts.mode);
  RewardBreakdown r;
  r.r_format = parsed.format_ok ? 1 : 0;
  bool eligible = !opts.gate_accuracy_on_format || parsed.format_ok;
  if (eligible && parsed.answer_action && match_action(*parsed.answer_action, gold)) {
    r.r_accuracy = 1;
  } else if (std::holds_alternative<Click>(gold.action) && !gold.bbox) {
    // Surface a corrupt gold even when no answer was extracted.
    throw CorruptGoldError("click gold target has no bbox");
  }
  r.total = r.r_format + r.r_accuracy;
  return r;
}

std::vector<RewardBreakdown> score_group(std::span<const std::string> raws, const GoldTarget& gold,
                                         const RewardOptions& opts) {
  if (raws.empty()) throw InvalidArgumentError("score_group needs at least one sample");
  std::vector<RewardBreakdown> out;
  out.reserve(raws.size());
  for (const auto& raw : raws) out.push_back(score(raw, gold, opts));
  return out;
}

std::vector<double> totals(std::span<const RewardBreakdown> rewards) {
  std::vector<double> out;
  out.reserve(rewards.size());
  for (const auto& r : rewards) out.push_back(static_cast<double>(r.total));
  return out;
}

}  // namespace uishift
