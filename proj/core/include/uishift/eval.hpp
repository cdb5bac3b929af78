#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uishift/action.hpp"

namespace uishift {

struct GroundingRecord {
  std::string id;
  BBox bbox;
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::vector<std::string> tags;  // split names, e.g. "mobile", "icon"
};

struct AutomationRecord {
  std::string id;
  GoldTarget gold;
  std::optional<Action> predicted;  // absent: the model output did not parse
  std::vector<std::string> tags;
};

// Raw counts; every accuracy is derived from them. Accuracies over an empty
// denominator are nullopt.
struct SplitCounts {
  std::size_t count = 0;
  std::size_t type_correct = 0;
  std::size_t grounding_total = 0;  // grounding task: every record; automation: click/click pairs
  std::size_t grounding_correct = 0;
  std::size_t success = 0;

  std::optional<double> type_accuracy() const;
  std::optional<double> grounding_accuracy() const;
  std::optional<double> success_rate() const;

  SplitCounts& operator+=(const SplitCounts& o);
  bool operator==(const SplitCounts&) const = default;
};

enum class EvalTask { kGrounding, kAutomation };

std::string_view eval_task_name(EvalTask t);
std::optional<EvalTask> eval_task_from_name(std::string_view name);

struct MetricsReport {
  EvalTask task = EvalTask::kAutomation;
  SplitCounts overall;
  std::map<std::string, SplitCounts> splits;
  std::string tool_version;
  std::string input_digest;  // sha256 of the input bytes, empty for in-memory records

  bool operator==(const MetricsReport&) const = default;
};

// Both throw InvalidArgumentError on an empty record list.
MetricsReport eval_grounding(std::span<const GroundingRecord> records);
// Throws CorruptGoldError when a click gold has no bbox.
MetricsReport eval_automation(std::span<const AutomationRecord> records);

// JSONL readers. Grounding lines:
//   {"id", "bbox": [x0,y0,x1,y1], "point": [x,y], "tags": [...]}
// Automation lines:
//   {"id", "gold": {"action", "bbox"}, "predicted": action|null, "tags": [...]}
// or, instead of "predicted", a raw model "output" string plus "mode"
// ("enabled"|"free"), which is parsed here. Malformed lines throw SchemaError;
// a click gold without bbox throws CorruptGoldError naming the line.
std::vector<GroundingRecord> parse_grounding_jsonl(std::string_view text, const std::string& file = "<memory>");
std::vector<AutomationRecord> parse_automation_jsonl(std::string_view text,
                                                     const std::string& file = "<memory>");

// Reads, evaluates and stamps version and input digest.
MetricsReport eval_file(EvalTask task, const std::filesystem::path& in);

std::string report_to_json(const MetricsReport& r);
// One row per split, "overall" first.
std::string report_to_csv(const MetricsReport& r);

}  // namespace uishift
