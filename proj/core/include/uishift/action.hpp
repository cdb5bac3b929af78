#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "uishift/error.hpp"

namespace uishift {

// Five-action GUI space. Each variant carries exactly the parameters that
// appear in its canonical JSON form.

struct Click {
  std::int64_t x = 0;
  std::int64_t y = 0;
  bool operator==(const Click&) const = default;
};

enum class Direction { kUp, kDown, kLeft, kRight };

struct Scroll {
  Direction direction = Direction::kUp;
  bool operator==(const Scroll&) const = default;
};

struct OpenApp {
  std::string app_name;
  bool operator==(const OpenApp&) const = default;
};

struct NavigateBack {
  bool operator==(const NavigateBack&) const = default;
};

struct InputText {
  std::string text;
  bool operator==(const InputText&) const = default;
};

using Action = std::variant<Click, Scroll, OpenApp, NavigateBack, InputText>;

enum class ActionType { kClick, kScroll, kOpenApp, kNavigateBack, kInputText };

inline constexpr int kNumActionTypes = 5;

ActionType action_type(const Action& a);
std::string_view action_type_name(ActionType t);
std::optional<ActionType> action_type_from_name(std::string_view name);

std::string_view direction_name(Direction d);
std::optional<Direction> direction_from_name(std::string_view name);

// Inclusive pixel rectangle in screenshot coordinates.
struct BBox {
  std::int64_t x_min = 0;
  std::int64_t y_min = 0;
  std::int64_t x_max = 0;
  std::int64_t y_max = 0;

  bool valid() const {
    return x_min >= 0 && y_min >= 0 && x_min <= x_max && y_min <= y_max;
  }
  bool contains(std::int64_t x, std::int64_t y) const {
    return x_min <= x && x <= x_max && y_min <= y && y <= y_max;
  }
  std::int64_t area() const { return (x_max - x_min + 1) * (y_max - y_min + 1); }
  bool operator==(const BBox&) const = default;
};

// Ground truth for one decision: the action, plus the target element's box
// when the action is a click.
struct GoldTarget {
  Action action;
  std::optional<BBox> bbox;

  // Throws CorruptGoldError when bbox presence disagrees with the variant.
  void validate() const;
  bool operator==(const GoldTarget&) const = default;
};

enum class ReasoningMode { kReasoningEnabled, kReasoningFree };

std::string_view reasoning_mode_name(ReasoningMode m);
// Accepts "enabled"/"free" as well as the long names.
std::optional<ReasoningMode> reasoning_mode_from_name(std::string_view name);

struct ParsedOutput {
  bool format_ok = false;
  std::optional<std::string> think_text;
  std::optional<Action> answer_action;
  std::string raw;
};

// Never throws. format_ok reflects the mode's tag structure; answer_action is
// filled from the first well-formed answer block holding a valid action, even
// when the overall format is wrong.
ParsedOutput parse_model_output(std::string_view raw, ReasoningMode mode);

// Canonical compact JSON: action_type first, then the variant's parameters.
std::string serialize_action(const Action& a);

// Strict parse of a single action JSON object. Rejects unknown keys, missing
// keys, fractional or negative coordinates, and unknown directions.
std::optional<Action> parse_action(std::string_view json_text);

// Like parse_action but reports the reason.
Action parse_action_or_throw(std::string_view json_text);

// Wraps a serialized action in the tag structure the mode requires.
std::string wrap_answer(const Action& a, ReasoningMode mode,
                        std::string_view think = "");

// Click: point inside gold.bbox (inclusive). Scroll: same direction.
// open_app/input_text: equal after NFC normalization and whitespace trim.
// navigate_back: equal tags suffice. Throws CorruptGoldError for a click gold
// without a bbox.
bool match_action(const Action& pred, const GoldTarget& gold);

// NFC-normalized, whitespace-trimmed form used for string parameter matching.
std::string normalize_text(std::string_view s);

}  // namespace uishift
