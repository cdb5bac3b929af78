#include "uishift/action.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <array>
#include <limits>

#include "json.hpp"
#include "text_util.hpp"

namespace uishift {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, kNumActionTypes> kTypeNames = {
    "click", "scroll", "open_app", "navigate_back", "input_text"};
constexpr std::array<std::string_view, 4> kDirectionNames = {"up", "down",
                                                             "left", "right"};

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool contains_any_tag(std::string_view s) {
  for (auto tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose}) {
    if (s.find(tag) != std::string_view::npos) return true;
  }
  return false;
}

// Parses `<answer>X</answer>` spanning the whole of `s`; X must be tag-free
// and hold a valid action.
std::optional<Action> whole_answer_block(std::string_view s) {
  if (!s.starts_with(kAnswerOpen) || !s.ends_with(kAnswerClose)) return std::nullopt;
  if (s.size() < kAnswerOpen.size() + kAnswerClose.size()) return std::nullopt;
  auto inner = s.substr(kAnswerOpen.size(),
                        s.size() - kAnswerOpen.size() - kAnswerClose.size());
  if (contains_any_tag(inner)) return std::nullopt;
  return parse_action(detail::trim_ascii(inner));
}

std::optional<std::int64_t> coordinate(const json& j) {
  if (j.is_number_unsigned()) {
    auto v = j.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      return std::nullopt;
    }
    return static_cast<std::int64_t>(v);
  }
  if (j.is_number_integer()) {
    auto v = j.get<std::int64_t>();
    if (v < 0) return std::nullopt;
    return v;
  }
  return std::nullopt;
}

// Returns an empty string on success, otherwise the rejection reason.
std::string action_from_json(const json& j, Action& out) {
  if (!j.is_object()) return "action must be a JSON object";
  auto it = j.find("action_type");
  if (it == j.end() || !it->is_string()) return "missing string 'action_type'";
  auto type = action_type_from_name(it->get_ref<const std::string&>());
  if (!type) return "unknown action_type '" + it->get<std::string>() + "'";

  auto expect_keys = [&](std::initializer_list<std::string_view> keys) -> std::string {
    if (j.size() != keys.size() + 1) return "unexpected extra keys";
    for (auto k : keys) {
      if (!j.contains(std::string(k))) return "missing key '" + std::string(k) + "'";
    }
    return {};
  };

  switch (*type) {
    case ActionType::kClick: {
      if (auto err = expect_keys({"x", "y"}); !err.empty()) return err;
      auto x = coordinate(j["x"]);
      auto y = coordinate(j["y"]);
      if (!x || !y) return "click coordinates must be non-negative integers";
      out = Click{*x, *y};
      return {};
    }
    case ActionType::kScroll: {
      if (auto err = expect_keys({"direction"}); !err.empty()) return err;
      const auto& d = j["direction"];
      if (!d.is_string()) return "direction must be a string";
      auto dir = direction_from_name(d.get_ref<const std::string&>());
      if (!dir) return "unknown direction '" + d.get<std::string>() + "'";
      out = Scroll{*dir};
      return {};
    }
    case ActionType::kOpenApp: {
      if (auto err = expect_keys({"app_name"}); !err.empty()) return err;
      const auto& v = j["app_name"];
      if (!v.is_string()) return "app_name must be a string";
      out = OpenApp{v.get<std::string>()};
      return {};
    }
    case ActionType::kNavigateBack: {
      if (auto err = expect_keys({}); !err.empty()) return err;
      out = NavigateBack{};
      return {};
    }
    case ActionType::kInputText: {
      if (auto err = expect_keys({"text"}); !err.empty()) return err;
      const auto& v = j["text"];
      if (!v.is_string()) return "text must be a string";
      out = InputText{v.get<std::string>()};
      return {};
    }
  }
  return "unreachable";
}

std::string parse_reason(std::string_view text, Action& out) {
  json j = json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return "not valid JSON";
  return action_from_json(j, out);
}

}  // namespace

ActionType action_type(const Action& a) { return static_cast<ActionType>(a.index()); }

std::string_view action_type_name(ActionType t) {
  return kTypeNames[static_cast<std::size_t>(t)];
}

std::optional<ActionType> action_type_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == name) return static_cast<ActionType>(i);
  }
  return std::nullopt;
}

std::string_view direction_name(Direction d) {
  return kDirectionNames[static_cast<std::size_t>(d)];
}

std::optional<Direction> direction_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kDirectionNames.size(); ++i) {
    if (kDirectionNames[i] == name) return static_cast<Direction>(i);
  }
  return std::nullopt;
}

void GoldTarget::validate() const {
  bool is_click = std::holds_alternative<Click>(action);
  if (is_click && !bbox) throw CorruptGoldError("click gold target has no bbox");
  if (!is_click && bbox) throw CorruptGoldError("non-click gold target carries a bbox");
  if (bbox && !bbox->valid()) throw CorruptGoldError("gold bbox is not a valid rectangle");
}

std::string_view reasoning_mode_name(ReasoningMode m) {
  return m == ReasoningMode::kReasoningEnabled ? "reasoning_enabled" : "reasoning_free";
}

std::optional<ReasoningMode> reasoning_mode_from_name(std::string_view name) {
  if (name == "enabled" || name == "reasoning_enabled") return ReasoningMode::kReasoningEnabled;
  if (name == "free" || name == "reasoning_free") return ReasoningMode::kReasoningFree;
  return std::nullopt;
}

ParsedOutput parse_model_output(std::string_view raw, ReasoningMode mode) {
  ParsedOutput out;
  out.raw = std::string(raw);

  // Answer extraction is independent of the structural check.
  for (std::size_t pos = 0;;) {
    auto open = raw.find(kAnswerOpen, pos);
    if (open == std::string_view::npos) break;
    auto body_start = open + kAnswerOpen.size();
    auto close = raw.find(kAnswerClose, body_start);
    if (close == std::string_view::npos) break;
    auto body = raw.substr(body_start, close - body_start);
    if (!contains_any_tag(body)) {
      if (auto a = parse_action(detail::trim_ascii(body))) {
        out.answer_action = std::move(a);
        break;
      }
    }
    pos = close + kAnswerClose.size();
  }

  if (auto t = raw.find(kThinkOpen); t != std::string_view::npos) {
    auto body_start = t + kThinkOpen.size();
    if (auto c = raw.find(kThinkClose, body_start); c != std::string_view::npos) {
      out.think_text = std::string(raw.substr(body_start, c - body_start));
    }
  }

  auto s = detail::trim_ascii(raw);
  if (mode == ReasoningMode::kReasoningFree) {
    out.format_ok = whole_answer_block(s).has_value();
  } else if (s.starts_with(kThinkOpen)) {
    auto close = s.find(kThinkClose, kThinkOpen.size());
    if (close != std::string_view::npos) {
      auto think = s.substr(kThinkOpen.size(), close - kThinkOpen.size());
      auto rest = detail::trim_ascii(s.substr(close + kThinkClose.size()));
      out.format_ok = !contains_any_tag(think) && whole_answer_block(rest).has_value();
    }
  }
  return out;
}

std::string serialize_action(const Action& a) {
  nlohmann::ordered_json j;
  j["action_type"] = action_type_name(action_type(a));
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Click>) {
          j["x"] = v.x;
          j["y"] = v.y;
        } else if constexpr (std::is_same_v<T, Scroll>) {
          j["direction"] = direction_name(v.direction);
        } else if constexpr (std::is_same_v<T, OpenApp>) {
          j["app_name"] = v.app_name;
        } else if constexpr (std::is_same_v<T, InputText>) {
          j["text"] = v.text;
        }
      },
      a);
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::optional<Action> parse_action(std::string_view json_text) {
  Action a;
  if (!parse_reason(json_text, a).empty()) return std::nullopt;
  return a;
}

Action parse_action_or_throw(std::string_view json_text) {
  Action a;
  if (auto err = parse_reason(json_text, a); !err.empty()) {
    throw InvalidArgumentError("invalid action: " + err);
  }
  return a;
}

std::string wrap_answer(const Action& a, ReasoningMode mode, std::string_view think) {
  std::string out;
  if (mode == ReasoningMode::kReasoningEnabled) {
    out.append(kThinkOpen).append(think).append(kThinkClose);
  }
  out.append(kAnswerOpen).append(serialize_action(a)).append(kAnswerClose);
  return out;
}

std::string normalize_text(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  auto in = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  icu::UnicodeString normalized;
  if (U_SUCCESS(status)) normalized = nfc->normalize(in, status);
  if (U_FAILURE(status)) normalized = in;

  int32_t begin = 0;
  int32_t end = normalized.length();
  while (begin < end && u_isUWhiteSpace(normalized.char32At(begin))) {
    begin = normalized.moveIndex32(begin, 1);
  }
  while (end > begin) {
    int32_t prev = normalized.moveIndex32(end, -1);
    if (!u_isUWhiteSpace(normalized.char32At(prev))) break;
    end = prev;
  }
  std::string out;
  normalized.tempSubStringBetween(begin, end).toUTF8String(out);
  return out;
}

bool match_action(const Action& pred, const GoldTarget& gold) {
  if (std::holds_alternative<Click>(gold.action) && !gold.bbox) {
    throw CorruptGoldError("click gold target has no bbox");
  }
  if (pred.index() != gold.action.index()) return false;
  return std::visit(
      [&](const auto& p) -> bool {
        using T = std::decay_t<decltype(p)>;
        const auto& g = std::get<T>(gold.action);
        if constexpr (std::is_same_v<T, Click>) {
          return gold.bbox->contains(p.x, p.y);
        } else if constexpr (std::is_same_v<T, Scroll>) {
          return p.direction == g.direction;
        } else if constexpr (std::is_same_v<T, OpenApp>) {
          return normalize_text(p.app_name) == normalize_text(g.app_name);
        } else if constexpr (std::is_same_v<T, InputText>) {
          return normalize_text(p.text) == normalize_text(g.text);
        } else {
          return true;
        }
      },
      pred);
}

}  // namespace uishift
