#include "json_codec.hpp"

namespace uishift::detail {
namespace {

const json& require(const json& obj, const char* key, const std::string& field) {
  auto it = obj.find(key);
  if (it == obj.end()) throw FieldError(field.empty() ? key : field + "." + key, "missing");
  return *it;
}

std::string sub(const std::string& field, const std::string& key) {
  return field.empty() ? key : field + "." + key;
}

std::string get_string(const json& obj, const char* key, const std::string& field) {
  const auto& v = require(obj, key, field);
  if (!v.is_string()) throw FieldError(sub(field, key), "expected string");
  return v.get<std::string>();
}

std::optional<std::string> get_opt_string(const json& obj, const char* key,
                                          const std::string& field) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw FieldError(sub(field, key), "expected string or null");
  return it->get<std::string>();
}

std::int64_t get_int(const json& obj, const char* key, const std::string& field) {
  const auto& v = require(obj, key, field);
  if (!v.is_number_integer()) throw FieldError(sub(field, key), "expected integer");
  return v.get<std::int64_t>();
}

void require_object(const json& j, const std::string& field) {
  if (!j.is_object()) throw FieldError(field.empty() ? "<record>" : field, "expected object");
}

ScreenRef screen_from_json(const json& j, const std::string& field) {
  require_object(j, field);
  return {get_string(j, "ref", field), get_int(j, "w", field), get_int(j, "h", field)};
}

json screen_to_json(const ScreenRef& s) {
  json j;
  j["ref"] = s.ref;
  j["w"] = s.w;
  j["h"] = s.h;
  return j;
}

json step_to_json(const Step& s) {
  json j;
  j["screenshot_ref"] = s.screenshot_ref;
  j["screen_w"] = s.screen_w;
  j["screen_h"] = s.screen_h;
  j["action"] = s.action ? action_to_json(*s.action) : json(nullptr);
  j["ui_tree"] = s.ui_tree ? node_to_json(*s.ui_tree) : json(nullptr);
  return j;
}

Step step_from_json(const json& j, const std::string& field) {
  require_object(j, field);
  Step s;
  s.screenshot_ref = get_string(j, "screenshot_ref", field);
  s.screen_w = get_int(j, "screen_w", field);
  s.screen_h = get_int(j, "screen_h", field);
  const auto& a = require(j, "action", field);
  if (!a.is_null()) s.action = action_from_json(a, sub(field, "action"));
  const auto& t = require(j, "ui_tree", field);
  if (!t.is_null()) s.ui_tree = node_from_json(t, sub(field, "ui_tree"));
  return s;
}

}  // namespace

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

json action_to_json(const Action& a) { return json::parse(serialize_action(a)); }

Action action_from_json(const json& j, const std::string& field) {
  try {
    return parse_action_or_throw(dump(j));
  } catch (const InvalidArgumentError& e) {
    throw FieldError(field, e.what());
  }
}

json bbox_to_json(const BBox& b) { return json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }

BBox bbox_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 4) throw FieldError(field, "expected [x_min,y_min,x_max,y_max]");
  for (const auto& v : j) {
    if (!v.is_number_integer()) throw FieldError(field, "bbox entries must be integers");
  }
  BBox b{j[0].get<std::int64_t>(), j[1].get<std::int64_t>(), j[2].get<std::int64_t>(),
         j[3].get<std::int64_t>()};
  if (!b.valid()) throw FieldError(field, "bbox must satisfy 0 <= min <= max");
  return b;
}

json gold_to_json(const GoldTarget& g) {
  json j;
  j["action"] = action_to_json(g.action);
  j["bbox"] = g.bbox ? bbox_to_json(*g.bbox) : json(nullptr);
  return j;
}

GoldTarget gold_from_json(const json& j, const std::string& field) {
  require_object(j, field);
  GoldTarget g;
  g.action = action_from_json(require(j, "action", field), sub(field, "action"));
  auto it = j.find("bbox");
  if (it != j.end() && !it->is_null()) g.bbox = bbox_from_json(*it, sub(field, "bbox"));
  try {
    g.validate();
  } catch (const CorruptGoldError& e) {
    throw FieldError(field.empty() ? "gold" : field, e.what());
  }
  return g;
}

json node_to_json(const UiNode& n) {
  json j;
  j["node_id"] = n.node_id;
  j["bbox"] = bbox_to_json(n.bbox);
  j["text"] = n.text ? json(*n.text) : json(nullptr);
  j["class_name"] = n.class_name ? json(*n.class_name) : json(nullptr);
  j["clickable"] = n.clickable;
  j["children"] = json::array();
  for (const auto& c : n.children) j["children"].push_back(node_to_json(c));
  return j;
}

UiNode node_from_json(const json& j, const std::string& field) {
  require_object(j, field);
  UiNode n;
  n.node_id = get_string(j, "node_id", field);
  n.bbox = bbox_from_json(require(j, "bbox", field), sub(field, "bbox"));
  n.text = get_opt_string(j, "text", field);
  n.class_name = get_opt_string(j, "class_name", field);
  const auto& c = require(j, "clickable", field);
  if (!c.is_boolean()) throw FieldError(sub(field, "clickable"), "expected boolean");
  n.clickable = c.get<bool>();
  const auto& kids = require(j, "children", field);
  if (!kids.is_array()) throw FieldError(sub(field, "children"), "expected array");
  n.children.reserve(kids.size());
  for (std::size_t i = 0; i < kids.size(); ++i) {
    n.children.push_back(node_from_json(kids[i], sub(field, "children[" + std::to_string(i) + "]")));
  }
  return n;
}

json episode_to_json(const Episode& e) {
  json j;
  j["episode_id"] = e.episode_id;
  j["task_instruction"] = e.task_instruction ? json(*e.task_instruction) : json(nullptr);
  j["step_instructions"] = e.step_instructions ? json(*e.step_instructions) : json(nullptr);
  j["steps"] = json::array();
  for (const auto& s : e.steps) j["steps"].push_back(step_to_json(s));
  return j;
}

Episode episode_from_json(const json& j) {
  require_object(j, "");
  Episode e;
  e.episode_id = get_string(j, "episode_id", "");
  e.task_instruction = get_opt_string(j, "task_instruction", "");
  if (auto it = j.find("step_instructions"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw FieldError("step_instructions", "expected array or null");
    std::vector<std::string> v;
    for (const auto& s : *it) {
      if (!s.is_string()) throw FieldError("step_instructions", "entries must be strings");
      v.push_back(s.get<std::string>());
    }
    e.step_instructions = std::move(v);
  }
  const auto& steps = require(j, "steps", "");
  if (!steps.is_array()) throw FieldError("steps", "expected array");
  e.steps.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    e.steps.push_back(step_from_json(steps[i], "steps[" + std::to_string(i) + "]"));
  }
  return e;
}

json pair_to_json(const TransitionPair& p) {
  json j;
  j["pair_id"] = p.pair_id;
  j["episode_id"] = p.episode_id;
  j["t"] = p.t;
  j["k"] = p.k;
  j["s_t"] = screen_to_json(p.s_t);
  j["s_tk"] = screen_to_json(p.s_tk);
  j["gold"] = gold_to_json(p.gold);
  j["prompt_template_id"] = p.prompt_template_id;
  return j;
}

TransitionPair pair_from_json(const json& j) {
  require_object(j, "");
  TransitionPair p;
  p.pair_id = get_string(j, "pair_id", "");
  p.episode_id = get_string(j, "episode_id", "");
  auto t = get_int(j, "t", "");
  if (t < 0) throw FieldError("t", "must be >= 0");
  p.t = static_cast<std::size_t>(t);
  auto k = get_int(j, "k", "");
  if (k < 1) throw FieldError("k", "must be >= 1");
  p.k = static_cast<int>(k);
  p.s_t = screen_from_json(require(j, "s_t", ""), "s_t");
  p.s_tk = screen_from_json(require(j, "s_tk", ""), "s_tk");
  p.gold = gold_from_json(require(j, "gold", ""), "gold");
  p.prompt_template_id = get_string(j, "prompt_template_id", "");
  return p;
}

}  // namespace uishift::detail
