#pragma once

// JSON conversions shared by the file formats and the wire protocol.

#include <stdexcept>
#include <string>

#include "json.hpp"
#include "uishift/action.hpp"
#include "uishift/trajectory.hpp"
#include "uishift/transition.hpp"

namespace uishift::detail {

using json = nlohmann::ordered_json;

// Thrown by the decoders; `field` is a dotted path into the record.
struct FieldError : std::runtime_error {
  FieldError(std::string f, const std::string& what)
      : std::runtime_error(what), field(std::move(f)) {}
  std::string field;
};

json action_to_json(const Action& a);
Action action_from_json(const json& j, const std::string& field);

json bbox_to_json(const BBox& b);
BBox bbox_from_json(const json& j, const std::string& field);

json gold_to_json(const GoldTarget& g);
GoldTarget gold_from_json(const json& j, const std::string& field);

json node_to_json(const UiNode& n);
UiNode node_from_json(const json& j, const std::string& field);

json episode_to_json(const Episode& e);
Episode episode_from_json(const json& j);

json pair_to_json(const TransitionPair& p);
TransitionPair pair_from_json(const json& j);

// Compact dump; invalid UTF-8 is replaced rather than thrown on.
std::string dump(const json& j);

}  // namespace uishift::detail
