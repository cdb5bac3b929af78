#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "uishift/action.hpp"

namespace uishift {

// One node of a screen's view hierarchy.
struct UiNode {
  std::string node_id;
  BBox bbox;
  std::optional<std::string> text;
  std::optional<std::string> class_name;
  bool clickable = false;
  std::vector<UiNode> children;

  bool operator==(const UiNode&) const = default;
};

struct Step {
  std::string screenshot_ref;
  std::int64_t screen_w = 0;
  std::int64_t screen_h = 0;
  std::optional<Action> action;  // taken from this state; absent on a terminal step
  std::optional<UiNode> ui_tree;

  bool operator==(const Step&) const = default;
};

struct Episode {
  std::string episode_id;
  std::optional<std::string> task_instruction;
  std::optional<std::vector<std::string>> step_instructions;
  std::vector<Step> steps;

  std::size_t last_index() const { return steps.empty() ? 0 : steps.size() - 1; }
  bool operator==(const Episode&) const = default;
};

// Returns an empty string when the episode satisfies every type invariant,
// otherwise a message naming the first violation.
std::string episode_violation(const Episode& e);

// One JSONL line, no trailing newline.
std::string episode_to_jsonl(const Episode& e);

// Parses one JSONL record. `file`/`line` locate errors in SchemaError.
Episode episode_from_jsonl(std::string_view line, const std::string& file = "<memory>",
                           std::size_t line_no = 1);

// Streams episodes from every *.jsonl file under root, in lexicographic file
// name order and then record order. A bad record throws SchemaError from
// next(); the reader has already moved past it, so callers may continue.
class CorpusReader {
 public:
  explicit CorpusReader(const std::filesystem::path& root);

  std::optional<Episode> next();
  const std::vector<std::filesystem::path>& files() const { return files_; }

 private:
  bool open_next_file();

  std::vector<std::filesystem::path> files_;
  std::size_t file_index_ = 0;
  std::ifstream in_;
  std::size_t line_no_ = 0;
  std::unordered_set<std::string> seen_ids_;
};

CorpusReader load_corpus(const std::filesystem::path& root);

// Loads everything; the first bad record throws.
std::vector<Episode> load_all(const std::filesystem::path& root);

// Loads valid episodes and collects one message per rejected record.
std::vector<Episode> load_all(const std::filesystem::path& root,
                              std::vector<std::string>& diagnostics);

// Writes episodes as `episodes-NNNNN.jsonl` shards of at most shard_size lines.
void write_corpus(const std::filesystem::path& dir, const std::vector<Episode>& episodes,
                  std::size_t shard_size = 500);

// Bounding box of the element under a click: deepest containing node, then
// smallest area, then first in depth-first order. Throws
// UnresolvedTargetError when no node contains the point.
BBox resolve_click_bbox(const Step& step);
BBox resolve_click_bbox(const UiNode& tree, std::int64_t x, std::int64_t y);

}  // namespace uishift
