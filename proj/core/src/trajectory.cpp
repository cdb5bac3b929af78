#include "uishift/trajectory.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "json_codec.hpp"
#include "text_util.hpp"

namespace uishift {
namespace {

namespace fs = std::filesystem;

std::string tree_violation(const UiNode& n, const Step& s, std::unordered_set<std::string>& ids) {
  if (!ids.insert(n.node_id).second) return "duplicate node_id '" + n.node_id + "'";
  if (!n.bbox.valid()) return "node '" + n.node_id + "' has an invalid bbox";
  if (n.bbox.x_max > s.screen_w || n.bbox.y_max > s.screen_h) {
    return "node '" + n.node_id + "' lies outside the screen";
  }
  for (const auto& c : n.children) {
    if (auto v = tree_violation(c, s, ids); !v.empty()) return v;
  }
  return {};
}

struct Candidate {
  const UiNode* node = nullptr;
  std::size_t depth = 0;
};

void collect_containing(const UiNode& n, std::int64_t x, std::int64_t y, std::size_t depth,
                        Candidate& best) {
  if (!n.bbox.contains(x, y)) {
    // Children may overflow their parent, so keep descending.
    for (const auto& c : n.children) collect_containing(c, x, y, depth + 1, best);
    return;
  }
  if (best.node == nullptr || depth > best.depth ||
      (depth == best.depth && n.bbox.area() < best.node->bbox.area())) {
    best = {&n, depth};
  }
  for (const auto& c : n.children) collect_containing(c, x, y, depth + 1, best);
}

}  // namespace

std::string episode_violation(const Episode& e) {
  if (e.episode_id.empty()) return "episode_id is empty";
  if (e.steps.size() < 2) return "episode has fewer than 2 steps";
  for (std::size_t i = 0; i < e.steps.size(); ++i) {
    const auto& s = e.steps[i];
    auto where = "steps[" + std::to_string(i) + "]: ";
    if (s.screen_w <= 0 || s.screen_h <= 0) return where + "screen dimensions must be positive";
    if (!s.action && i + 1 != e.steps.size()) return where + "only the final step may omit its action";
    if (s.action) {
      if (const auto* c = std::get_if<Click>(&*s.action)) {
        if (c->x > s.screen_w || c->y > s.screen_h) return where + "click lies outside the screen";
      }
    }
    if (s.ui_tree) {
      std::unordered_set<std::string> ids;
      if (auto v = tree_violation(*s.ui_tree, s, ids); !v.empty()) return where + v;
    }
  }
  return {};
}

std::string episode_to_jsonl(const Episode& e) { return detail::dump(detail::episode_to_json(e)); }

Episode episode_from_jsonl(std::string_view line, const std::string& file, std::size_t line_no) {
  auto j = detail::json::parse(line, nullptr, false);
  if (j.is_discarded()) throw SchemaError(file, line_no, "", "not valid JSON");
  Episode e;
  try {
    e = detail::episode_from_json(j);
  } catch (const detail::FieldError& err) {
    throw SchemaError(file, line_no, err.field, err.what());
  }
  if (auto v = episode_violation(e); !v.empty()) throw SchemaError(file, line_no, "", v);
  return e;
}

CorpusReader::CorpusReader(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw CorpusError("corpus root is not a readable directory: " + root.string());
  fs::directory_iterator it(root, ec);
  if (ec) throw CorpusError("cannot list corpus root " + root.string() + ": " + ec.message());
  for (; it != fs::directory_iterator(); it.increment(ec)) {
    if (ec) throw CorpusError("cannot list corpus root " + root.string() + ": " + ec.message());
    if (it->is_regular_file() && it->path().extension() == ".jsonl") files_.push_back(it->path());
  }
  std::sort(files_.begin(), files_.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
}

bool CorpusReader::open_next_file() {
  while (file_index_ < files_.size()) {
    in_ = std::ifstream(files_[file_index_]);
    line_no_ = 0;
    if (!in_) throw CorpusError("cannot open " + files_[file_index_].string());
    return true;
  }
  return false;
}

std::optional<Episode> CorpusReader::next() {
  std::string line;
  for (;;) {
    if (!in_.is_open()) {
      if (!open_next_file()) return std::nullopt;
    }
    if (!std::getline(in_, line)) {
      in_.close();
      ++file_index_;
      continue;
    }
    ++line_no_;
    if (detail::trim_ascii(line).empty()) continue;
    const auto file = files_[file_index_].string();
    auto e = episode_from_jsonl(line, file, line_no_);
    if (!seen_ids_.insert(e.episode_id).second) {
      throw SchemaError(file, line_no_, "episode_id", "duplicate episode_id '" + e.episode_id + "'");
    }
    return e;
  }
}

CorpusReader load_corpus(const fs::path& root) { return CorpusReader(root); }

std::vector<Episode> load_all(const fs::path& root) {
  std::vector<Episode> out;
  auto reader = load_corpus(root);
  while (auto e = reader.next()) out.push_back(std::move(*e));
  return out;
}

std::vector<Episode> load_all(const fs::path& root, std::vector<std::string>& diagnostics) {
  std::vector<Episode> out;
  auto reader = load_corpus(root);
  for (;;) {
    try {
      auto e = reader.next();
      if (!e) break;
      out.push_back(std::move(*e));
    } catch (const SchemaError& err) {
      diagnostics.emplace_back(err.what());
    }
  }
  return out;
}

void write_corpus(const fs::path& dir, const std::vector<Episode>& episodes, std::size_t shard_size) {
  if (shard_size == 0) throw InvalidArgumentError("shard_size must be positive");
  fs::create_directories(dir);
  std::ofstream out;
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    if (i % shard_size == 0) {
      std::ostringstream name;
      name << "episodes-" << std::setw(5) << std::setfill('0') << i / shard_size << ".jsonl";
      out = std::ofstream(dir / name.str(), std::ios::binary | std::ios::trunc);
      if (!out) throw CorpusError("cannot write " + (dir / name.str()).string());
    }
    out << episode_to_jsonl(episodes[i]) << '\n';
  }
}

BBox resolve_click_bbox(const UiNode& tree, std::int64_t x, std::int64_t y) {
  Candidate best;
  collect_containing(tree, x, y, 0, best);
  if (best.node == nullptr) {
    throw UnresolvedTargetError("no view-hierarchy node contains (" + std::to_string(x) + "," +
                                std::to_string(y) + ")");
  }
  return best.node->bbox;
}

BBox resolve_click_bbox(const Step& step) {
  const auto* click = step.action ? std::get_if<Click>(&*step.action) : nullptr;
  if (click == nullptr) throw InvalidArgumentError("resolve_click_bbox needs a click step");
  if (!step.ui_tree) throw UnresolvedTargetError("step '" + step.screenshot_ref + "' has no view hierarchy");
  return resolve_click_bbox(*step.ui_tree, click->x, click->y);
}

}  // namespace uishift
