#pragma once

#include <string>

#include "uishift/action.hpp"
#include "uishift/error.hpp"
#include "uishift/rng.hpp"
#include "uishift/trajectory.hpp"

namespace uishift::support {

inline std::string random_text(Rng& rng) {
  static const char* kPieces[] = {"a", "Z", " ", "9", "\"", "\\", "\n", "é", "日本", "{", "}", "<answer>", "\t"};
  std::string s;
  auto n = rng.below(8);
  for (std::uint64_t i = 0; i < n; ++i) s += kPieces[rng.below(std::size(kPieces))];
  return s;
}

inline Action random_action(Rng& rng) {
  switch (rng.below(5)) {
    case 0:
      return Click{static_cast<std::int64_t>(rng.below(5000)), static_cast<std::int64_t>(rng.below(5000))};
    case 1:
      return Scroll{static_cast<Direction>(rng.below(4))};
    case 2:
      return OpenApp{random_text(rng)};
    case 3:
      return NavigateBack{};
    default:
      return InputText{random_text(rng)};
  }
}

inline UiNode node(std::string id, BBox b, bool clickable = true, std::vector<UiNode> kids = {}) {
  return UiNode{std::move(id), b, std::nullopt, std::nullopt, clickable, std::move(kids)};
}

}  // namespace uishift::support

#include <filesystem>
#include <fstream>
#include <random>

namespace uishift::support {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("uishift-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Two-step episode: a click on a single button, then a terminal step.
inline Episode tiny_episode(const std::string& id, std::int64_t x = 50, std::int64_t y = 50) {
  Step s0{"shot://" + id + "/0", 100, 100, Action{Click{x, y}},
          node("root", {0, 0, 100, 100}, false, {node("btn", {40, 40, 60, 60})})};
  Step s1{"shot://" + id + "/1", 100, 100, std::nullopt, node("root", {0, 0, 100, 100}, false)};
  return Episode{id, std::nullopt, std::nullopt, {s0, s1}};
}

}  // namespace uishift::support
