#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uishift/action.hpp"
#include "uishift/rng.hpp"
#include "uishift/trajectory.hpp"
#include "uishift/transition.hpp"

namespace uishift {

// Procedural GUI world: apps own trees of screens; screens hold a grid of
// widgets in a scrollable content area below a fixed app bar.
struct WorldConfig {
  std::uint64_t seed = 7;
  std::int64_t screen_w = 1080;
  std::int64_t screen_h = 2400;
  int apps = 4;
  int widgets_min = 4;
  int widgets_max = 24;
  int max_depth = 2;              // deepest screen below an app's home
  int max_screens_per_app = 8;
  std::vector<std::string> text_vocabulary = {"hello",  "meeting", "coffee", "paris",
                                              "budget", "tomorrow", "photo", "invoice"};
  std::vector<std::string> app_names;  // defaults are generated when empty

  void validate() const;
  bool operator==(const WorldConfig&) const = default;
};

// JSON object with any WorldConfig field by name; unknown keys throw
// InvalidArgumentError. The result is validated.
WorldConfig world_config_from_json(std::string_view text);

enum class WidgetKind { kButton, kTextField, kStatic };

struct Widget {
  WidgetKind kind = WidgetKind::kStatic;
  std::string label;       // buttons: the target screen's title
  int target_screen = -1;  // buttons only
  bool operator==(const Widget&) const = default;
};

struct Screen {
  int id = 0;
  int app = 0;
  int depth = 0;
  int columns = 1;
  std::string title;
  std::vector<Widget> widgets;
  bool operator==(const Screen&) const = default;
};

struct App {
  std::string name;
  int home_screen = 0;
  bool operator==(const App&) const = default;
};

// Per-screen interaction state. A navigation stack entry keeps it, so going
// back restores what the user left.
struct Frame {
  int screen = 0;
  std::int64_t scroll_x = 0;
  std::int64_t scroll_y = 0;
  int focused = -1;  // widget index of the focused text field
  std::vector<std::string> field_text;
  bool operator==(const Frame&) const = default;
};

struct ScreenState {
  std::vector<Frame> nav_stack;  // never empty; back() is the visible screen

  const Frame& top() const { return nav_stack.back(); }
  bool operator==(const ScreenState&) const = default;
};

class World {
 public:
  static constexpr std::int64_t kAppBarHeight = 200;
  static constexpr std::int64_t kCellHeight = 240;
  static constexpr std::int64_t kCellMargin = 20;

  World(WorldConfig cfg, std::vector<App> apps, std::vector<Screen> screens);

  const WorldConfig& config() const { return cfg_; }
  const std::vector<App>& apps() const { return apps_; }
  const std::vector<Screen>& screens() const { return screens_; }
  const Screen& screen(int id) const { return screens_.at(static_cast<std::size_t>(id)); }

  ScreenState initial_state(int app) const;
  int app_of(const ScreenState& s) const { return screen(s.top().screen).app; }

  // Total: every action on every state yields a state.
  //   click on a widget  -> button pushes its target, text field takes focus,
  //                         static widget does nothing; elsewhere nothing
  //   scroll             -> content moves by one stride, clamped; "up" moves
  //                         content up and reveals what lies below
  //                         ("left" likewise reveals what lies to the right)
  //   navigate_back      -> pops the stack; nothing at the root
  //   open_app           -> fresh home of the named app; unknown name does nothing
  //   input_text         -> appends to the focused field; nothing without focus
  ScreenState apply(const ScreenState& s, const Action& a) const;

  // View hierarchy of the visible screen; only fully visible widgets appear.
  UiNode render(const ScreenState& s) const;

  // Screen-space boxes of the fully visible widgets, by widget index.
  std::vector<std::pair<int, BBox>> visible_widgets(const ScreenState& s) const;

  std::int64_t max_scroll_x(const Screen& sc) const;
  std::int64_t max_scroll_y(const Screen& sc) const;
  std::int64_t stride_x() const { return cell_width() / 2; }
  std::int64_t stride_y() const { return kCellHeight; }
  std::int64_t cell_width() const { return cfg_.screen_w / 2; }

  bool operator==(const World&) const = default;

 private:
  Frame fresh_frame(int screen) const;
  BBox widget_box(const Frame& f, int index) const;
  bool fully_visible(const BBox& b) const;

  WorldConfig cfg_;
  std::vector<App> apps_;
  std::vector<Screen> screens_;
};

World generate_world(const WorldConfig& cfg);

struct Rollout {
  Episode episode;
  std::vector<ScreenState> states;  // states[t] is the state at episode step t
};

// Scripted random walk of `length` steps (length - 1 actions). Each action is
// drawn among those that visibly change the screen, lead somewhere no other
// candidate leads, and keep every window of up to 4 steps free of a second
// first action reaching the same later state.
Rollout rollout(const World& world, std::size_t length, std::uint64_t seed,
                const std::string& episode_id);

// Every action the scripted walker considers at a state. Clicks are drawn at
// random points inside each visible clickable widget.
std::vector<Action> candidate_actions(const World& world, const ScreenState& s, Rng& rng);

struct SyntheticCorpus {
  World world;
  std::vector<Rollout> rollouts;
  std::unordered_map<std::string, std::size_t> by_id;

  std::vector<Episode> episodes() const;
  const Rollout* find(const std::string& episode_id) const;
};

SyntheticCorpus generate_corpus(const WorldConfig& cfg, std::size_t episodes, std::size_t length,
                                std::uint64_t seed);

// The action recorded at the pair's step t (ground truth by construction).
Action oracle_first_action(const TransitionPair& pair, const SyntheticCorpus& corpus);

}  // namespace uishift
