#include "uishift/synthetic_env.hpp"

#include <algorithm>
#include <cstdio>
#include <array>
#include <deque>
#include <set>

#include "json.hpp"
#include "log.hpp"

namespace uishift {
namespace {

constexpr std::array<const char*, 10> kDefaultAppNames = {
    "Mail", "Maps", "Notes", "Music", "Camera", "Clock", "Files", "Photos", "Calendar", "Weather"};

std::vector<std::string> app_names_for(const WorldConfig& cfg) {
  std::vector<std::string> names = cfg.app_names;
  names.resize(static_cast<std::size_t>(cfg.apps));
  for (std::size_t a = cfg.app_names.size(); a < names.size(); ++a) {
    names[a] = a < kDefaultAppNames.size() ? kDefaultAppNames[a] : "App " + std::to_string(a + 1);
  }
  return names;
}

std::string node_id(int screen, int widget) {
  return "s" + std::to_string(screen) + ".w" + std::to_string(widget);
}

const char* class_for(WidgetKind k) {
  switch (k) {
    case WidgetKind::kButton:
      return "Button";
    case WidgetKind::kTextField:
      return "EditText";
    case WidgetKind::kStatic:
      return "ImageView";
  }
  return "View";
}

}  // namespace

void WorldConfig::validate() const {
  if (screen_w < 200) throw InvalidArgumentError("screen_w must be >= 200");
  if (screen_h < World::kAppBarHeight + World::kCellHeight) {
    throw InvalidArgumentError("screen_h too small for one row of widgets");
  }
  if (apps < 1) throw InvalidArgumentError("apps must be >= 1");
  if (widgets_min < 0 || widgets_min > widgets_max) throw InvalidArgumentError("widgets range is empty");
  if (max_depth < 0) throw InvalidArgumentError("max_depth must be >= 0");
  if (max_screens_per_app < 1) throw InvalidArgumentError("max_screens_per_app must be >= 1");
  if (text_vocabulary.empty()) throw InvalidArgumentError("text_vocabulary must not be empty");
  for (const auto& w : text_vocabulary) {
    if (w.empty()) throw InvalidArgumentError("text_vocabulary entries must be non-empty");
  }
  auto names = app_names_for(*this);
  std::set<std::string> unique(names.begin(), names.end());
  if (unique.size() != names.size()) throw InvalidArgumentError("app names must be unique");
}

WorldConfig world_config_from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw InvalidArgumentError("world config must be a JSON object");
  WorldConfig cfg;
  static const std::set<std::string> known = {"seed",    "screen_w",  "screen_h",  "apps",
                                              "widgets_min", "widgets_max", "max_depth", "max_screens_per_app",
                                              "text_vocabulary", "app_names"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw InvalidArgumentError("unknown world config key '" + key + "'");
  }
  try {
    auto get = [&](const char* key, auto& dst) {
      if (auto it = j.find(key); it != j.end()) dst = it->get<std::decay_t<decltype(dst)>>();
    };
    get("seed", cfg.seed);
    get("screen_w", cfg.screen_w);
    get("screen_h", cfg.screen_h);
    get("apps", cfg.apps);
    get("widgets_min", cfg.widgets_min);
    get("widgets_max", cfg.widgets_max);
    get("max_depth", cfg.max_depth);
    get("max_screens_per_app", cfg.max_screens_per_app);
    get("text_vocabulary", cfg.text_vocabulary);
    get("app_names", cfg.app_names);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgumentError(std::string("world config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

World::World(WorldConfig cfg, std::vector<App> apps, std::vector<Screen> screens)
    : cfg_(std::move(cfg)), apps_(std::move(apps)), screens_(std::move(screens)) {}

Frame World::fresh_frame(int screen_id) const {
  Frame f;
  f.screen = screen_id;
  f.field_text.assign(screen(screen_id).widgets.size(), std::string());
  return f;
}

ScreenState World::initial_state(int app) const {
  return ScreenState{{fresh_frame(apps_.at(static_cast<std::size_t>(app)).home_screen)}};
}

std::int64_t World::max_scroll_x(const Screen& sc) const {
  return std::max<std::int64_t>(0, sc.columns * cell_width() - cfg_.screen_w);
}

std::int64_t World::max_scroll_y(const Screen& sc) const {
  auto n = static_cast<std::int64_t>(sc.widgets.size());
  auto rows = (n + sc.columns - 1) / sc.columns;
  return std::max<std::int64_t>(0, rows * kCellHeight - (cfg_.screen_h - kAppBarHeight));
}

BBox World::widget_box(const Frame& f, int index) const {
  const auto& sc = screen(f.screen);
  std::int64_t col = index % sc.columns;
  std::int64_t row = index / sc.columns;
  BBox b;
  b.x_min = col * cell_width() + kCellMargin - f.scroll_x;
  b.y_min = kAppBarHeight + row * kCellHeight + kCellMargin - f.scroll_y;
  b.x_max = b.x_min + cell_width() - 2 * kCellMargin - 1;
  b.y_max = b.y_min + kCellHeight - 2 * kCellMargin - 1;
  return b;
}

bool World::fully_visible(const BBox& b) const {
  return b.x_min >= 0 && b.x_max < cfg_.screen_w && b.y_min >= kAppBarHeight && b.y_max < cfg_.screen_h;
}

std::vector<std::pair<int, BBox>> World::visible_widgets(const ScreenState& s) const {
  const auto& f = s.top();
  const auto& sc = screen(f.screen);
  std::vector<std::pair<int, BBox>> out;
  for (int i = 0; i < static_cast<int>(sc.widgets.size()); ++i) {
    auto b = widget_box(f, i);
    if (fully_visible(b)) out.emplace_back(i, b);
  }
  return out;
}

ScreenState World::apply(const ScreenState& s, const Action& a) const {
  ScreenState next = s;
  auto& f = next.nav_stack.back();
  const auto& sc = screen(f.screen);

  if (const auto* c = std::get_if<Click>(&a)) {
    // Hot path for rollouts: test boxes in place rather than via visible_widgets.
    for (int i = 0; i < static_cast<int>(sc.widgets.size()); ++i) {
      auto box = widget_box(f, i);
      if (!fully_visible(box) || !box.contains(c->x, c->y)) continue;
      const auto& w = sc.widgets[static_cast<std::size_t>(i)];
      if (w.kind == WidgetKind::kButton) {
        next.nav_stack.push_back(fresh_frame(w.target_screen));
      } else if (w.kind == WidgetKind::kTextField) {
        f.focused = i;
      }
      break;
    }
  } else if (const auto* sc_act = std::get_if<Scroll>(&a)) {
    switch (sc_act->direction) {
      case Direction::kUp:
        f.scroll_y = std::min(f.scroll_y + stride_y(), max_scroll_y(sc));
        break;
      case Direction::kDown:
        f.scroll_y = std::max<std::int64_t>(f.scroll_y - stride_y(), 0);
        break;
      case Direction::kLeft:
        f.scroll_x = std::min(f.scroll_x + stride_x(), max_scroll_x(sc));
        break;
      case Direction::kRight:
        f.scroll_x = std::max<std::int64_t>(f.scroll_x - stride_x(), 0);
        break;
    }
  } else if (std::holds_alternative<NavigateBack>(a)) {
    if (next.nav_stack.size() > 1) next.nav_stack.pop_back();
  } else if (const auto* o = std::get_if<OpenApp>(&a)) {
    for (const auto& app : apps_) {
      if (app.name == o->app_name) {
        next.nav_stack = {fresh_frame(app.home_screen)};
        break;
      }
    }
  } else if (const auto* in = std::get_if<InputText>(&a)) {
    if (f.focused >= 0) f.field_text[static_cast<std::size_t>(f.focused)] += in->text;
  }
  return next;
}

UiNode World::render(const ScreenState& s) const {
  const auto& f = s.top();
  const auto& sc = screen(f.screen);
  const auto w = cfg_.screen_w;
  const auto h = cfg_.screen_h;

  UiNode title{"title", {40, 100, w - 41, 179}, sc.title, "TextView", false, {}};
  UiNode appbar{"appbar", {0, 0, w - 1, kAppBarHeight - 1}, apps_[static_cast<std::size_t>(sc.app)].name,
                "Toolbar", false, {std::move(title)}};
  UiNode content{"content", {0, kAppBarHeight, w - 1, h - 1}, std::nullopt, "ScrollView", false, {}};
  for (const auto& [i, box] : visible_widgets(s)) {
    const auto& widget = sc.widgets[static_cast<std::size_t>(i)];
    UiNode n{node_id(sc.id, i), box, std::nullopt, class_for(widget.kind), true, {}};
    if (widget.kind == WidgetKind::kTextField) {
      n.text = f.field_text[static_cast<std::size_t>(i)];
      if (f.focused == i) {
        n.children.push_back(UiNode{node_id(sc.id, i) + ".cursor",
                                    {box.x_max - 30, box.y_min + 20, box.x_max - 20, box.y_max - 20},
                                    std::nullopt, "Cursor", false, {}});
      }
    } else {
      n.text = widget.label;
    }
    content.children.push_back(std::move(n));
  }
  return UiNode{"root", {0, 0, w - 1, h - 1}, std::nullopt, "FrameLayout", false,
                {std::move(appbar), std::move(content)}};
}

World generate_world(const WorldConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const auto names = app_names_for(cfg);
  const auto& vocab = cfg.text_vocabulary;
  auto word = [&] { return vocab[rng.below(vocab.size())]; };

  std::vector<App> apps;
  std::vector<Screen> screens;
  for (int a = 0; a < cfg.apps; ++a) {
    int home = static_cast<int>(screens.size());
    apps.push_back(App{names[static_cast<std::size_t>(a)], home});
    screens.push_back(Screen{home, a, 0, 1, names[static_cast<std::size_t>(a)], {}});
    int in_app = 1;
    std::deque<int> pending{home};
    while (!pending.empty()) {
      int id = pending.front();
      pending.pop_front();
      int depth = screens[static_cast<std::size_t>(id)].depth;
      int columns = static_cast<int>(rng.between(1, 3));
      auto count = static_cast<int>(rng.between(cfg.widgets_min, cfg.widgets_max));
      std::vector<Widget> widgets;
      for (int i = 0; i < count; ++i) {
        double r = rng.unit();
        bool can_branch = depth < cfg.max_depth && in_app < cfg.max_screens_per_app;
        if (can_branch && r < 0.35) {
          int child = static_cast<int>(screens.size());
          auto title = word() + " " + std::to_string(child);
          screens.push_back(Screen{child, a, depth + 1, 1, title, {}});
          widgets.push_back(Widget{WidgetKind::kButton, title, child});
          pending.push_back(child);
          ++in_app;
        } else if (r < 0.65) {
          widgets.push_back(Widget{WidgetKind::kTextField, {}, -1});
        } else {
          widgets.push_back(Widget{WidgetKind::kStatic, word(), -1});
        }
      }
      auto& sc = screens[static_cast<std::size_t>(id)];
      sc.columns = columns;
      sc.widgets = std::move(widgets);
    }
  }
  return World(cfg, std::move(apps), std::move(screens));
}

std::vector<Action> candidate_actions(const World& world, const ScreenState& s, Rng& rng) {
  std::vector<Action> out;
  for (const auto& [i, box] : world.visible_widgets(s)) {
    (void)i;
    out.push_back(Click{rng.between(box.x_min, box.x_max), rng.between(box.y_min, box.y_max)});
  }
  for (auto d : {Direction::kUp, Direction::kDown, Direction::kLeft, Direction::kRight}) {
    out.push_back(Scroll{d});
  }
  out.push_back(NavigateBack{});
  const int current_app = world.app_of(s);
  for (int a = 0; a < static_cast<int>(world.apps().size()); ++a) {
    if (a != current_app) out.push_back(OpenApp{world.apps()[static_cast<std::size_t>(a)].name});
  }
  if (s.top().focused >= 0) {
    for (const auto& w : world.config().text_vocabulary) out.push_back(InputText{w});
  }
  return out;
}

namespace {

// Necessary condition for apply(from, a) == to, judged from the navigation
// stack alone. Lets the ambiguity check skip most full applications.
bool may_reach(const ScreenState& from, const Action& a, const ScreenState& to) {
  const auto n = from.nav_stack.size();
  const auto m = to.nav_stack.size();
  if (std::holds_alternative<OpenApp>(a)) return true;
  if (std::holds_alternative<NavigateBack>(a)) return m == std::max<std::size_t>(n - 1, 1);
  if (std::holds_alternative<Click>(a)) return m == n + 1 || (m == n && from.top().screen == to.top().screen);
  return m == n && from.top().screen == to.top().screen;
}

}  // namespace

Rollout rollout(const World& world, std::size_t length, std::uint64_t seed, const std::string& episode_id) {
  if (length < 2) throw InvalidArgumentError("rollout length must be >= 2");
  constexpr std::size_t kWindow = 4;

  Rng rng(seed);
  Rollout out;
  out.episode.episode_id = episode_id;
  ScreenState state = world.initial_state(static_cast<int>(rng.below(world.apps().size())));

  // Alternative histories: what the state would be had a different first
  // action been taken at `start`, followed by the recorded actions since.
  struct Alternative {
    std::size_t start;
    ScreenState state;
  };
  std::vector<Alternative> alternatives;

  for (std::size_t t = 0; t < length; ++t) {
    Step step;
    step.screenshot_ref = "synthetic://" + episode_id + "/" + std::to_string(t) + ".png";
    step.screen_w = world.config().screen_w;
    step.screen_h = world.config().screen_h;
    step.ui_tree = world.render(state);
    out.states.push_back(state);
    if (t + 1 == length) {
      out.episode.steps.push_back(std::move(step));
      break;
    }

    auto candidates = candidate_actions(world, state, rng);
    std::vector<ScreenState> successors;
    successors.reserve(candidates.size());
    for (const auto& c : candidates) successors.push_back(world.apply(state, c));

    std::vector<std::size_t> changing;
    std::vector<std::size_t> accepted;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto& next = successors[i];
      if (next == state || world.render(next) == *step.ui_tree) continue;
      changing.push_back(i);
      bool unique = true;
      for (std::size_t j = 0; j < candidates.size() && unique; ++j) {
        if (j != i && successors[j] == next) unique = false;
      }
      if (!unique) continue;
      bool window_clear = true;
      for (const auto& alt : alternatives) {
        if (!may_reach(alt.state, candidates[i], next)) continue;
        if (world.apply(alt.state, candidates[i]) == next) {
          window_clear = false;
          break;
        }
      }
      if (window_clear) accepted.push_back(i);
    }

    std::size_t choice;
    if (!accepted.empty()) {
      choice = accepted[rng.below(accepted.size())];
    } else if (!changing.empty()) {
      log::debug("{} t={}: no unambiguous action, taking a changing one", episode_id, t);
      choice = changing[rng.below(changing.size())];
    } else {
      log::debug("{} t={}: no action changes the screen", episode_id, t);
      choice = rng.below(candidates.size());
    }

    const auto& action = candidates[choice];
    const auto& next = successors[choice];
    for (auto& alt : alternatives) alt.state = world.apply(alt.state, action);
    std::erase_if(alternatives, [&](const Alternative& alt) { return alt.start + kWindow <= t + 1; });
    for (std::size_t j = 0; j < successors.size(); ++j) {
      if (successors[j] != next) alternatives.push_back({t, successors[j]});
    }
    // Equal states answer the window check identically, so only the copy that
    // expires last matters. Starts are non-decreasing along the vector.
    std::vector<Alternative> kept;
    for (auto it = alternatives.rbegin(); it != alternatives.rend(); ++it) {
      bool dup = std::any_of(kept.begin(), kept.end(), [&](const Alternative& k) { return k.state == it->state; });
      if (!dup) kept.push_back(std::move(*it));
    }
    std::reverse(kept.begin(), kept.end());
    alternatives = std::move(kept);

    step.action = action;
    out.episode.steps.push_back(std::move(step));
    state = next;
  }
  return out;
}

std::vector<Episode> SyntheticCorpus::episodes() const {
  std::vector<Episode> out;
  out.reserve(rollouts.size());
  for (const auto& r : rollouts) out.push_back(r.episode);
  return out;
}

const Rollout* SyntheticCorpus::find(const std::string& episode_id) const {
  auto it = by_id.find(episode_id);
  return it == by_id.end() ? nullptr : &rollouts[it->second];
}

SyntheticCorpus generate_corpus(const WorldConfig& cfg, std::size_t episodes, std::size_t length,
                                std::uint64_t seed) {
  SyntheticCorpus corpus{generate_world(cfg), {}, {}};
  corpus.rollouts.reserve(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "ep%06zu", i);
    corpus.rollouts.push_back(rollout(corpus.world, length, mix_seed(seed, i), id));
    corpus.by_id.emplace(id, i);
  }
  return corpus;
}

Action oracle_first_action(const TransitionPair& pair, const SyntheticCorpus& corpus) {
  const auto* r = corpus.find(pair.episode_id);
  if (r == nullptr) throw InvalidArgumentError("pair '" + pair.pair_id + "' is not from this corpus");
  if (pair.t >= r->episode.steps.size() || !r->episode.steps[pair.t].action) {
    throw InvalidArgumentError("pair '" + pair.pair_id + "' points past the recorded actions");
  }
  return *r->episode.steps[pair.t].action;
}

}  // namespace uishift
