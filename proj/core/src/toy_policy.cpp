#include "uishift/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <unordered_map>

#include "json.hpp"
#include "uishift/error.hpp"

namespace uishift {
namespace {

// One relation per action type, each asking whether the candidate explains
// the observed change. Candidates with nothing firing score zero.
enum Feature : std::size_t {
  kClickOpensTitledScreen = 0,
  kClickFocusesField,
  kScrollMatchesShift,
  kBackReturnsUnlinked,
  kOpenAppMatchesBar,
  kInputAppendsText,
};
static_assert(kInputAppendsText + 1 == kToyFeatureDim);

struct TreeView {
  std::string title;
  std::string app;
  std::unordered_map<std::string, const UiNode*> by_id;
  std::vector<const UiNode*> clickable;  // depth-first order
};

void index_tree(const UiNode& n, TreeView& v) {
  v.by_id.emplace(n.node_id, &n);
  if (n.clickable) v.clickable.push_back(&n);
  for (const auto& c : n.children) index_tree(c, v);
}

TreeView view_of(const UiNode& root) {
  TreeView v;
  index_tree(root, v);
  if (auto it = v.by_id.find("title"); it != v.by_id.end() && it->second->text) v.title = *it->second->text;
  if (auto it = v.by_id.find("appbar"); it != v.by_id.end() && it->second->text) v.app = *it->second->text;
  return v;
}

double logsumexp(std::span<const double> xs) {
  double m = *std::max_element(xs.begin(), xs.end());
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// d log pi_c / d w = (phi_c - E_pi[phi]) / tau
FeatureVector mean_features(const CandidateSet& set, std::span<const double> log_probs) {
  FeatureVector mean{};
  for (std::size_t c = 0; c < set.size(); ++c) {
    double p = std::exp(log_probs[c]);
    for (std::size_t d = 0; d < kToyFeatureDim; ++d) mean[d] += p * set.features[c][d];
  }
  return mean;
}

GrpoGroup group_at(const ToyObjectiveInput& in, std::span<const double> log_probs) {
  GrpoGroup g;
  g.samples.resize(in.choices.size());
  for (std::size_t i = 0; i < in.choices.size(); ++i) {
    auto c = in.choices[i];
    auto& s = g.samples[i];
    s.logp_new = log_probs[c];
    s.logp_old = in.logp_old[i];
    s.logp_ref = in.ref_log_probs[c];
    s.advantage = in.advantages[i];
  }
  return g;
}

}  // namespace

ToyVocabulary vocabulary_from(std::span<const Episode> episodes) {
  std::set<std::string> apps;
  std::set<std::string> texts;
  for (const auto& e : episodes) {
    for (const auto& s : e.steps) {
      if (s.ui_tree) {
        for (const auto& c : s.ui_tree->children) {
          if (c.node_id == "appbar" && c.text) apps.insert(*c.text);
        }
      }
      if (!s.action) continue;
      if (const auto* o = std::get_if<OpenApp>(&*s.action)) apps.insert(o->app_name);
      if (const auto* in = std::get_if<InputText>(&*s.action)) texts.insert(in->text);
    }
  }
  return {{apps.begin(), apps.end()}, {texts.begin(), texts.end()}};
}

CandidateSet enumerate_candidates(const UiNode& before, const UiNode& after, const ToyVocabulary& vocab) {
  const auto a = view_of(before);
  const auto b = view_of(after);
  const bool same_screen = a.title == b.title && a.app == b.app;
  CandidateSet set;
  auto add = [&](Action act, FeatureVector f) {
    set.actions.push_back(std::move(act));
    set.features.push_back(f);
  };

  bool title_linked = false;
  for (const auto* n : a.clickable) {
    if (n->text && *n->text == b.title) title_linked = true;
  }

  for (const auto* n : a.clickable) {
    FeatureVector f{};
    if (n->text && *n->text == b.title && a.title != b.title) f[kClickOpensTitledScreen] = 1.0;
    if (n->class_name == "EditText" && same_screen) {
      auto cursor = n->node_id + ".cursor";
      if (b.by_id.contains(cursor) && !a.by_id.contains(cursor)) f[kClickFocusesField] = 1.0;
    }
    add(Click{(n->bbox.x_min + n->bbox.x_max) / 2, (n->bbox.y_min + n->bbox.y_max) / 2}, f);
  }

  std::int64_t dx = 0;
  std::int64_t dy = 0;
  if (same_screen) {
    for (const auto* n : a.clickable) {
      auto it = b.by_id.find(n->node_id);
      if (it == b.by_id.end()) continue;
      dx = it->second->bbox.x_min - n->bbox.x_min;
      dy = it->second->bbox.y_min - n->bbox.y_min;
      break;
    }
  }
  for (auto d : {Direction::kUp, Direction::kDown, Direction::kLeft, Direction::kRight}) {
    FeatureVector f{};
    bool match = (d == Direction::kUp && dy < 0) || (d == Direction::kDown && dy > 0) ||
                 (d == Direction::kLeft && dx < 0) || (d == Direction::kRight && dx > 0);
    if (match) f[kScrollMatchesShift] = 1.0;
    add(Scroll{d}, f);
  }

  {
    FeatureVector f{};
    if (a.title != b.title && a.app == b.app && !title_linked) f[kBackReturnsUnlinked] = 1.0;
    add(NavigateBack{}, f);
  }

  for (const auto& name : vocab.app_names) {
    FeatureVector f{};
    if (name == b.app && a.app != b.app) f[kOpenAppMatchesBar] = 1.0;
    add(OpenApp{name}, f);
  }

  for (const auto& text : vocab.texts) {
    FeatureVector f{};
    if (same_screen && !text.empty()) {
      for (const auto* n : a.clickable) {
        if (n->class_name != "EditText") continue;
        auto it = b.by_id.find(n->node_id);
        if (it == b.by_id.end() || !it->second->text) continue;
        if (*it->second->text == n->text.value_or("") + text) {
          f[kInputAppendsText] = 1.0;
          break;
        }
      }
    }
    add(InputText{text}, f);
  }
  return set;
}

std::vector<double> candidate_log_probs(const CandidateSet& set, std::span<const double> weights,
                                        double temperature) {
  if (weights.size() != kToyFeatureDim) throw InvalidArgumentError("weight vector has the wrong size");
  std::vector<double> logits(set.size());
  for (std::size_t c = 0; c < set.size(); ++c) {
    double z = 0.0;
    for (std::size_t d = 0; d < kToyFeatureDim; ++d) z += set.features[c][d] * weights[d];
    logits[c] = z / temperature;
  }
  if (logits.empty()) return logits;
  double lse = logsumexp(logits);
  for (auto& l : logits) l -= lse;
  return logits;
}

std::size_t ToyPolicy::greedy(const CandidateSet& set) const {
  auto lp = candidate_log_probs(set, weights, 1.0);
  return static_cast<std::size_t>(std::max_element(lp.begin(), lp.end()) - lp.begin());
}

SampledGroup toy_sample_group(const CandidateSet& set, const GoldTarget& gold, std::span<const double> weights,
                              std::span<const double> old_weights, std::span<const double> ref_weights,
                              const GrpoConfig& cfg, ReasoningMode mode, Rng& rng) {
  if (set.empty()) throw InvalidArgumentError("toy_sample_group: empty candidate set");
  auto lp_new = candidate_log_probs(set, weights, cfg.temperature);
  auto lp_old = candidate_log_probs(set, old_weights, cfg.temperature);
  auto lp_ref = candidate_log_probs(set, ref_weights, cfg.temperature);

  SampledGroup out;
  out.group.samples.resize(static_cast<std::size_t>(cfg.group_size));
  out.choices.resize(out.group.samples.size());
  for (std::size_t i = 0; i < out.group.samples.size(); ++i) {
    double u = rng.unit();
    std::size_t c = 0;
    double acc = 0.0;
    for (; c + 1 < set.size(); ++c) {
      acc += std::exp(lp_old[c]);
      if (u < acc) break;
    }
    out.choices[i] = c;
    auto& s = out.group.samples[i];
    s.completion = wrap_answer(set.actions[c], mode);
    s.reward = static_cast<double>(score(s.completion, gold, mode).total);
    s.logp_new = lp_new[c];
    s.logp_old = lp_old[c];
    s.logp_ref = lp_ref[c];
  }
  return out;
}

double toy_objective(const ToyObjectiveInput& in, std::span<const double> weights, const GrpoConfig& cfg) {
  auto lp = candidate_log_probs(*in.set, weights, cfg.temperature);
  auto group = group_at(in, lp);
  if (cfg.kl_mode == KlMode::kExact) return grpo_objective(group, cfg, exact_kl(lp, in.ref_log_probs));
  return grpo_objective(group, cfg);
}

std::vector<double> toy_objective_gradient(const ToyObjectiveInput& in, std::span<const double> weights,
                                           const GrpoConfig& cfg) {
  const auto& set = *in.set;
  auto lp = candidate_log_probs(set, weights, cfg.temperature);
  auto mean = mean_features(set, lp);
  const double inv_tau = 1.0 / cfg.temperature;
  const double inv_g = 1.0 / static_cast<double>(in.choices.size());
  const double eps = cfg.clip_epsilon;

  // Accumulate coefficients on d log pi_c / dw per candidate, then contract.
  std::vector<double> coef(set.size(), 0.0);
  for (std::size_t i = 0; i < in.choices.size(); ++i) {
    auto c = in.choices[i];
    double rho = importance_ratio(lp[c], in.logp_old[i]);
    double adv = in.advantages[i];
    bool in_band = rho >= 1.0 - eps && rho <= 1.0 + eps;
    bool unclipped_active = in_band || rho * adv <= std::clamp(rho, 1.0 - eps, 1.0 + eps) * adv;
    double g = unclipped_active ? rho * adv : 0.0;
    if (cfg.kl_mode == KlMode::kSampleEstimator) {
      // d/dl [exp(r - l) - (r - l) - 1] = 1 - exp(r - l)
      g -= cfg.kl_beta * (1.0 - std::exp(in.ref_log_probs[c] - lp[c]));
    }
    coef[c] += g * inv_g;
  }
  if (cfg.kl_mode == KlMode::kExact) {
    // d/dw sum_c p_c (l_c - r_c) = sum_c p_c (l_c - r_c) dl_c/dw
    for (std::size_t c = 0; c < set.size(); ++c) {
      coef[c] -= cfg.kl_beta * std::exp(lp[c]) * (lp[c] - in.ref_log_probs[c]);
    }
  }

  std::vector<double> grad(kToyFeatureDim, 0.0);
  for (std::size_t c = 0; c < set.size(); ++c) {
    if (coef[c] == 0.0) continue;
    for (std::size_t d = 0; d < kToyFeatureDim; ++d) {
      grad[d] += coef[c] * (set.features[c][d] - mean[d]) * inv_tau;
    }
  }
  return grad;
}

void ToyTrainConfig::validate() const {
  grpo.validate();
  if (iterations < 1) throw InvalidArgumentError("iterations must be >= 1");
  if (batch_size < 1) throw InvalidArgumentError("batch_size must be >= 1");
  if (!(weight_bound > 0.0)) throw InvalidArgumentError("weight_bound must be > 0");
  if (!(holdout_fraction >= 0.0 && holdout_fraction < 1.0)) {
    throw InvalidArgumentError("holdout_fraction must be in [0, 1)");
  }
}

ToyTrainConfig toy_config_from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw InvalidArgumentError("toy config must be a JSON object");
  ToyTrainConfig cfg;
  static const std::set<std::string> known = {
      "group_size", "clip_epsilon", "kl_beta",    "temperature",  "lr_initial",       "lr_final",
      "std_floor",  "kl_mode",      "iterations", "batch_size",   "weight_bound",     "holdout_fraction",
      "mode"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw InvalidArgumentError("unknown toy config key '" + key + "'");
  }
  try {
    auto num = [&](const char* key, auto& dst) {
      if (auto it = j.find(key); it != j.end()) dst = it->get<std::decay_t<decltype(dst)>>();
    };
    num("group_size", cfg.grpo.group_size);
    num("clip_epsilon", cfg.grpo.clip_epsilon);
    num("kl_beta", cfg.grpo.kl_beta);
    num("temperature", cfg.grpo.temperature);
    num("lr_initial", cfg.grpo.lr.initial);
    num("lr_final", cfg.grpo.lr.final);
    num("std_floor", cfg.grpo.std_floor);
    num("iterations", cfg.iterations);
    num("batch_size", cfg.batch_size);
    num("weight_bound", cfg.weight_bound);
    num("holdout_fraction", cfg.holdout_fraction);
    if (auto it = j.find("kl_mode"); it != j.end()) {
      auto v = it->get<std::string>();
      if (v == "sample") {
        cfg.grpo.kl_mode = KlMode::kSampleEstimator;
      } else if (v == "exact") {
        cfg.grpo.kl_mode = KlMode::kExact;
      } else {
        throw InvalidArgumentError("kl_mode must be 'sample' or 'exact'");
      }
    }
    if (auto it = j.find("mode"); it != j.end()) {
      auto m = reasoning_mode_from_name(it->get<std::string>());
      if (!m) throw InvalidArgumentError("mode must be 'enabled' or 'free'");
      cfg.mode = *m;
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgumentError(std::string("toy config: ") + e.what());
  }
  cfg.grpo.lr.total_steps = cfg.iterations;
  cfg.validate();
  return cfg;
}

std::string metrics_to_jsonl(const ToyStepMetrics& m) {
  nlohmann::ordered_json j;
  j["step"] = m.step;
  j["objective"] = m.objective;
  j["mean_reward"] = m.mean_reward;
  j["mean_kl"] = m.mean_kl;
  j["holdout_acc"] = m.holdout_acc ? nlohmann::ordered_json(*m.holdout_acc) : nlohmann::ordered_json(nullptr);
  return j.dump();
}

std::vector<PreparedPair> prepare_pairs(std::span<const TransitionPair> pairs, const StepIndex& steps,
                                        const ToyVocabulary& vocab) {
  std::vector<PreparedPair> out;
  out.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto* before = steps.find(p.s_t.ref);
    const auto* after = steps.find(p.s_tk.ref);
    if (before == nullptr || after == nullptr || !before->ui_tree || !after->ui_tree) {
      throw InvalidArgumentError("pair '" + p.pair_id + "' has no view hierarchies in the corpus");
    }
    out.push_back({enumerate_candidates(*before->ui_tree, *after->ui_tree, vocab), p.gold});
  }
  return out;
}

double greedy_accuracy(const ToyPolicy& policy, std::span<const PreparedPair> pairs) {
  if (pairs.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& p : pairs) {
    if (p.candidates.empty()) continue;
    if (match_action(p.candidates.actions[policy.greedy(p.candidates)], p.gold)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

ToyTrainResult toy_train(std::span<const TransitionPair> train, std::span<const TransitionPair> holdout,
                         const StepIndex& steps, const ToyVocabulary& vocab, const ToyTrainConfig& cfg,
                         std::uint64_t seed, const std::function<void(const ToyStepMetrics&)>& on_step) {
  cfg.validate();
  if (train.empty()) throw InvalidArgumentError("toy_train: no training pairs");
  const auto prepared = prepare_pairs(train, steps, vocab);
  const auto held = prepare_pairs(holdout, steps, vocab);

  ToyTrainResult result;
  result.policy.vocab = vocab;
  result.reference = result.policy;
  const auto& ref_w = result.reference.weights;
  auto& w = result.policy.weights;
  const auto& g = cfg.grpo;

  Rng rng(seed);
  std::vector<std::size_t> order(prepared.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(std::span(order));
  std::size_t cursor = 0;

  for (std::size_t step = 0; step < cfg.iterations; ++step) {
    const std::vector<double> old_w = w;
    std::vector<double> grad(kToyFeatureDim, 0.0);
    ToyStepMetrics m;
    m.step = step;
    double reward_sum = 0.0;
    double kl_sum = 0.0;
    std::size_t groups = 0;
    std::size_t samples = 0;

    for (std::size_t b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        cursor = 0;
        rng.shuffle(std::span(order));
      }
      const auto& pp = prepared[order[cursor++]];
      if (pp.candidates.empty()) continue;
      auto sampled = toy_sample_group(pp.candidates, pp.gold, w, old_w, ref_w, g, cfg.mode, rng);
      sampled.group.normalize(g.std_floor);

      ToyObjectiveInput in;
      in.set = &pp.candidates;
      in.choices = sampled.choices;
      in.ref_log_probs = candidate_log_probs(pp.candidates, ref_w, g.temperature);
      double group_kl = 0.0;
      for (const auto& s : sampled.group.samples) {
        in.advantages.push_back(s.advantage);
        in.logp_old.push_back(s.logp_old);
        reward_sum += s.reward;
        group_kl += kl_penalty(s.logp_new, s.logp_ref);
        ++samples;
      }
      if (g.kl_mode == KlMode::kExact) {
        auto lp = candidate_log_probs(pp.candidates, w, g.temperature);
        group_kl = exact_kl(lp, in.ref_log_probs) * static_cast<double>(sampled.group.samples.size());
      }
      kl_sum += group_kl;
      m.objective += toy_objective(in, w, g);
      auto gi = toy_objective_gradient(in, w, g);
      for (std::size_t d = 0; d < kToyFeatureDim; ++d) grad[d] += gi[d];
      ++groups;
    }
    if (groups > 0) {
      m.objective /= static_cast<double>(groups);
      m.mean_reward = reward_sum / static_cast<double>(samples);
      m.mean_kl = kl_sum / static_cast<double>(samples);
      const double lr = g.lr.at(step);
      for (std::size_t d = 0; d < kToyFeatureDim; ++d) w[d] += lr * grad[d] / static_cast<double>(groups);
    }

    double mean_abs = 0.0;
    for (double v : w) mean_abs += std::abs(v);
    mean_abs /= static_cast<double>(w.size());
    if (!std::isfinite(mean_abs) || mean_abs > cfg.weight_bound) {
      throw DivergenceError("toy policy weights diverged at step " + std::to_string(step));
    }

    if (!held.empty()) m.holdout_acc = greedy_accuracy(result.policy, held);
    if (on_step) on_step(m);
    result.metrics.push_back(m);
  }
  result.final_holdout_acc = held.empty() ? 0.0 : greedy_accuracy(result.policy, held);
  return result;
}

}  // namespace uishift
