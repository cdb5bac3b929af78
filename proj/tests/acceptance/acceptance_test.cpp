// Acceptance checks A1..A9. Prints one PASS/FAIL line per check and exits
// non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "support.hpp"
#include "uishift/digest.hpp"
#include "uishift/eval.hpp"
#include "uishift/grpo.hpp"
#include "uishift/logging.hpp"
#include "uishift/reward.hpp"
#include "uishift/service.hpp"
#include "uishift/synthetic_env.hpp"
#include "uishift/toy_policy.hpp"
#include "uishift/transition.hpp"

using namespace uishift;

namespace {

using Clock = std::chrono::steady_clock;
using ojson = nlohmann::ordered_json;

const auto kFree = ReasoningMode::kReasoningFree;

struct Outcome {
  bool pass = true;
  std::string detail;
  int failures = 0;

  // Records the first few failure reasons; later ones are only counted.
  void fail(const std::string& why) {
    pass = false;
    if (++failures <= 3) detail += (detail.empty() ? "" : "; ") + why;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

// A1: the gold action always earns the full reward; any click off its box earns
// no accuracy.
Outcome reward_oracle() {
  Outcome o;
  auto t0 = Clock::now();
  auto corpus = generate_corpus(WorldConfig{}, 800, 12, 101);
  auto eps = corpus.episodes();
  std::size_t pairs = 0, perturbed = 0;
  Rng rng(5);
  for (int k = 1; k <= 4; ++k) {
    auto built = build_pairs(eps, k, 2600, 40 + static_cast<std::uint64_t>(k));
    if (built.pairs.size() != 2600) o.fail("k=" + std::to_string(k) + " produced " + std::to_string(built.pairs.size()));
    for (const auto& p : built.pairs) {
      ++pairs;
      auto r = score(wrap_answer(p.gold.action, kFree), p.gold, kFree);
      if (r.total != 2.0) o.fail(p.pair_id + " scored " + fmt(r.total));
      const auto* c = std::get_if<Click>(&p.gold.action);
      if (c == nullptr) continue;
      const BBox& b = *p.gold.bbox;
      std::vector<Click> outside = {{b.x_max + 1, c->y}, {c->x, b.y_max + 1},
                                    {b.x_max + 1 + static_cast<std::int64_t>(rng.below(500)), b.y_max + 1}};
      if (b.x_min > 0) outside.push_back({b.x_min - 1, c->y});
      if (b.y_min > 0) outside.push_back({c->x, b.y_min - 1});
      if (b.x_min > 0 && b.y_min > 0) outside.push_back({static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(b.x_min))), c->y});
      for (const auto& q : outside) {
        ++perturbed;
        auto rq = score(wrap_answer(q, kFree), p.gold, kFree);
        if (rq.r_accuracy != 0.0) o.fail(p.pair_id + " perturbed click still credited");
      }
    }
  }
  double secs = seconds_since(t0);
  if (pairs < 10000) o.fail("only " + std::to_string(pairs) + " pairs");
  if (secs >= 10.0) o.fail("took " + fmt(secs) + " s");
  if (o.pass) o.detail = std::to_string(pairs) + " pairs, " + std::to_string(perturbed) + " perturbed clicks, " + fmt(secs) + " s";
  return o;
}

// A2: normalized groups have zero mean and unit population std; flat groups give exact zeros.
Outcome advantage_normalization() {
  Outcome o;
  Rng rng(77);
  const double floor = 1e-6;
  std::size_t flat = 0;
  for (int g = 0; g < 1000; ++g) {
    auto n = static_cast<std::size_t>(rng.between(2, 16));
    std::vector<double> r(n);
    bool all_equal = rng.below(10) == 0;
    double base = static_cast<double>(rng.below(3));
    for (auto& v : r) v = all_equal ? base : (rng.below(2) ? static_cast<double>(rng.below(3)) : rng.unit() * 10 - 5);
    auto a = normalize_advantages(r, floor);
    double mean = 0;
    for (double v : r) mean += v;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double v : r) var += (v - mean) * (v - mean);
    double sd = std::sqrt(var / static_cast<double>(n));
    if (sd < floor) {
      ++flat;
      for (double v : a) {
        if (v != 0.0) o.fail("group " + std::to_string(g) + " not exactly zero");
      }
      continue;
    }
    double s = 0, s2 = 0;
    for (double v : a) s += v;
    for (double v : a) s2 += (v - s / static_cast<double>(n)) * (v - s / static_cast<double>(n));
    double sd_a = std::sqrt(s2 / static_cast<double>(n));
    if (std::abs(s) > 1e-9) o.fail("group " + std::to_string(g) + " sum " + fmt(s));
    if (std::abs(sd_a - 1.0) > 1e-9) o.fail("group " + std::to_string(g) + " std " + fmt(sd_a));
  }
  auto near = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (std::abs(a[i] - b[i]) > 1e-9) return false;
    }
    return true;
  };
  if (!near(normalize_advantages(std::vector<double>{2, 0}, floor), {1, -1})) o.fail("[2,0] fixture");
  const double r2 = std::sqrt(2.0);
  if (!near(normalize_advantages(std::vector<double>{2, 1, 0, 1}, floor), {r2, 0, -r2, 0})) o.fail("[2,1,0,1] fixture");
  if (o.pass) o.detail = "1000 groups (" + std::to_string(flat) + " flat), fixtures match";
  return o;
}

// A3: analytic toy gradient against central differences.
Outcome gradient_check() {
  Outcome o;
  double worst = 0;
  for (auto mode : {KlMode::kSampleEstimator, KlMode::kExact}) {
    GrpoConfig cfg;  // G=8, eps=0.2, beta=0.04
    cfg.kl_mode = mode;
    Rng rng(mode == KlMode::kExact ? 303 : 202);
    for (int i = 0; i < 100; ++i) {
      CandidateSet set;
      auto n = static_cast<std::size_t>(rng.between(2, 10));
      for (std::size_t c = 0; c < n; ++c) {
        FeatureVector f{};
        for (auto& v : f) v = rng.below(3) == 0 ? rng.unit() * 2 - 1 : 0.0;
        set.actions.push_back(Scroll{});
        set.features.push_back(f);
      }
      auto draw = [&](double spread) {
        std::vector<double> w(kToyFeatureDim);
        for (auto& v : w) v = (rng.unit() - 0.5) * spread;
        return w;
      };
      auto w = draw(4);
      auto old_w = w;
      for (auto& v : old_w) v += (rng.unit() - 0.5) * 0.8;
      auto lp_old = candidate_log_probs(set, old_w, cfg.temperature);
      ToyObjectiveInput in;
      in.set = &set;
      in.ref_log_probs = candidate_log_probs(set, draw(4), cfg.temperature);
      std::vector<double> rewards;
      for (int s = 0; s < cfg.group_size; ++s) {
        auto c = static_cast<std::size_t>(rng.below(n));
        in.choices.push_back(c);
        in.logp_old.push_back(lp_old[c]);
        rewards.push_back(static_cast<double>(rng.below(3)));
      }
      in.advantages = normalize_advantages(rewards, cfg.std_floor);

      auto analytic = toy_objective_gradient(in, w, cfg);
      const double h = 1e-6;
      double diff = 0, na = 0, nb = 0;
      for (std::size_t d = 0; d < kToyFeatureDim; ++d) {
        auto plus = w, minus = w;
        plus[d] += h;
        minus[d] -= h;
        double numeric = (toy_objective(in, plus, cfg) - toy_objective(in, minus, cfg)) / (2 * h);
        diff += (analytic[d] - numeric) * (analytic[d] - numeric);
        na += analytic[d] * analytic[d];
        nb += numeric * numeric;
      }
      double scale = std::max(std::sqrt(na), std::sqrt(nb));
      double rel = scale < 1e-10 ? std::sqrt(diff) : std::sqrt(diff) / scale;
      worst = std::max(worst, rel);
      if (rel > 1e-4) o.fail(std::string(mode == KlMode::kExact ? "exact" : "sample") + " instance " + std::to_string(i) + " rel " + fmt(rel));
    }
  }
  if (o.pass) o.detail = "200 instances (both KL modes), worst relative error " + fmt(worst);
  return o;
}

// A4: hand-computed objective values.
Outcome objective_fixtures() {
  Outcome o;
  auto check = [&](const char* what, double got, double want) {
    if (std::abs(got - want) > 1e-12) o.fail(std::string(what) + " got " + fmt(got));
  };
  check("clip(1.5, A=1)", clipped_term(1.5, 1.0, 0.2), 1.2);
  check("clip(0.5, A=-1)", clipped_term(0.5, -1.0, 0.2), -0.8);
  check("kl(d=ln2)", kl_penalty(0.0, std::log(2.0)), 2.0 - std::log(2.0) - 1.0);
  check("kl(d=0)", kl_penalty(-0.3, -0.3), 0.0);
  check("ratio", importance_ratio(std::log(0.5), 0.0), 0.5);

  // Two samples: rho=1.5 with A=1 and ref ahead by ln 2; rho=0.5 with A=-1 and
  // ref equal. Objective = ((1.2 - 0.04 (1 - ln 2)) + (-0.8)) / 2.
  GrpoConfig cfg;
  GrpoGroup g;
  g.samples.push_back({"a", 2, std::log(1.5), 0.0, std::log(3.0), 1.0});
  g.samples.push_back({"b", 0, std::log(0.5), 0.0, std::log(0.5), -1.0});
  check("objective", grpo_objective(g, cfg), 0.18 + 0.02 * std::log(2.0));
  check("objective, exact KL 0.5", grpo_objective(g, cfg, 0.5), 0.18);
  cfg.kl_beta = 0;
  check("objective, beta 0", grpo_objective(g, cfg), 0.2);

  std::vector<double> p{std::log(0.5), std::log(0.5)}, q{std::log(0.25), std::log(0.75)};
  check("exact_kl", exact_kl(p, q), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0));
  if (o.pass) o.detail = "9 fixtures to 1e-12";
  return o;
}

// A5: GRPO on the toy policy reaches high held-out accuracy.
Outcome closed_loop() {
  Outcome o;
  auto t0 = Clock::now();
  auto corpus = generate_corpus(WorldConfig{}, 400, 8, 2025);
  auto eps = corpus.episodes();
  auto pairs = build_pairs(eps, 1, 200, 7).pairs;
  if (pairs.size() != 200) o.fail("only " + std::to_string(pairs.size()) + " pairs");
  StepIndex steps(eps);
  auto vocab = vocabulary_from(eps);
  std::span<const TransitionPair> all(pairs);
  auto holdout = all.first(40);
  auto train = all.subspan(40);

  struct Run {
    std::string name;
    double beta;
    KlMode kl;
    double target;
  };
  std::vector<Run> runs = {{"default", 0.04, KlMode::kSampleEstimator, 0.95},
                           {"beta=0", 0.0, KlMode::kSampleEstimator, 0.90},
                           {"exact-KL", 0.04, KlMode::kExact, 0.90}};
  std::string summary;
  for (const auto& r : runs) {
    ToyTrainConfig cfg;
    cfg.grpo.kl_beta = r.beta;
    cfg.grpo.kl_mode = r.kl;
    auto result = toy_train(train, holdout, steps, vocab, cfg, 11);
    if (result.final_holdout_acc < r.target) o.fail(r.name + " holdout " + fmt(result.final_holdout_acc));
    summary += (summary.empty() ? "" : ", ") + r.name + " " + fmt(result.final_holdout_acc);
  }
  double secs = seconds_since(t0);
  if (secs >= 300) o.fail("took " + fmt(secs) + " s");
  if (o.pass) o.detail = "holdout accuracy " + summary + " after 500 iterations, " + fmt(secs) + " s";
  return o;
}

// A6: deterministic bytes and one pair per episode when episodes suffice.
Outcome pair_builder() {
  Outcome o;
  auto eps = generate_corpus(WorldConfig{}, 1000, 4, 606).episodes();
  support::TempDir dir;
  for (int k = 1; k <= 2; ++k) {
    write_pairs(dir / "a.jsonl", build_pairs(eps, k, 500, 99).pairs);
    write_pairs(dir / "b.jsonl", build_pairs(eps, k, 500, 99).pairs);
    if (support::read_text(dir / "a.jsonl") != support::read_text(dir / "b.jsonl")) o.fail("k=" + std::to_string(k) + " bytes differ");
  }
  auto diverse = build_pairs(eps, 1, 1000, 3);
  std::set<std::string> ids;
  for (const auto& p : diverse.pairs) ids.insert(p.episode_id);
  if (diverse.report.eligible_episodes != 1000) o.fail(std::to_string(diverse.report.eligible_episodes) + " eligible episodes");
  if (diverse.pairs.size() != 1000 || ids.size() != 1000) o.fail(std::to_string(ids.size()) + " distinct episodes");
  if (o.pass) o.detail = "identical bytes; 1000 pairs over 1000 distinct episodes";
  return o;
}

// A7: the automation fixture plus the SR <= Type invariant. Grounding edge points count.
Outcome eval_harness() {
  Outcome o;
  const GoldTarget click{Click{50, 50}, BBox{40, 40, 60, 60}};
  std::vector<AutomationRecord> fixture = {{"hit", click, Click{45, 55}, {}},
                                           {"miss", click, Click{0, 0}, {}},
                                           {"scroll", {Scroll{Direction::kDown}, std::nullopt}, Scroll{Direction::kDown}, {}},
                                           {"garbled", {NavigateBack{}, std::nullopt}, std::nullopt, {}}};
  auto m = eval_automation(fixture).overall;
  if (m.type_accuracy() != 0.75 || m.grounding_accuracy() != 0.5 || m.success_rate() != 0.5) o.fail("fixture metrics");

  Rng rng(7);
  const std::vector<std::string> tags = {"a", "b", "c"};
  for (int s = 0; s < 1000; ++s) {
    std::vector<AutomationRecord> recs;
    auto n = rng.between(1, 40);
    for (std::uint64_t i = 0; i < n; ++i) {
      GoldTarget gold;
      if (rng.below(2)) {
        BBox b{static_cast<std::int64_t>(rng.below(50)), static_cast<std::int64_t>(rng.below(50)), 0, 0};
        b.x_max = b.x_min + static_cast<std::int64_t>(rng.below(30));
        b.y_max = b.y_min + static_cast<std::int64_t>(rng.below(30));
        gold = {Click{b.x_min, b.y_min}, b};
      } else {
        auto a = support::random_action(rng);
        if (std::holds_alternative<Click>(a)) a = NavigateBack{};
        gold = {a, std::nullopt};
      }
      std::optional<Action> pred;
      switch (rng.below(4)) {
        case 0: pred = gold.action; break;
        case 1: pred = Click{static_cast<std::int64_t>(rng.below(90)), static_cast<std::int64_t>(rng.below(90))}; break;
        case 2: pred = support::random_action(rng); break;
        default: break;
      }
      recs.push_back({std::to_string(i), gold, pred, {tags[rng.below(3)]}});
    }
    auto r = eval_automation(recs);
    if (r.overall.success > r.overall.type_correct) o.fail("set " + std::to_string(s) + " SR > Type");
    for (const auto& [name, c] : r.splits) {
      if (c.success > c.type_correct) o.fail("set " + std::to_string(s) + " split " + name + " SR > Type");
    }
  }

  BBox b{10, 20, 30, 40};
  std::vector<GroundingRecord> edges = {{"tl", b, 10, 20, {}}, {"tr", b, 30, 20, {}}, {"bl", b, 10, 40, {}},
                                        {"br", b, 30, 40, {}}, {"mid-edge", b, 20, 40, {}}};
  if (eval_grounding(edges).overall.grounding_accuracy() != 1.0) o.fail("edge points not counted");
  if (o.pass) o.detail = "fixture 0.75/0.5/0.5; 1000 random sets; edge points count";
  return o;
}

// A8: the recorded actions replay through the world model.
Outcome replay() {
  Outcome o;
  auto corpus = generate_corpus(WorldConfig{}, 1000, 10, 808);
  std::size_t steps = 0;
  for (const auto& r : corpus.rollouts) {
    for (std::size_t t = 0; t + 1 < r.states.size(); ++t) {
      ++steps;
      if (corpus.world.apply(r.states[t], *r.episode.steps[t].action) != r.states[t + 1]) {
        o.fail(r.episode.episode_id + " step " + std::to_string(t));
      }
    }
  }
  auto eps = corpus.episodes();
  auto pairs = build_pairs(eps, 1, 1000000, 1).pairs;
  for (const auto& p : pairs) {
    const auto* r = corpus.find(p.episode_id);
    auto a = oracle_first_action(p, corpus);
    auto next = corpus.world.apply(r->states[p.t], a);
    if (next != r->states[p.t + 1] || corpus.world.render(next) != *r->episode.steps[p.t + 1].ui_tree) {
      o.fail(p.pair_id + " oracle does not replay");
    }
  }
  if (o.pass) o.detail = std::to_string(steps) + " steps over 1000 episodes; " + std::to_string(pairs.size()) + " k=1 pairs replay";
  return o;
}

// A9: the running service and the library agree byte for byte.
Outcome service_equivalence() {
  Outcome o;
  auto corpus = generate_corpus(WorldConfig{}, 60, 6, 909);
  auto eps = corpus.episodes();
  auto pairs = build_pairs(eps, 1, 100, 2).pairs;
  PairIndex index;
  for (const auto& p : pairs) index.emplace(p.pair_id, p.gold);

  RewardServer server(index, ServiceConfig{});
  int port = server.bind("127.0.0.1:0");
  std::thread th([&] { server.run(); });
  httplib::Client client("127.0.0.1", port);
  for (int i = 0; i < 200 && !client.Get("/healthz"); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(10));

  auto gold_json = [](const GoldTarget& g) {
    ojson j;
    j["action"] = ojson::parse(serialize_action(g.action));
    j["bbox"] = g.bbox ? ojson{g.bbox->x_min, g.bbox->y_min, g.bbox->x_max, g.bbox->y_max} : ojson(nullptr);
    return j;
  };

  Rng rng(99);
  std::size_t items_checked = 0;
  for (int q = 0; q < 100; ++q) {
    RewardOptions opts;
    opts.mode = rng.below(2) ? ReasoningMode::kReasoningEnabled : kFree;
    opts.gate_accuracy_on_format = rng.below(4) == 0;
    bool want_adv = rng.below(5) != 0;
    ojson req;
    req["mode"] = opts.mode == kFree ? "free" : "enabled";
    if (opts.gate_accuracy_on_format || rng.below(2)) req["gate_accuracy_on_format"] = opts.gate_accuracy_on_format;
    if (!want_adv || rng.below(2)) req["advantages"] = want_adv;
    req["items"] = ojson::array();

    ojson expected_items = ojson::array();
    auto n_items = rng.between(1, 6);
    for (std::uint64_t it = 0; it < n_items; ++it) {
      const auto& p = pairs[rng.below(pairs.size())];
      ojson item;
      bool unknown = rng.below(12) == 0;
      bool inline_gold = !unknown && rng.below(3) == 0;
      if (inline_gold) {
        item["gold"] = gold_json(p.gold);
      } else {
        item["pair_id"] = unknown ? "no-such-pair" : p.pair_id;
      }
      std::vector<std::string> samples;
      auto g = rng.between(1, 16);
      for (std::uint64_t s = 0; s < g; ++s) {
        switch (rng.below(4)) {
          case 0: samples.push_back(wrap_answer(p.gold.action, opts.mode, "reasoning")); break;
          case 1: samples.push_back(wrap_answer(support::random_action(rng), opts.mode, "x")); break;
          case 2: samples.push_back(wrap_answer(p.gold.action, rng.below(2) ? kFree : ReasoningMode::kReasoningEnabled)); break;
          default: samples.push_back(support::random_text(rng)); break;
        }
      }
      item["samples"] = samples;
      req["items"].push_back(item);

      ojson want;
      if (unknown) {
        want["error"] = nullptr;
      } else {
        if (!inline_gold) want["pair_id"] = p.pair_id;
        auto rewards = score_group(samples, p.gold, opts);
        want["rewards"] = ojson::array();
        for (const auto& b : rewards) want["rewards"].push_back({{"r_format", b.r_format}, {"r_accuracy", b.r_accuracy}, {"total", b.total}});
        if (want_adv && rewards.size() >= 2) want["advantages"] = normalize_advantages(totals(rewards), 1e-6);
      }
      expected_items.push_back(want);
    }

    auto body = req.dump(-1, ' ', false, ojson::error_handler_t::replace);
    auto res = client.Post("/v1/score", body, "application/json");
    if (!res || res->status != 200) {
      o.fail("request " + std::to_string(q) + " failed");
      continue;
    }
    auto got = ojson::parse(res->body);
    auto digest = sha256_hex(nlohmann::json::parse(body).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
    if (got["request_digest"] != digest) o.fail("request " + std::to_string(q) + " digest");
    if (got["service_version"] != std::string(version())) o.fail("service_version");
    if (got["items"].size() != expected_items.size()) {
      o.fail("request " + std::to_string(q) + " item count");
      continue;
    }
    for (std::size_t i = 0; i < expected_items.size(); ++i) {
      ++items_checked;
      const auto& want = expected_items[i];
      const auto& have = got["items"][i];
      if (want.contains("error")) {
        if (!have.contains("error") || have.size() != 1) o.fail("request " + std::to_string(q) + " item " + std::to_string(i) + " should be an error");
      } else if (have.dump() != want.dump()) {
        o.fail("request " + std::to_string(q) + " item " + std::to_string(i) + " differs");
      }
    }

    // Same request again, and with keys reordered and whitespace added.
    auto again = client.Post("/v1/score", body, "application/json");
    auto reordered = nlohmann::json::parse(body).dump(2);
    auto third = client.Post("/v1/score", reordered, "application/json");
    if (!again || !third || again->body != res->body || ojson::parse(third->body)["request_digest"] != digest) {
      o.fail("request " + std::to_string(q) + " digest not idempotent");
    }
  }
  server.stop();
  th.join();
  if (o.pass) o.detail = "100 requests, " + std::to_string(items_checked) + " items byte-identical; digests stable";
  return o;
}

}  // namespace

int main() {
  // Expected shortfall warnings would interleave with the report.
  if (std::getenv("UISHIFT_LOG") == nullptr) {
    set_log_level("error");
  } else {
    configure_logging_from_env();
  }
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks = {
      {"A1", reward_oracle},   {"A2", advantage_normalization}, {"A3", gradient_check},
      {"A4", objective_fixtures}, {"A5", closed_loop},          {"A6", pair_builder},
      {"A7", eval_harness},    {"A8", replay},                  {"A9", service_equivalence}};
  int failed = 0;
  for (const auto& [id, run] : checks) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s %s %s\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
