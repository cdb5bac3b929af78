#include <benchmark/benchmark.h>

#include "uishift/grpo.hpp"
#include "uishift/reward.hpp"
#include "uishift/synthetic_env.hpp"
#include "uishift/toy_policy.hpp"
#include "uishift/transition.hpp"

using namespace uishift;

namespace {

const GoldTarget kGold{Click{120, 340}, BBox{100, 300, 200, 380}};

void BM_ScoreWellFormed(benchmark::State& state) {
  auto raw = wrap_answer(Click{150, 350}, ReasoningMode::kReasoningEnabled, "the list moved up");
  for (auto _ : state) benchmark::DoNotOptimize(score(raw, kGold, ReasoningMode::kReasoningEnabled));
}
BENCHMARK(BM_ScoreWellFormed);

void BM_ScoreMalformed(benchmark::State& state) {
  std::string raw = "I would click the button <answer>{\"action_type\":\"click\",\"x\":150}</answer>";
  for (auto _ : state) benchmark::DoNotOptimize(score(raw, kGold, ReasoningMode::kReasoningFree));
}
BENCHMARK(BM_ScoreMalformed);

void BM_NormalizeAdvantages(benchmark::State& state) {
  std::vector<double> r(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = static_cast<double>(i % 3);
  for (auto _ : state) benchmark::DoNotOptimize(normalize_advantages(r, 1e-6));
}
BENCHMARK(BM_NormalizeAdvantages)->Arg(8)->Arg(64);

void BM_BuildPairs(benchmark::State& state) {
  auto eps = generate_corpus(WorldConfig{}, 500, 10, 1).episodes();
  for (auto _ : state) benchmark::DoNotOptimize(build_pairs(eps, static_cast<int>(state.range(0)), 1000, 7));
}
BENCHMARK(BM_BuildPairs)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ToyGradient(benchmark::State& state) {
  CandidateSet set;
  for (int c = 0; c < 10; ++c) {
    FeatureVector f{};
    f[static_cast<std::size_t>(c) % kToyFeatureDim] = 1.0;
    set.actions.push_back(Scroll{});
    set.features.push_back(f);
  }
  GrpoConfig cfg;
  std::vector<double> w(kToyFeatureDim, 0.1);
  auto lp = candidate_log_probs(set, w, cfg.temperature);
  ToyObjectiveInput in{&set, {0, 1, 2, 3, 4, 5, 6, 7}, normalize_advantages(std::vector<double>{2, 0, 1, 0, 2, 1, 0, 0}, 1e-6),
                       {lp[0], lp[1], lp[2], lp[3], lp[4], lp[5], lp[6], lp[7]}, lp};
  for (auto _ : state) benchmark::DoNotOptimize(toy_objective_gradient(in, w, cfg));
}
BENCHMARK(BM_ToyGradient);

}  // namespace

BENCHMARK_MAIN();
