#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uishift/action.hpp"
#include "uishift/grpo.hpp"
#include "uishift/reward.hpp"
#include "uishift/rng.hpp"
#include "uishift/trajectory.hpp"
#include "uishift/transition.hpp"

namespace uishift {

// Softmax-linear stand-in for the VLM: scores each candidate action for a
// (S_t, S_{t+k}) pair of view hierarchies by w . phi(pair, candidate).
inline constexpr std::size_t kToyFeatureDim = 6;
using FeatureVector = std::array<double, kToyFeatureDim>;

struct ToyVocabulary {
  std::vector<std::string> app_names;
  std::vector<std::string> texts;
};

// App names seen in app bars and open_app actions; texts seen in input_text
// actions. Sorted and deduplicated.
ToyVocabulary vocabulary_from(std::span<const Episode> episodes);

struct CandidateSet {
  std::vector<Action> actions;
  std::vector<FeatureVector> features;

  std::size_t size() const { return actions.size(); }
  bool empty() const { return actions.empty(); }
};

// One click per clickable node center of `before`, four scrolls, back,
// open_app over the vocabulary and input_text over the vocabulary, each with
// its feature vector.
CandidateSet enumerate_candidates(const UiNode& before, const UiNode& after, const ToyVocabulary& vocab);

// log softmax(features . weights / temperature).
std::vector<double> candidate_log_probs(const CandidateSet& set, std::span<const double> weights,
                                        double temperature);

struct ToyPolicy {
  std::vector<double> weights = std::vector<double>(kToyFeatureDim, 0.0);
  ToyVocabulary vocab;

  std::vector<double> log_probs(const CandidateSet& set, double temperature) const {
    return candidate_log_probs(set, weights, temperature);
  }
  // Highest-scoring candidate; ties go to the first.
  std::size_t greedy(const CandidateSet& set) const;
};

// A group drawn for one pair, with the candidate index behind each sample.
struct SampledGroup {
  GrpoGroup group;
  std::vector<std::size_t> choices;
};

// Draws G candidates i.i.d. from the temperature softmax of `old_weights`,
// scores each wrapped completion with the reward engine, and records the log
// probabilities under the current, old and reference weights. Advantages are
// left at zero. Throws InvalidArgumentError on an empty candidate set.
SampledGroup toy_sample_group(const CandidateSet& set, const GoldTarget& gold,
                              std::span<const double> weights, std::span<const double> old_weights,
                              std::span<const double> ref_weights, const GrpoConfig& cfg,
                              ReasoningMode mode, Rng& rng);

// Everything the objective needs for one group, in candidate-index form.
struct ToyObjectiveInput {
  const CandidateSet* set = nullptr;
  std::vector<std::size_t> choices;
  std::vector<double> advantages;
  std::vector<double> logp_old;      // per sample
  std::vector<double> ref_log_probs; // per candidate
};

// GRPO objective of one group as a function of the weights, evaluated through
// grpo_objective.
double toy_objective(const ToyObjectiveInput& in, std::span<const double> weights, const GrpoConfig& cfg);

// Analytic gradient of toy_objective with respect to the weights.
std::vector<double> toy_objective_gradient(const ToyObjectiveInput& in, std::span<const double> weights,
                                           const GrpoConfig& cfg);

struct ToyTrainConfig {
  GrpoConfig grpo{.group_size = 8,
                  .clip_epsilon = 0.2,
                  .kl_beta = 0.04,
                  .temperature = 0.9,
                  .lr = {.initial = 0.5, .final = 0.0, .total_steps = 500},
                  .std_floor = 1e-6,
                  .kl_mode = KlMode::kSampleEstimator};
  std::size_t iterations = 500;
  std::size_t batch_size = 16;  // pairs per iteration
  double weight_bound = 1e3;    // abort when mean |w| exceeds this
  double holdout_fraction = 0.2;  // used when no explicit holdout set is given
  ReasoningMode mode = ReasoningMode::kReasoningFree;

  void validate() const;
};

// JSON object with any of: group_size, clip_epsilon, kl_beta, temperature,
// lr_initial, lr_final, std_floor, kl_mode ("sample"|"exact"), iterations,
// batch_size, weight_bound, holdout_fraction, mode ("enabled"|"free").
// lr total steps follow iterations.
ToyTrainConfig toy_config_from_json(std::string_view text);

struct ToyStepMetrics {
  std::size_t step = 0;
  double objective = 0.0;
  double mean_reward = 0.0;
  double mean_kl = 0.0;
  std::optional<double> holdout_acc;
};

std::string metrics_to_jsonl(const ToyStepMetrics& m);

struct ToyTrainResult {
  ToyPolicy policy;
  ToyPolicy reference;
  std::vector<ToyStepMetrics> metrics;
  double final_holdout_acc = 0.0;
};

// Pairs whose view hierarchies cannot be found in `steps` throw
// InvalidArgumentError.
struct PreparedPair {
  CandidateSet candidates;
  GoldTarget gold;
};
std::vector<PreparedPair> prepare_pairs(std::span<const TransitionPair> pairs, const StepIndex& steps,
                                        const ToyVocabulary& vocab);

// Fraction of pairs whose greedy candidate matches the gold target.
double greedy_accuracy(const ToyPolicy& policy, std::span<const PreparedPair> pairs);

// GRPO on the toy policy. Each iteration refreshes the old policy, samples a
// group per batch pair, normalizes advantages, and takes one gradient ascent
// step on the mean objective with the scheduled learning rate. The reference
// policy is the starting policy. `on_step` (if set) sees each step's metrics.
ToyTrainResult toy_train(std::span<const TransitionPair> train, std::span<const TransitionPair> holdout,
                         const StepIndex& steps, const ToyVocabulary& vocab, const ToyTrainConfig& cfg,
                         std::uint64_t seed,
                         const std::function<void(const ToyStepMetrics&)>& on_step = {});

}  // namespace uishift
