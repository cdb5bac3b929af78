#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace uishift {

struct LearningRateSchedule {
  double initial = 1e-6;
  double final = 0.0;
  std::size_t total_steps = 1;

  // Linear interpolation from initial (step 0) to final (step total_steps).
  double at(std::size_t step) const;
};

enum class KlMode {
  kSampleEstimator,  // exp(ref - new) - (ref - new) - 1 per sampled completion
  kExact,            // full-distribution KL, when the policy is enumerable
};

struct GrpoConfig {
  int group_size = 8;
  double clip_epsilon = 0.2;
  double kl_beta = 0.04;
  double temperature = 0.9;
  LearningRateSchedule lr;
  double std_floor = 1e-6;
  KlMode kl_mode = KlMode::kSampleEstimator;

  // Throws InvalidArgumentError when a field is out of range.
  void validate() const;
};

struct GroupSample {
  std::string completion;
  double reward = 0.0;
  double logp_new = 0.0;  // log pi_theta(o_i | q)
  double logp_old = 0.0;  // log pi_theta_old(o_i | q)
  double logp_ref = 0.0;  // log pi_ref(o_i | q)
  double advantage = 0.0;
};

struct GrpoGroup {
  std::string question_id;
  std::vector<GroupSample> samples;

  std::vector<double> rewards() const;
  // Fills every sample's advantage from the group's rewards.
  void normalize(double std_floor);
};

// (r_i - mean) / max(population std, std_floor). Groups whose std falls
// below the floor come out as exact zeros. Throws for fewer than 2 rewards.
std::vector<double> normalize_advantages(std::span<const double> rewards, double std_floor);

// exp(logp_new - logp_old).
double importance_ratio(double logp_new, double logp_old);

// min(rho * A, clip(rho, 1 - eps, 1 + eps) * A).
double clipped_term(double rho, double advantage, double eps);

// Per-sample KL estimate toward the reference; never negative.
double kl_penalty(double logp_new, double logp_ref);

// KL(p || q) for two aligned log-probability vectors over the same support.
double exact_kl(std::span<const double> logp, std::span<const double> logq);

// (1/G) * sum_i [clipped_term(rho_i, A_i, eps) - beta * kl_i]. Uses the
// per-sample estimator for kl_i.
double grpo_objective(const GrpoGroup& group, const GrpoConfig& cfg);

// Same surrogate, with one distribution-level KL value shared by every
// sample.
double grpo_objective(const GrpoGroup& group, const GrpoConfig& cfg, double exact_kl_value);

}  // namespace uishift
