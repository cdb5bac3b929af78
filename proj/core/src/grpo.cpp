#include "uishift/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "uishift/error.hpp"

namespace uishift {

double LearningRateSchedule::at(std::size_t step) const {
  if (total_steps == 0 || step >= total_steps) return final;
  double frac = static_cast<double>(step) / static_cast<double>(total_steps);
  return initial + (final - initial) * frac;
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw InvalidArgumentError("group_size must be >= 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw InvalidArgumentError("clip_epsilon must be in (0, 1)");
  if (!(kl_beta >= 0.0)) throw InvalidArgumentError("kl_beta must be >= 0");
  if (!(temperature > 0.0)) throw InvalidArgumentError("temperature must be > 0");
  if (!(std_floor > 0.0)) throw InvalidArgumentError("std_floor must be > 0");
  if (!(lr.initial >= 0.0) || !(lr.final >= 0.0)) throw InvalidArgumentError("learning rates must be >= 0");
}

std::vector<double> GrpoGroup::rewards() const {
  std::vector<double> r;
  r.reserve(samples.size());
  for (const auto& s : samples) r.push_back(s.reward);
  return r;
}

void GrpoGroup::normalize(double std_floor) {
  auto adv = normalize_advantages(rewards(), std_floor);
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i].advantage = adv[i];
}

std::vector<double> normalize_advantages(std::span<const double> rewards, double std_floor) {
  if (rewards.size() < 2) throw InvalidArgumentError("advantage normalization needs a group of at least 2");
  if (!(std_floor > 0.0)) throw InvalidArgumentError("std_floor must be > 0");
  const auto n = static_cast<double>(rewards.size());
  std::vector<double> out(rewards.size(), 0.0);
  if (std::all_of(rewards.begin(), rewards.end(), [&](double r) { return r == rewards.front(); })) {
    return out;
  }
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  double denom = std::max(std::sqrt(var / n), std_floor);
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / denom;
  return out;
}

double importance_ratio(double logp_new, double logp_old) { return std::exp(logp_new - logp_old); }

double clipped_term(double rho, double advantage, double eps) {
  double unclipped = rho * advantage;
  double clipped = std::clamp(rho, 1.0 - eps, 1.0 + eps) * advantage;
  return std::min(unclipped, clipped);
}

double kl_penalty(double logp_new, double logp_ref) {
  double d = logp_ref - logp_new;
  // expm1(d) - d is the same quantity without cancellation near d = 0.
  return std::expm1(d) - d;
}

double exact_kl(std::span<const double> logp, std::span<const double> logq) {
  if (logp.size() != logq.size()) throw InvalidArgumentError("exact_kl: support sizes differ");
  double kl = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i) {
    double p = std::exp(logp[i]);
    if (p > 0.0) kl += p * (logp[i] - logq[i]);
  }
  return std::max(kl, 0.0);
}

namespace {

double surrogate_sum(const GrpoGroup& group, const GrpoConfig& cfg) {
  double sum = 0.0;
  for (const auto& s : group.samples) {
    sum += clipped_term(importance_ratio(s.logp_new, s.logp_old), s.advantage, cfg.clip_epsilon);
  }
  return sum;
}

}  // namespace

double grpo_objective(const GrpoGroup& group, const GrpoConfig& cfg) {
  if (group.samples.empty()) throw InvalidArgumentError("grpo_objective: empty group");
  double sum = surrogate_sum(group, cfg);
  for (const auto& s : group.samples) sum -= cfg.kl_beta * kl_penalty(s.logp_new, s.logp_ref);
  return sum / static_cast<double>(group.samples.size());
}

double grpo_objective(const GrpoGroup& group, const GrpoConfig& cfg, double exact_kl_value) {
  if (group.samples.empty()) throw InvalidArgumentError("grpo_objective: empty group");
  auto g = static_cast<double>(group.samples.size());
  return surrogate_sum(group, cfg) / g - cfg.kl_beta * exact_kl_value;
}

}  // namespace uishift
