#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace vqla {

// One question's sampled group: per-output sequence-level log-probabilities
// under the current policy, the sampling-time policy, and the frozen
// reference policy, plus the rule-based rewards.
struct RolloutGroup {
  std::string question;               // optional context, not used by the math
  std::vector<std::string> outputs;   // optional rollout texts
  std::vector<double> logp_theta;
  std::vector<double> logp_old;
  std::vector<double> logp_ref;
  std::vector<double> rewards;

  std::size_t size() const { return rewards.size(); }
  void check() const;  // G >= 2, equal lengths, finite entries
};

enum class ObjectiveMode {
  AsWritten,  // plain ratio * advantage surrogate
  Clipped,    // min(ratio * A, clip(ratio, 1-eps, 1+eps) * A)
};

struct GrpoConfig {
  double beta = 0.04;          // KL penalty coefficient
  double epsilon = 0.2;        // clip radius, required in Clipped mode
  ObjectiveMode objective_mode = ObjectiveMode::Clipped;
  int group_size = 4;
  double temperature = 0.7;
  double learning_rate = 1e-6;
  int iterations = 1000;
  std::uint64_t seed = 0;
  int updates_per_group = 1;   // inner epochs reusing one sampled group

  void check() const;
};

struct AdvantageSet {
  std::vector<double> values;
  double reward_mean = 0.0;
  double reward_std = 0.0;  // population standard deviation
};

// Group-relative advantages: (r_i - mean) / std with the population standard
// deviation. Groups whose std falls below a 1e-8 floor are degenerate and map
// to all-zero advantages. Throws GroupTooSmall for G < 2.
AdvantageSet group_advantages(std::span<const double> rewards);

// Per-sample KL estimate between the current and reference policies:
// with r = exp(logp_ref - logp_theta), returns r - ln r - 1 (always >= 0,
// zero iff the log-probs agree). Throws NonFinite on non-finite inputs.
double kl_estimate(double logp_theta, double logp_ref);

// One clipped-surrogate term: min(ratio * a, clip(ratio, 1-eps, 1+eps) * a).
double clipped_surrogate(double ratio, double advantage, double epsilon);

// Group objective: (1/G) * sum_i [ surrogate_i - beta * kl_i ], where the
// surrogate is ratio_i * A_i as written or its clipped variant, with
// ratio_i = exp(logp_theta_i - logp_old_i) and A_i from group_advantages.
// Summation uses a fixed-order pairwise reduction so results are bit-stable.
double grpo_objective(const RolloutGroup& group, const GrpoConfig& cfg);

// Exact gradient of grpo_objective with respect to the policy parameters,
// treating logp_old and logp_ref as constants. `grad_logp_theta[i]` must be
// the parameter gradient of logp_theta for output i; all vectors must share
// one length (throws DimensionMismatch otherwise).
std::vector<double> grpo_gradient(const RolloutGroup& group,
                                  std::span<const std::vector<double>> grad_logp_theta,
                                  const GrpoConfig& cfg);

// Ascent step: params + learning_rate * gradient (the objective is maximized).
std::vector<double> update_step(std::span<const double> params, std::span<const double> gradient,
                                double learning_rate);

// Fixed-order pairwise reduction used everywhere a sum must not depend on
// evaluation order.
double pairwise_sum(std::span<const double> values);

}  // namespace vqla
