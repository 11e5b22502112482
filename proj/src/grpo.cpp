#include "vqla/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "vqla/errors.hpp"

namespace vqla {

namespace {
constexpr double kStdFloor = 1e-8;

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw NonFinite(std::string(what) + " contains a non-finite value");
    }
  }
}
}  // namespace

void RolloutGroup::check() const {
  if (size() < 2) {
    throw GroupTooSmall("rollout group needs G >= 2, got " + std::to_string(size()));
  }
  if (logp_theta.size() != size() || logp_old.size() != size() || logp_ref.size() != size()) {
    throw DimensionMismatch("log-probability arrays must match the reward count");
  }
  require_finite(rewards, "rewards");
  require_finite(logp_theta, "logp_theta");
  require_finite(logp_old, "logp_old");
  require_finite(logp_ref, "logp_ref");
}

void GrpoConfig::check() const {
  if (beta < 0.0) throw Error("BadConfig", "beta must be >= 0");
  if (objective_mode == ObjectiveMode::Clipped && !(epsilon > 0.0 && epsilon < 1.0)) {
    throw Error("BadConfig", "Clipped mode requires epsilon in (0,1)");
  }
  if (group_size < 2) throw Error("BadConfig", "group_size must be >= 2");
  if (!(temperature > 0.0)) throw Error("BadConfig", "temperature must be > 0");
  if (updates_per_group < 1) throw Error("BadConfig", "updates_per_group must be >= 1");
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  if (n == 1) return values[0];
  if (n <= 4) {
    double s = values[0];
    for (std::size_t i = 1; i < n; ++i) s += values[i];
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.subspan(0, half)) + pairwise_sum(values.subspan(half));
}

AdvantageSet group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) {
    throw GroupTooSmall("advantages need G >= 2, got " + std::to_string(rewards.size()));
  }
  require_finite(rewards, "rewards");

  const double n = static_cast<double>(rewards.size());
  AdvantageSet out;
  out.reward_mean = pairwise_sum(rewards) / n;

  std::vector<double> sq(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    const double d = rewards[i] - out.reward_mean;
    sq[i] = d * d;
  }
  out.reward_std = std::sqrt(pairwise_sum(sq) / n);

  out.values.resize(rewards.size(), 0.0);
  if (out.reward_std > kStdFloor) {
    for (std::size_t i = 0; i < rewards.size(); ++i) {
      out.values[i] = (rewards[i] - out.reward_mean) / out.reward_std;
    }
  }
  return out;
}

double kl_estimate(double logp_theta, double logp_ref) {
  if (!std::isfinite(logp_theta) || !std::isfinite(logp_ref)) {
    throw NonFinite("kl_estimate requires finite log-probabilities");
  }
  // r - ln r - 1 with r = exp(d), d = logp_ref - logp_theta. The expm1 form
  // keeps the value non-negative through rounding near d = 0.
  const double d = logp_ref - logp_theta;
  const double value = std::expm1(d) - d;
  if (!std::isfinite(value)) {
    throw NonFinite("kl_estimate overflowed; log-probability gap too large");
  }
  return value;
}

double clipped_surrogate(double ratio, double advantage, double epsilon) {
  const double clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

double grpo_objective(const RolloutGroup& group, const GrpoConfig& cfg) {
  group.check();
  cfg.check();

  const AdvantageSet adv = group_advantages(group.rewards);
  const std::size_t n = group.size();

  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = std::exp(group.logp_theta[i] - group.logp_old[i]);
    if (!std::isfinite(ratio)) {
      throw NonFinite("policy ratio overflowed");
    }
    const double surrogate = cfg.objective_mode == ObjectiveMode::Clipped
                                 ? clipped_surrogate(ratio, adv.values[i], cfg.epsilon)
                                 : ratio * adv.values[i];
    terms[i] = surrogate - cfg.beta * kl_estimate(group.logp_theta[i], group.logp_ref[i]);
  }
  return pairwise_sum(terms) / static_cast<double>(n);
}

std::vector<double> grpo_gradient(const RolloutGroup& group,
                                  std::span<const std::vector<double>> grad_logp_theta,
                                  const GrpoConfig& cfg) {
  group.check();
  cfg.check();
  if (grad_logp_theta.size() != group.size()) {
    throw DimensionMismatch("need one logp gradient per output");
  }
  const std::size_t dim = grad_logp_theta.empty() ? 0 : grad_logp_theta[0].size();
  for (const auto& g : grad_logp_theta) {
    if (g.size() != dim) {
      throw DimensionMismatch("logp gradients must share one parameter dimension");
    }
  }

  const AdvantageSet adv = group_advantages(group.rewards);
  const std::size_t n = group.size();

  // Per-output scalar multiplying grad logp_theta. Surrogate part: in the
  // clipped mode the term contributes only while the unclipped branch is
  // active (ties resolve to the unclipped branch). KL part: the estimator's
  // derivative is (1 - r) * grad logp_theta with r = exp(logp_ref - logp_theta).
  std::vector<double> coeff(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = std::exp(group.logp_theta[i] - group.logp_old[i]);
    if (!std::isfinite(ratio)) {
      throw NonFinite("policy ratio overflowed");
    }
    double surrogate_coeff = ratio * adv.values[i];
    if (cfg.objective_mode == ObjectiveMode::Clipped) {
      const double clipped = std::clamp(ratio, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
      if (ratio * adv.values[i] > clipped * adv.values[i]) {
        surrogate_coeff = 0.0;  // clipped branch active and constant in theta
      }
    }
    const double r = std::exp(group.logp_ref[i] - group.logp_theta[i]);
    coeff[i] = surrogate_coeff - cfg.beta * (1.0 - r);
  }

  std::vector<double> gradient(dim, 0.0);
  std::vector<double> terms(n);
  for (std::size_t p = 0; p < dim; ++p) {
    for (std::size_t i = 0; i < n; ++i) {
      terms[i] = coeff[i] * grad_logp_theta[i][p];
    }
    gradient[p] = pairwise_sum(terms) / static_cast<double>(n);
  }
  return gradient;
}

std::vector<double> update_step(std::span<const double> params, std::span<const double> gradient,
                                double learning_rate) {
  if (params.size() != gradient.size()) {
    throw DimensionMismatch("params and gradient sizes differ");
  }
  std::vector<double> next(params.begin(), params.end());
  for (std::size_t i = 0; i < next.size(); ++i) {
    next[i] += learning_rate * gradient[i];
  }
  return next;
}

}  // namespace vqla
