#include "vqla/softmax.hpp"

#include <algorithm>
#include <cmath>

#include "vqla/errors.hpp"
#include "vqla/grpo.hpp"

namespace vqla {

double log_sum_exp(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> shifted(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    shifted[i] = std::exp(logits[i] - m);
  }
  return m + std::log(pairwise_sum(shifted));
}

std::vector<double> softmax(std::span<const double> logits, double temperature) {
  std::vector<double> z(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) z[i] = logits[i] / temperature;
  const double lse = log_sum_exp(z);
  std::vector<double> p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) p[i] = std::exp(z[i] - lse);
  return p;
}

double categorical_logprob(std::span<const double> logits, double temperature,
                           std::size_t index) {
  if (index >= logits.size()) {
    throw OutOfSupport("class index " + std::to_string(index) + " outside head of size " +
                       std::to_string(logits.size()));
  }
  std::vector<double> z(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) z[i] = logits[i] / temperature;
  return z[index] - log_sum_exp(z);
}

std::size_t categorical_sample(std::span<const double> logits, double temperature,
                               SplitMix64& rng) {
  const std::vector<double> p = softmax(logits, temperature);
  const double u = rng.next_double();
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return p.size() - 1;  // guard against accumulated rounding
}

std::vector<double> categorical_score(std::span<const double> logits, double temperature,
                                      std::size_t index) {
  if (index >= logits.size()) {
    throw OutOfSupport("class index " + std::to_string(index) + " outside head of size " +
                       std::to_string(logits.size()));
  }
  std::vector<double> p = softmax(logits, temperature);
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = ((i == index ? 1.0 : 0.0) - p[i]) / temperature;
  }
  return p;
}

}  // namespace vqla
