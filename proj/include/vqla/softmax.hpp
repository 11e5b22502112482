#pragma once

#include <span>
#include <vector>

#include "vqla/rng.hpp"

namespace vqla {

// Numerically stable log-sum-exp with fixed-order summation.
double log_sum_exp(std::span<const double> logits);

// Softmax probabilities of logits / temperature.
std::vector<double> softmax(std::span<const double> logits, double temperature);

// Log-probability of one class under softmax(logits / temperature).
double categorical_logprob(std::span<const double> logits, double temperature, std::size_t index);

// Inverse-CDF draw from softmax(logits / temperature).
std::size_t categorical_sample(std::span<const double> logits, double temperature,
                               SplitMix64& rng);

// Score-function factor of the log-probability gradient with respect to the
// logits: d logp(a) / d logit_c = (1[c == a] - p_c) / temperature.
std::vector<double> categorical_score(std::span<const double> logits, double temperature,
                                      std::size_t index);

}  // namespace vqla
