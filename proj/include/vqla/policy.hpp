#pragma once

#include <span>
#include <string>
#include <vector>

#include "vqla/rng.hpp"
#include "vqla/scene.hpp"

namespace vqla {

// Noiseless one-hot encoding of (scene, question): question kind, target
// instrument type, target quadrant, target anchor cell, target state, scene
// organ, and a bias term. The policy sees oracle features because this
// artifact exercises the optimization mechanics, not perception.
std::size_t feature_dim(const EnvConfig& env);
std::vector<double> encode_features(const EnvConfig& env, const SceneSpec& scene,
                                    const Question& question);

// Linear three-head policy: answer class, stated quadrant, and box anchor,
// each a categorical softmax over (weights * features) / temperature.
struct PolicyParams {
  int n_features = 0;
  int n_answers = 0;
  int n_anchors = 0;
  std::vector<double> data;  // rows: answer classes, 4 quadrants, anchors

  int n_rows() const { return n_answers + 4 + n_anchors; }
  std::span<const double> row(int r) const {
    return {data.data() + static_cast<std::size_t>(r) * n_features,
            static_cast<std::size_t>(n_features)};
  }
  std::span<double> row(int r) {
    return {data.data() + static_cast<std::size_t>(r) * n_features,
            static_cast<std::size_t>(n_features)};
  }

  static PolicyParams zeros(const EnvConfig& env);

  // Stand-in for the stage-1 checkpoint that reinforcement fine-tuning
  // starts from: the answer and anchor heads already lean toward the right
  // classes, while the stated-quadrant head stays uniform. That reproduces
  // the starting condition the coherence reward exists to fix: boxes are
  // roughly right, spatial wording is uninformed.
  static PolicyParams sft_reference(const EnvConfig& env);
};

struct RolloutAction {
  int answer = 0;          // index into vocab::answers()
  Quadrant stated = Quadrant::LT;
  int anchor = 0;          // index into the anchor grid
  double logp = 0.0;       // joint log-probability at the sampling temperature
};

// Head logits for a feature vector.
std::vector<double> head_logits(const PolicyParams& params, std::span<const double> features,
                                int head_offset, int head_size);

RolloutAction policy_sample(const PolicyParams& params, std::span<const double> features,
                            double temperature, SplitMix64& rng);

// Joint log-probability of an action (sum of the three head log-probs at the
// sampling temperature).
double policy_logprob(const PolicyParams& params, std::span<const double> features,
                      const RolloutAction& action, double temperature);

// Log-probability plus its exact gradient with respect to every parameter
// (softmax score function per head, laid out like PolicyParams::data).
struct LogprobGrad {
  double logp = 0.0;
  std::vector<double> grad;
};
LogprobGrad policy_logprob_grad(const PolicyParams& params, std::span<const double> features,
                                const RolloutAction& action, double temperature);

}  // namespace vqla
