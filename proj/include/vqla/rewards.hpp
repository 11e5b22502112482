#pragma once

#include <optional>

#include "vqla/dataset.hpp"
#include "vqla/geometry.hpp"
#include "vqla/trace.hpp"

namespace vqla {

struct RewardConfig {
  double tau = 0.5;  // IoU acceptance threshold, in (0,1)
  double w_vg = 1.0;
  double w_la = 1.0;
  double w_mc = 1.0;

  void check() const;
};

struct RewardBreakdown {
  double vg = 0.0;  // IoU-gated grounding reward, [0,1]
  double la = 0.0;  // exact-match answer reward, {0,1}
  double mc = 0.0;  // quadrant-coherence reward, {0,1}
  bool vg_applicable = false;
  bool la_applicable = true;
  bool mc_applicable = false;
  double composite = 0.0;  // weighted sum over applicable components
};

// Grounding reward: IoU(truth, predicted) when it clears tau, else 0.
// A missing prediction scores 0 (rollouts must always receive a finite
// reward). Degenerate boxes in either argument throw.
double grounding_reward(const BoundingBox& truth, const std::optional<BoundingBox>& predicted,
                        double tau);

// Answer reward: 1 iff the normalized strings are equal.
double answer_match_reward(const std::string& truth_answer, const std::string& predicted_answer);

// Coherence reward: 1 iff a predicted box and a spatial claim are both
// present and the box center's quadrant equals the claim.
double coherence_reward(const std::optional<BoundingBox>& predicted,
                        const std::optional<Quadrant>& claimed, const ImageDims& dims);

// Scores one parsed rollout against its ground-truth record. Grounding
// applies iff the truth carries a box; coherence iff the question is a
// location question or the truth carries a box; the answer reward always
// applies. Inapplicable components contribute zero weight to the composite.
RewardBreakdown composite_reward(const ParsedTrace& trace, const DatasetRecord& truth,
                                 const RewardConfig& cfg, const ImageDims& dims);

}  // namespace vqla
