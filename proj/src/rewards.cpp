#include "vqla/rewards.hpp"

#include "vqla/errors.hpp"

namespace vqla {

void RewardConfig::check() const {
  if (!(tau > 0.0 && tau < 1.0)) {
    throw Error("BadConfig", "tau must lie strictly between 0 and 1");
  }
  if (w_vg < 0.0 || w_la < 0.0 || w_mc < 0.0) {
    throw Error("BadConfig", "reward weights must be >= 0");
  }
  if (w_vg == 0.0 && w_la == 0.0 && w_mc == 0.0) {
    throw Error("BadConfig", "at least one reward weight must be > 0");
  }
}

double grounding_reward(const BoundingBox& truth, const std::optional<BoundingBox>& predicted,
                        double tau) {
  if (!predicted) return 0.0;
  const double overlap = iou(truth, *predicted);
  return overlap >= tau ? overlap : 0.0;
}

double answer_match_reward(const std::string& truth_answer,
                           const std::string& predicted_answer) {
  return truth_answer == predicted_answer ? 1.0 : 0.0;
}

double coherence_reward(const std::optional<BoundingBox>& predicted,
                        const std::optional<Quadrant>& claimed, const ImageDims& dims) {
  if (!predicted || !claimed || !predicted->valid()) return 0.0;
  const double cx = predicted->center_x();
  const double cy = predicted->center_y();
  if (cx < 0 || cy < 0 || cx > dims.width || cy > dims.height) return 0.0;
  return quadrant_of(cx, cy, dims) == *claimed ? 1.0 : 0.0;
}

RewardBreakdown composite_reward(const ParsedTrace& trace, const DatasetRecord& truth,
                                 const RewardConfig& cfg, const ImageDims& dims) {
  cfg.check();

  RewardBreakdown out;
  out.vg_applicable = truth.bbox.has_value();
  out.la_applicable = true;
  out.mc_applicable =
      truth.question_type == QuestionType::InstrumentLocation || truth.bbox.has_value();

  if (out.vg_applicable) {
    // Malformed predictions score 0 instead of erroring: early-training
    // rollouts are frequently malformed and still need a finite reward.
    const std::optional<BoundingBox> predicted =
        (trace.bbox && trace.bbox->valid()) ? trace.bbox : std::nullopt;
    out.vg = grounding_reward(*truth.bbox, predicted, cfg.tau);
  }
  out.la = answer_match_reward(normalize_answer(truth.answer), trace.answer);
  if (out.mc_applicable) {
    out.mc = coherence_reward(trace.bbox, trace.q_inferred, dims);
  }

  out.composite = (out.vg_applicable ? cfg.w_vg * out.vg : 0.0) + cfg.w_la * out.la +
                  (out.mc_applicable ? cfg.w_mc * out.mc : 0.0);
  return out;
}

}  // namespace vqla
