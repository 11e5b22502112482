#include "vqla/policy.hpp"

#include <algorithm>

#include "vqla/errors.hpp"
#include "vqla/softmax.hpp"

namespace vqla {

namespace {

struct FeatureLayout {
  std::size_t qtype = 0;       // 3 slots: Organ, InstrumentLocation, InstrumentState
  std::size_t instrument = 3;  // 8
  std::size_t quadrant = 0;    // 4
  std::size_t anchor = 0;      // anchor_count
  std::size_t state = 0;       // 10
  std::size_t organ = 0;       // 6
  std::size_t bias = 0;        // 1
  std::size_t total = 0;

  explicit FeatureLayout(const EnvConfig& env) {
    qtype = 0;
    instrument = qtype + 3;
    quadrant = instrument + vocab::instruments().size();
    anchor = quadrant + 4;
    state = anchor + static_cast<std::size_t>(env.anchor_count());
    organ = state + vocab::states().size();
    bias = organ + vocab::organs().size();
    total = bias + 1;
  }
};

int qtype_slot(QuestionType t) {
  switch (t) {
    case QuestionType::Organ: return 0;
    case QuestionType::InstrumentLocation: return 1;
    case QuestionType::InstrumentState: return 2;
    default: break;
  }
  throw OutOfSupport(std::string("question type '") + question_type_name(t) +
                     "' has no policy features");
}

std::size_t index_of(const std::vector<std::string>& values, const std::string& v) {
  const auto it = std::find(values.begin(), values.end(), v);
  if (it == values.end()) {
    throw OutOfSupport("'" + v + "' missing from vocabulary");
  }
  return static_cast<std::size_t>(it - values.begin());
}

}  // namespace

std::size_t feature_dim(const EnvConfig& env) { return FeatureLayout(env).total; }

std::vector<double> encode_features(const EnvConfig& env, const SceneSpec& scene,
                                    const Question& question) {
  const FeatureLayout layout(env);
  std::vector<double> x(layout.total, 0.0);

  x[layout.qtype + static_cast<std::size_t>(qtype_slot(question.type))] = 1.0;
  if (question.target_instrument >= 0) {
    const SceneInstrument& inst =
        scene.instruments[static_cast<std::size_t>(question.target_instrument)];
    x[layout.instrument + index_of(vocab::instruments(), inst.type)] = 1.0;
    x[layout.state + index_of(vocab::states(), inst.state)] = 1.0;
  }
  x[layout.quadrant + static_cast<std::size_t>(quadrant_of_center(question.bbox, scene.dims))] =
      1.0;
  x[layout.anchor + static_cast<std::size_t>(nearest_anchor(env, question.bbox))] = 1.0;
  x[layout.organ + index_of(vocab::organs(), scene.organ)] = 1.0;
  x[layout.bias] = 1.0;
  return x;
}

PolicyParams PolicyParams::zeros(const EnvConfig& env) {
  PolicyParams p;
  p.n_features = static_cast<int>(feature_dim(env));
  p.n_answers = static_cast<int>(vocab::answers().size());
  p.n_anchors = env.anchor_count();
  p.data.assign(static_cast<std::size_t>(p.n_rows()) * static_cast<std::size_t>(p.n_features),
                0.0);
  return p;
}

PolicyParams PolicyParams::sft_reference(const EnvConfig& env) {
  constexpr double kGroupBonus = 2.0;   // question kind -> its answer-class family
  constexpr double kDirectBonus = 2.0;  // attribute feature -> exact answer class
  constexpr double kAnchorBonus = 3.5;  // target cell feature -> same anchor

  PolicyParams p = zeros(env);
  const FeatureLayout layout(env);
  const int answer_head = 0;
  const int anchor_head = p.n_answers + 4;

  const std::size_t n_states = vocab::states().size();
  const std::size_t n_organs = vocab::organs().size();

  // Answer head. Class order: 4 quadrant terms, states, organs.
  for (int q = 0; q < 4; ++q) {
    p.row(answer_head + q)[layout.qtype + 1] += kGroupBonus;
    p.row(answer_head + q)[layout.quadrant + static_cast<std::size_t>(q)] += kDirectBonus;
  }
  for (std::size_t s = 0; s < n_states; ++s) {
    const int cls = 4 + static_cast<int>(s);
    p.row(answer_head + cls)[layout.qtype + 2] += kGroupBonus;
    p.row(answer_head + cls)[layout.state + s] += kDirectBonus;
  }
  for (std::size_t o = 0; o < n_organs; ++o) {
    const int cls = 4 + static_cast<int>(n_states) + static_cast<int>(o);
    p.row(answer_head + cls)[layout.qtype + 0] += kGroupBonus;
    p.row(answer_head + cls)[layout.organ + o] += kDirectBonus;
  }

  // Anchor head: identity between the target-cell feature and the anchor class.
  for (int a = 0; a < p.n_anchors; ++a) {
    p.row(anchor_head + a)[layout.anchor + static_cast<std::size_t>(a)] += kAnchorBonus;
  }

  // Stated-quadrant head stays zero: uniform spatial wording.
  return p;
}

std::vector<double> head_logits(const PolicyParams& params, std::span<const double> features,
                                int head_offset, int head_size) {
  if (features.size() != static_cast<std::size_t>(params.n_features)) {
    throw DimensionMismatch("feature vector size does not match the policy");
  }
  std::vector<double> logits(static_cast<std::size_t>(head_size), 0.0);
  for (int c = 0; c < head_size; ++c) {
    const auto w = params.row(head_offset + c);
    double acc = 0.0;
    for (std::size_t f = 0; f < features.size(); ++f) {
      if (features[f] != 0.0) acc += w[f] * features[f];
    }
    logits[static_cast<std::size_t>(c)] = acc;
  }
  return logits;
}

RolloutAction policy_sample(const PolicyParams& params, std::span<const double> features,
                            double temperature, SplitMix64& rng) {
  const auto answer_logits = head_logits(params, features, 0, params.n_answers);
  const auto stated_logits = head_logits(params, features, params.n_answers, 4);
  const auto anchor_logits =
      head_logits(params, features, params.n_answers + 4, params.n_anchors);

  RolloutAction action;
  action.answer = static_cast<int>(categorical_sample(answer_logits, temperature, rng));
  action.stated =
      static_cast<Quadrant>(categorical_sample(stated_logits, temperature, rng));
  action.anchor = static_cast<int>(categorical_sample(anchor_logits, temperature, rng));
  action.logp = categorical_logprob(answer_logits, temperature,
                                    static_cast<std::size_t>(action.answer)) +
                categorical_logprob(stated_logits, temperature,
                                    static_cast<std::size_t>(action.stated)) +
                categorical_logprob(anchor_logits, temperature,
                                    static_cast<std::size_t>(action.anchor));
  return action;
}

double policy_logprob(const PolicyParams& params, std::span<const double> features,
                      const RolloutAction& action, double temperature) {
  const auto answer_logits = head_logits(params, features, 0, params.n_answers);
  const auto stated_logits = head_logits(params, features, params.n_answers, 4);
  const auto anchor_logits =
      head_logits(params, features, params.n_answers + 4, params.n_anchors);
  return categorical_logprob(answer_logits, temperature,
                             static_cast<std::size_t>(action.answer)) +
         categorical_logprob(stated_logits, temperature,
                             static_cast<std::size_t>(action.stated)) +
         categorical_logprob(anchor_logits, temperature,
                             static_cast<std::size_t>(action.anchor));
}

LogprobGrad policy_logprob_grad(const PolicyParams& params, std::span<const double> features,
                                const RolloutAction& action, double temperature) {
  LogprobGrad out;
  out.grad.assign(params.data.size(), 0.0);

  struct Head {
    int offset;
    int size;
    std::size_t chosen;
  };
  const Head heads[] = {
      {0, params.n_answers, static_cast<std::size_t>(action.answer)},
      {params.n_answers, 4, static_cast<std::size_t>(action.stated)},
      {params.n_answers + 4, params.n_anchors, static_cast<std::size_t>(action.anchor)},
  };

  for (const Head& head : heads) {
    const auto logits = head_logits(params, features, head.offset, head.size);
    out.logp += categorical_logprob(logits, temperature, head.chosen);
    const auto score = categorical_score(logits, temperature, head.chosen);
    for (int c = 0; c < head.size; ++c) {
      const std::size_t base =
          static_cast<std::size_t>(head.offset + c) * static_cast<std::size_t>(params.n_features);
      const double s = score[static_cast<std::size_t>(c)];
      if (s == 0.0) continue;
      for (std::size_t f = 0; f < features.size(); ++f) {
        if (features[f] != 0.0) out.grad[base + f] = s * features[f];
      }
    }
  }
  return out;
}

}  // namespace vqla
