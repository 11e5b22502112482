#include <doctest.h>

#include <cmath>
#include <set>

#include "test_support.hpp"
#include "vqla/emit.hpp"
#include "vqla/policy.hpp"
#include "vqla/rewards.hpp"
#include "vqla/softmax.hpp"
#include "vqla/trace.hpp"

using namespace vqla;

namespace {
EnvConfig default_env() { return EnvConfig{}; }
}

TEST_CASE("anchor geometry stays inside its quadrant") {
  const EnvConfig env = default_env();
  for (int a = 0; a < env.anchor_count(); ++a) {
    const BoundingBox box = anchor_box(env, a);
    CHECK(box.valid());
    CHECK(quadrant_of_center(box, env.dims) == anchor_quadrant(env, a));
    // whole box inside the quadrant, not just the center
    CHECK(quadrant_of(box.x1, box.y1, env.dims) == anchor_quadrant(env, a));
    CHECK(quadrant_of(box.x2 - 1, box.y2 - 1, env.dims) == anchor_quadrant(env, a));
  }
  CHECK_THROWS_AS(anchor_box(env, -1), OutOfSupport);
  CHECK_THROWS_AS(anchor_box(env, env.anchor_count()), OutOfSupport);
}

TEST_CASE("nearest_anchor recovers the anchor of an anchor box") {
  const EnvConfig env = default_env();
  for (int a = 0; a < env.anchor_count(); ++a) {
    CHECK(nearest_anchor(env, anchor_box(env, a)) == a);
  }
}

TEST_CASE("env config validation") {
  EnvConfig env;
  env.dims = {1281, 1024};  // not divisible by 2k
  CHECK_THROWS_AS(env.check(), Error);
  env = EnvConfig{};
  env.anchor_k = 0;
  CHECK_THROWS_AS(env.check(), Error);
}

TEST_CASE("sample_scene is deterministic per seed") {
  const EnvConfig env = default_env();
  SplitMix64 a(derive_stream(0, 0, 0));
  SplitMix64 b(derive_stream(0, 0, 0));
  const SceneSpec sa = sample_scene(env, a);
  const SceneSpec sb = sample_scene(env, b);
  REQUIRE(sa.instruments.size() == sb.instruments.size());
  for (std::size_t i = 0; i < sa.instruments.size(); ++i) {
    CHECK(sa.instruments[i].type == sb.instruments[i].type);
    CHECK(sa.instruments[i].bbox == sb.instruments[i].bbox);
    CHECK(sa.instruments[i].quadrant == sb.instruments[i].quadrant);
    CHECK(sa.instruments[i].state == sb.instruments[i].state);
  }
  CHECK(sa.organ == sb.organ);
  CHECK(sa.organ_bbox == sb.organ_bbox);
}

TEST_CASE("sampled scenes satisfy the generator invariants") {
  const EnvConfig env = default_env();
  SplitMix64 rng(1234);
  for (int trial = 0; trial < 10000; ++trial) {
    const SceneSpec s = sample_scene(env, rng);
    CHECK(s.instruments.size() >= 1);
    CHECK(s.instruments.size() <= 3);

    std::set<std::string> types;
    std::set<int> quadrants;
    for (const SceneInstrument& inst : s.instruments) {
      types.insert(inst.type);
      quadrants.insert(static_cast<int>(inst.quadrant));
      CHECK(inst.bbox.valid());
      CHECK(quadrant_of_center(inst.bbox, env.dims) == inst.quadrant);
      CHECK(quadrant_of(inst.bbox.x1, inst.bbox.y1, env.dims) == inst.quadrant);
      CHECK(quadrant_of(inst.bbox.x2 - 1, inst.bbox.y2 - 1, env.dims) == inst.quadrant);
    }
    CHECK(types.size() == s.instruments.size());      // unique types
    CHECK(quadrants.size() == s.instruments.size());  // distinct quadrants
    CHECK(quadrant_of_center(s.organ_bbox, env.dims) == s.organ_quadrant);
  }
}

TEST_CASE("first instrument lands in each quadrant about a quarter of the time") {
  const EnvConfig env = default_env();
  SplitMix64 rng(4242);
  int counts[4] = {0, 0, 0, 0};
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const SceneSpec s = sample_scene(env, rng);
    ++counts[static_cast<int>(s.instruments.front().quadrant)];
  }
  for (int q = 0; q < 4; ++q) {
    CHECK(counts[q] > n * (0.25 - 0.02));
    CHECK(counts[q] < n * (0.25 + 0.02));
  }
}

TEST_CASE("render_question produces scene-consistent ground truth") {
  const EnvConfig env = default_env();
  SplitMix64 rng(77);
  int seen_types = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const SceneSpec s = sample_scene(env, rng);
    const Question q = render_question(s, rng);
    switch (q.type) {
      case QuestionType::Organ:
        CHECK(q.answer == s.organ);
        CHECK(q.bbox == s.organ_bbox);
        seen_types |= 1;
        break;
      case QuestionType::InstrumentLocation: {
        REQUIRE(q.target_instrument >= 0);
        const auto& inst = s.instruments[static_cast<std::size_t>(q.target_instrument)];
        CHECK(q.answer == quadrant_term(inst.quadrant));
        CHECK(q.bbox == inst.bbox);
        CHECK(q.text.find(inst.type) != std::string::npos);
        seen_types |= 2;
        break;
      }
      case QuestionType::InstrumentState: {
        REQUIRE(q.target_instrument >= 0);
        const auto& inst = s.instruments[static_cast<std::size_t>(q.target_instrument)];
        CHECK(q.answer == inst.state);
        CHECK(q.bbox == inst.bbox);
        seen_types |= 4;
        break;
      }
      default:
        FAIL("unexpected question type");
    }
    // the truth record always validates
    CHECK_NOTHROW(question_truth_record(s, q, "img"));
  }
  CHECK(seen_types == 7);  // all three kinds appeared
}

TEST_CASE("softmax head: logsumexp of log-probs is zero") {
  const std::vector<double> logits = {0.3, -1.2, 2.0, 0.0};
  std::vector<double> logps;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    logps.push_back(categorical_logprob(logits, 0.7, i));
  }
  CHECK(log_sum_exp(logps) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("softmax head: two-class score at uniform logits") {
  const std::vector<double> logits = {0.0, 0.0};
  const auto score = categorical_score(logits, 1.0, 0);
  CHECK(score[0] == doctest::Approx(0.5));   // 1 - 0.5
  CHECK(score[1] == doctest::Approx(-0.5));  // 0 - 0.5
}

TEST_CASE("softmax head: uniform logits sample uniformly") {
  const std::vector<double> logits(4, 0.0);
  SplitMix64 rng(8);
  int counts[4] = {0, 0, 0, 0};
  const int n = 10000;
  for (int i = 0; i < n; ++i) ++counts[categorical_sample(logits, 0.7, rng)];
  // 3 sigma of a binomial(n, 1/4)
  const double sigma = std::sqrt(n * 0.25 * 0.75);
  for (int c = 0; c < 4; ++c) {
    CHECK(std::abs(counts[c] - n * 0.25) < 3 * sigma);
  }
}

TEST_CASE("temperature preserves the argmax") {
  const std::vector<double> logits = {0.2, 1.4, -0.7};
  for (double t : {0.1, 0.7, 1.0, 3.0}) {
    const auto p = softmax(logits, t);
    CHECK(std::max_element(p.begin(), p.end()) - p.begin() == 1);
  }
}

namespace {

struct Setup {
  EnvConfig env;
  SceneSpec scene;
  Question question;
  std::vector<double> features;
};

Setup make_setup(std::uint64_t seed) {
  Setup s;
  s.env = default_env();
  SplitMix64 rng(seed);
  s.scene = sample_scene(s.env, rng);
  s.question = render_question(s.scene, rng);
  s.features = encode_features(s.env, s.scene, s.question);
  return s;
}

}  // namespace

TEST_CASE("policy log-probabilities are normalized per head") {
  const Setup s = make_setup(21);
  const PolicyParams params = PolicyParams::sft_reference(s.env);

  // sum over the answer head of exp(logp) with the other heads fixed = the
  // probability of the fixed (stated, anchor) pair; checked via the joint.
  SplitMix64 rng(3);
  const RolloutAction base = policy_sample(params, s.features, 0.7, rng);
  double total = 0.0;
  for (int a = 0; a < params.n_answers; ++a) {
    for (int q = 0; q < 4; ++q) {
      RolloutAction act = base;
      act.answer = a;
      act.stated = static_cast<Quadrant>(q);
      // marginalizing the two small heads with the anchor fixed
      total += std::exp(policy_logprob(params, s.features, act, 0.7));
    }
  }
  // equals P(anchor = base.anchor), which must be in (0, 1]
  CHECK(total > 0.0);
  CHECK(total <= 1.0 + 1e-9);
}

TEST_CASE("policy gradient matches finite differences of the log-probability") {
  Setup s = make_setup(99);
  PolicyParams params = PolicyParams::sft_reference(s.env);
  SplitMix64 rng(17);
  const RolloutAction action = policy_sample(params, s.features, 0.7, rng);

  const LogprobGrad lg = policy_logprob_grad(params, s.features, action, 0.7);
  CHECK(lg.logp == doctest::Approx(policy_logprob(params, s.features, action, 0.7)));

  // spot-check 60 random coordinates (the full matrix is large)
  SplitMix64 pick(5);
  const double h = 1e-6;
  for (int k = 0; k < 60; ++k) {
    const std::size_t idx = pick.next_below(params.data.size());
    PolicyParams plus = params;
    PolicyParams minus = params;
    plus.data[idx] += h;
    minus.data[idx] -= h;
    const double fd = (policy_logprob(plus, s.features, action, 0.7) -
                       policy_logprob(minus, s.features, action, 0.7)) /
                      (2 * h);
    CHECK(lg.grad[idx] == doctest::Approx(fd).epsilon(1e-4));
  }
}

TEST_CASE("expected score over each head is zero") {
  const Setup s = make_setup(7);
  const PolicyParams params = PolicyParams::sft_reference(s.env);

  // answer head: sum_a p(a) * score(a) = 0 per coordinate
  const auto logits = head_logits(params, s.features, 0, params.n_answers);
  const auto p = softmax(logits, 0.7);
  std::vector<double> acc(static_cast<std::size_t>(params.n_answers), 0.0);
  for (int a = 0; a < params.n_answers; ++a) {
    const auto score = categorical_score(logits, 0.7, static_cast<std::size_t>(a));
    for (std::size_t c = 0; c < acc.size(); ++c) {
      acc[c] += p[static_cast<std::size_t>(a)] * score[c];
    }
  }
  for (double v : acc) CHECK(std::abs(v) < 1e-8);
}

TEST_CASE("policy sampling approaches the argmax as temperature vanishes") {
  const Setup s = make_setup(55);
  const PolicyParams params = PolicyParams::sft_reference(s.env);
  const auto logits = head_logits(params, s.features, 0, params.n_answers);
  const auto argmax = static_cast<int>(
      std::max_element(logits.begin(), logits.end()) - logits.begin());

  SplitMix64 rng(1);
  int hits = 0;
  for (int i = 0; i < 200; ++i) {
    if (static_cast<int>(categorical_sample(logits, 1e-4, rng)) == argmax) ++hits;
  }
  CHECK(hits == 200);
}

TEST_CASE("emit and parse round-trip recovers the action") {
  const EnvConfig env = default_env();
  SplitMix64 rng(64);
  for (int trial = 0; trial < 500; ++trial) {
    const SceneSpec scene = sample_scene(env, rng);
    RolloutAction action;
    action.answer = static_cast<int>(rng.next_below(vocab::answers().size()));
    action.stated = static_cast<Quadrant>(rng.next_below(4));
    action.anchor = static_cast<int>(rng.next_below(env.anchor_count()));

    const ParsedTrace t = parse_trace(emit_trace(env, action, scene));
    CHECK(t.answer == vocab::answers()[static_cast<std::size_t>(action.answer)]);
    REQUIRE(t.bbox.has_value());
    CHECK(*t.bbox == anchor_box(env, action.anchor));
    REQUIRE(t.q_inferred.has_value());
    CHECK(*t.q_inferred == action.stated);
    REQUIRE(t.stages.has_value());
    CHECK(t.stages->stages.back().label == StageLabel::Conclusion);
  }
}

TEST_CASE("hallucinated traces earn no coherence reward") {
  const EnvConfig env = default_env();
  SplitMix64 rng(12);
  const SceneSpec scene = sample_scene(env, rng);

  RolloutAction action;
  action.answer = 0;
  action.stated = Quadrant::RT;
  // pick an anchor in LB: stated and box disagree
  action.anchor = static_cast<int>(Quadrant::LB) * env.anchor_k * env.anchor_k;

  const ParsedTrace t = parse_trace(emit_trace(env, action, scene));
  REQUIRE(t.q_inferred.has_value());
  CHECK(*t.q_inferred == Quadrant::RT);
  CHECK(coherence_reward(t.bbox, t.q_inferred, env.dims) == 0.0);

  // coherent variant scores 1
  action.stated = Quadrant::LB;
  const ParsedTrace t2 = parse_trace(emit_trace(env, action, scene));
  CHECK(coherence_reward(t2.bbox, t2.q_inferred, env.dims) == 1.0);
}

TEST_CASE("scene boxes keep a usable best-anchor overlap") {
  // the sampler jitters off anchors; the best anchor must clear tau = 0.5
  const EnvConfig env = default_env();
  SplitMix64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const SceneSpec s = sample_scene(env, rng);
    for (const SceneInstrument& inst : s.instruments) {
      const int a = nearest_anchor(env, inst.bbox);
      CHECK(iou(inst.bbox, anchor_box(env, a)) >= 0.5);
    }
  }
}
