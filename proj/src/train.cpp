#include "vqla/train.hpp"

#include <fstream>

#include "vqla/emit.hpp"
#include "vqla/errors.hpp"
#include "vqla/trace.hpp"

namespace vqla {

namespace {
// Stream tags for per-iteration randomness. Rollout i uses tag kRolloutBase+i.
constexpr std::uint64_t kSceneTag = 0;
constexpr std::uint64_t kQuestionTag = 1;
constexpr std::uint64_t kRolloutBase = 16;
}  // namespace

void TrainConfig::check() const {
  env.check();
  grpo.check();
  reward.check();
  if (grpo.iterations < 1) throw Error("BadConfig", "iterations must be >= 1");
}

TrainingReport run_rft(const TrainConfig& cfg) {
  cfg.check();

  const PolicyParams reference = PolicyParams::sft_reference(cfg.env);
  PolicyParams params = reference;

  TrainingReport report;
  report.max_composite = cfg.reward.w_vg + cfg.reward.w_la + cfg.reward.w_mc;
  report.rows.reserve(static_cast<std::size_t>(cfg.grpo.iterations));

  const std::size_t group_size = static_cast<std::size_t>(cfg.grpo.group_size);

  for (int iter = 0; iter < cfg.grpo.iterations; ++iter) {
    SplitMix64 scene_rng(derive_stream(cfg.grpo.seed, static_cast<std::uint64_t>(iter), kSceneTag));
    SplitMix64 question_rng(
        derive_stream(cfg.grpo.seed, static_cast<std::uint64_t>(iter), kQuestionTag));

    const SceneSpec scene = sample_scene(cfg.env, scene_rng);
    const Question question = render_question(scene, question_rng);
    const std::vector<double> features = encode_features(cfg.env, scene, question);
    const DatasetRecord truth =
        question_truth_record(scene, question, "scene-" + std::to_string(iter));

    RolloutGroup group;
    group.question = question.text;
    std::vector<RolloutAction> actions;
    actions.reserve(group_size);

    IterationStats stats;
    stats.iter = iter;

    for (std::size_t i = 0; i < group_size; ++i) {
      SplitMix64 rollout_rng(derive_stream(cfg.grpo.seed, static_cast<std::uint64_t>(iter),
                                           kRolloutBase + i));
      const RolloutAction action =
          policy_sample(params, features, cfg.grpo.temperature, rollout_rng);
      const std::string text = emit_trace(cfg.env, action, scene);
      const ParsedTrace trace = parse_trace(text);
      const RewardBreakdown breakdown = composite_reward(trace, truth, cfg.reward, cfg.env.dims);

      actions.push_back(action);
      group.outputs.push_back(text);
      group.logp_theta.push_back(action.logp);
      group.logp_old.push_back(action.logp);  // one group per policy snapshot
      group.logp_ref.push_back(policy_logprob(reference, features, action, cfg.grpo.temperature));
      group.rewards.push_back(breakdown.composite);

      stats.mean_reward += breakdown.composite;
      stats.mean_vg += breakdown.vg;
      stats.mean_la += breakdown.la;
      stats.mean_mc += breakdown.mc;
      if (anchor_quadrant(cfg.env, action.anchor) != action.stated) {
        stats.mismatch_rate += 1.0;
      }
      stats.kl_mean += kl_estimate(group.logp_theta.back(), group.logp_ref.back());
    }

    const double n = static_cast<double>(group_size);
    stats.mean_reward /= n;
    stats.mean_vg /= n;
    stats.mean_la /= n;
    stats.mean_mc /= n;
    stats.mismatch_rate /= n;
    stats.kl_mean /= n;
    report.rows.push_back(stats);

    for (int epoch = 0; epoch < cfg.grpo.updates_per_group; ++epoch) {
      std::vector<std::vector<double>> grads;
      grads.reserve(group_size);
      for (std::size_t i = 0; i < group_size; ++i) {
        LogprobGrad lg =
            policy_logprob_grad(params, features, actions[i], cfg.grpo.temperature);
        group.logp_theta[i] = lg.logp;
        grads.push_back(std::move(lg.grad));
      }
      const std::vector<double> gradient = grpo_gradient(group, grads, cfg.grpo);
      params.data = update_step(params.data, gradient, cfg.grpo.learning_rate);
    }
  }

  report.params = std::move(params);
  return report;
}

nlohmann::ordered_json report_row_json(const IterationStats& row) {
  nlohmann::ordered_json j;
  j["iter"] = row.iter;
  j["mean_reward"] = row.mean_reward;
  j["mean_vg"] = row.mean_vg;
  j["mean_la"] = row.mean_la;
  j["mean_mc"] = row.mean_mc;
  j["mismatch_rate"] = row.mismatch_rate;
  j["kl_mean"] = row.kl_mean;
  return j;
}

void write_report_jsonl(const TrainingReport& report, const nlohmann::ordered_json& header,
                        const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  out << header.dump() << '\n';
  for (const IterationStats& row : report.rows) {
    out << report_row_json(row).dump() << '\n';
  }
  if (!out) throw IoFailure("write failed for '" + path + "'");
}

void write_params_json(const PolicyParams& params, const nlohmann::ordered_json& header,
                       const std::string& path) {
  nlohmann::ordered_json j;
  j["header"] = header;
  j["n_features"] = params.n_features;
  j["n_answers"] = params.n_answers;
  j["n_anchors"] = params.n_anchors;
  j["data"] = params.data;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoFailure("cannot open '" + path + "' for writing");
  out << j.dump() << '\n';
  if (!out) throw IoFailure("write failed for '" + path + "'");
}

PolicyParams read_params_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");
  nlohmann::json j;
  in >> j;
  PolicyParams p;
  p.n_features = j.at("n_features").get<int>();
  p.n_answers = j.at("n_answers").get<int>();
  p.n_anchors = j.at("n_anchors").get<int>();
  p.data = j.at("data").get<std::vector<double>>();
  if (p.data.size() !=
      static_cast<std::size_t>(p.n_rows()) * static_cast<std::size_t>(p.n_features)) {
    throw DimensionMismatch("parameter file has inconsistent shape");
  }
  return p;
}

}  // namespace vqla
