#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "vqla/grpo.hpp"
#include "vqla/policy.hpp"
#include "vqla/rewards.hpp"
#include "vqla/scene.hpp"

namespace vqla {

struct TrainConfig {
  EnvConfig env;
  GrpoConfig grpo;
  RewardConfig reward;

  void check() const;
};

struct IterationStats {
  int iter = 0;
  double mean_reward = 0.0;   // mean composite over the group
  double mean_vg = 0.0;
  double mean_la = 0.0;
  double mean_mc = 0.0;
  double mismatch_rate = 0.0;  // stated quadrant vs emitted box quadrant
  double kl_mean = 0.0;        // mean per-sample KL estimate against the reference
};

struct TrainingReport {
  std::vector<IterationStats> rows;
  PolicyParams params;      // final parameters
  double max_composite = 0.0;  // per-rollout composite ceiling (sum of weights)
};

// Full reinforcement loop on the synthetic environment: per iteration, draw a
// scene and question, sample a group of G rollouts from the policy, emit and
// parse their traces, score the rule rewards, and take one group-relative
// ascent step. The policy starts from (and is KL-anchored to) the stage-1
// reference parameters. Fully deterministic for a fixed config.
TrainingReport run_rft(const TrainConfig& cfg);

nlohmann::ordered_json report_row_json(const IterationStats& row);

// JSONL report: one header object (echoing the resolved configuration),
// then one row object per iteration.
void write_report_jsonl(const TrainingReport& report, const nlohmann::ordered_json& header,
                        const std::string& path);

void write_params_json(const PolicyParams& params, const nlohmann::ordered_json& header,
                       const std::string& path);
PolicyParams read_params_json(const std::string& path);

}  // namespace vqla
