#include "vqla/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "vqla/config.hpp"
#include "vqla/dataset.hpp"
#include "vqla/forge.hpp"
#include "vqla/metrics.hpp"
#include "vqla/rewards.hpp"
#include "vqla/trace.hpp"
#include "vqla/train.hpp"

namespace vqla {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;
constexpr int kExitUsage = 64;

struct UsageError : Error {
  explicit UsageError(const std::string& msg) : Error("UsageError", msg) {}
};

struct FlagSpec {
  const char* flag;  // e.g. "--sft-fraction"
  const char* key;   // e.g. "dataset.sft_fraction"
};

// Applies global defaults shared by every command.
void apply_defaults(RunConfig& cfg) {
  cfg.set_default("seed", "0");
  cfg.set_default("dataset.sft_fraction", "0.8");
  cfg.set_default("dataset.split_unit", "record");
  cfg.set_default("reward.tau", "0.5");
  cfg.set_default("reward.w_vg", "1");
  cfg.set_default("reward.w_la", "1");
  cfg.set_default("reward.w_mc", "1");
  cfg.set_default("env.width", "1280");
  cfg.set_default("env.height", "1024");
  cfg.set_default("env.anchor_k", "4");
  cfg.set_default("grpo.beta", "0.04");
  cfg.set_default("grpo.epsilon", "0.2");
  cfg.set_default("grpo.objective_mode", "clipped");
  cfg.set_default("grpo.group_size", "4");
  cfg.set_default("grpo.temperature", "0.7");
  cfg.set_default("grpo.learning_rate", "1e-6");
  cfg.set_default("grpo.iterations", "1000");
  cfg.set_default("grpo.updates_per_group", "1");
  cfg.set_default("forge.temperature", "0.7");
  cfg.set_default("forge.max_inflight", "4");
  cfg.set_default("forge.timeout_seconds", "30");
  cfg.set_default("forge.max_attempts", "3");
  cfg.set_default("forge.backoff_ms", "200");
}

// Parses `--flag value` pairs. `--config <file>` and `--seed <n>` are
// accepted everywhere; command-specific flags come from `specs`.
RunConfig parse_flags(int argc, const char* const* argv, int first,
                      const std::vector<FlagSpec>& specs) {
  RunConfig cfg;
  apply_defaults(cfg);

  std::vector<std::pair<std::string, std::string>> pending;
  std::string config_path;
  for (int i = first; i < argc; ++i) {
    const std::string flag = argv[i];
    if (i + 1 >= argc) {
      throw UsageError("flag '" + flag + "' needs a value");
    }
    const std::string value = argv[++i];
    if (flag == "--config") {
      config_path = value;
      continue;
    }
    if (flag == "--seed") {
      pending.emplace_back("seed", value);
      continue;
    }
    bool known = false;
    for (const FlagSpec& spec : specs) {
      if (flag == spec.flag) {
        pending.emplace_back(spec.key, value);
        known = true;
        break;
      }
    }
    if (!known) {
      throw UsageError("unknown flag '" + flag + "'");
    }
  }

  if (!config_path.empty()) {
    cfg.load_file(config_path);
  }
  for (const auto& [key, value] : pending) {
    cfg.set_flag(key, value);
  }
  return cfg;
}

// Required keys that have no default must come from a flag or the config
// file; a missing one is a usage error, not a data error.
void require_keys(const RunConfig& cfg, std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    if (!cfg.has(key)) {
      throw UsageError(std::string("missing required setting '") + key +
                       "' (pass the matching flag or config entry)");
    }
  }
}

std::optional<ImageDims> frame_dims_if_set(const RunConfig& cfg) {
  if (cfg.source("env.width") == RunConfig::Source::Default &&
      cfg.source("env.height") == RunConfig::Source::Default) {
    return std::nullopt;
  }
  return ImageDims{cfg.get_int("env.width"), cfg.get_int("env.height")};
}

RewardConfig reward_config(const RunConfig& cfg) {
  RewardConfig rc;
  rc.tau = cfg.get_double("reward.tau");
  rc.w_vg = cfg.get_double("reward.w_vg");
  rc.w_la = cfg.get_double("reward.w_la");
  rc.w_mc = cfg.get_double("reward.w_mc");
  rc.check();
  return rc;
}

GrpoConfig grpo_config(const RunConfig& cfg) {
  GrpoConfig gc;
  gc.beta = cfg.get_double("grpo.beta");
  gc.epsilon = cfg.get_double("grpo.epsilon");
  const std::string mode = cfg.get_string("grpo.objective_mode");
  if (mode == "clipped") {
    gc.objective_mode = ObjectiveMode::Clipped;
  } else if (mode == "as_written") {
    gc.objective_mode = ObjectiveMode::AsWritten;
  } else {
    throw Error("BadConfig", "grpo.objective_mode must be 'clipped' or 'as_written'");
  }
  gc.group_size = cfg.get_int("grpo.group_size");
  gc.temperature = cfg.get_double("grpo.temperature");
  gc.learning_rate = cfg.get_double("grpo.learning_rate");
  gc.iterations = cfg.get_int("grpo.iterations");
  gc.seed = cfg.get_u64("seed");
  gc.updates_per_group = cfg.get_int("grpo.updates_per_group");
  gc.check();
  return gc;
}

EnvConfig env_config(const RunConfig& cfg) {
  EnvConfig ec;
  ec.dims = ImageDims{cfg.get_int("env.width"), cfg.get_int("env.height")};
  ec.anchor_k = cfg.get_int("env.anchor_k");
  ec.check();
  return ec;
}

nlohmann::ordered_json artifact_header(const RunConfig& cfg, const std::string& command) {
  nlohmann::ordered_json header;
  header["tool"] = "vqla";
  header["command"] = command;
  header["config"] = cfg.echo();
  return header;
}

// ---------------------------------------------------------------- commands

int cmd_validate(const RunConfig& cfg) {
  require_keys(cfg, {"validate.input"});
  const auto records = load_dataset(cfg.get_string("validate.input"), frame_dims_if_set(cfg));
  nlohmann::ordered_json out;
  out["valid_records"] = records.size();
  std::cout << out.dump() << "\n";
  return kExitOk;
}

int cmd_stats(const RunConfig& cfg) {
  require_keys(cfg, {"stats.input"});
  const auto records = load_dataset(cfg.get_string("stats.input"), frame_dims_if_set(cfg));
  const DatasetStats stats = dataset_stats(records);
  nlohmann::ordered_json out;
  out["header"] = artifact_header(cfg, "stats");
  out["n_cot"] = stats.n_cot;
  out["n_visual_qa"] = stats.n_visual_qa;
  out["n_grounding_qa"] = stats.n_grounding_qa;
  out["per_question_type"] = stats.per_question_type;
  std::cout << out.dump() << "\n";
  return kExitOk;
}

int cmd_split(const RunConfig& cfg) {
  require_keys(cfg, {"split.input", "split.out_sft", "split.out_rft"});
  const auto records = load_dataset(cfg.get_string("split.input"), frame_dims_if_set(cfg));
  const std::string unit_name = cfg.get_string("dataset.split_unit");
  SplitUnit unit;
  if (unit_name == "record") {
    unit = SplitUnit::Record;
  } else if (unit_name == "image") {
    unit = SplitUnit::Image;
  } else {
    throw Error("BadConfig", "dataset.split_unit must be 'record' or 'image'");
  }

  const SplitResult split = split_dataset(records, cfg.get_double("dataset.sft_fraction"),
                                          cfg.get_u64("seed"), unit);
  export_training_file(split.sft, TrainingStage::SFT, cfg.get_string("split.out_sft"));
  export_training_file(split.rft, TrainingStage::RFT, cfg.get_string("split.out_rft"));

  // Export files carry bare records (their byte layout is the contract), so
  // the resolved-config echo that makes them reproducible goes to stdout.
  nlohmann::ordered_json out;
  out["header"] = artifact_header(cfg, "split");
  out["sft_records"] = split.sft.size();
  out["rft_records"] = split.rft.size();
  std::cout << out.dump() << "\n";
  return kExitOk;
}

int cmd_score(const RunConfig& cfg) {
  require_keys(cfg, {"score.pred", "score.gt", "score.out"});
  const ImageDims dims{cfg.get_int("env.width"), cfg.get_int("env.height")};
  const RewardConfig reward = reward_config(cfg);
  const auto truth_records = load_dataset(cfg.get_string("score.gt"));

  std::map<std::string, const DatasetRecord*> truth_by_id;
  for (const DatasetRecord& r : truth_records) truth_by_id[r.id] = &r;

  std::ifstream in(cfg.get_string("score.pred"), std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + cfg.get_string("score.pred") + "' for reading");

  std::ofstream out(cfg.get_string("score.out"), std::ios::binary);
  if (!out) throw IoFailure("cannot open '" + cfg.get_string("score.out") + "' for writing");
  out << artifact_header(cfg, "score").dump() << "\n";

  double sum_vg = 0, sum_la = 0, sum_mc = 0, sum_composite = 0;
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("id") || !j.contains("trace_text")) {
      throw ValidationError("MissingField", "", "predictions",
                            "prediction lines need 'id' and 'trace_text'");
    }
    const std::string id = j["id"].get<std::string>();
    const auto it = truth_by_id.find(id);
    if (it == truth_by_id.end()) {
      throw ValidationError("MissingField", id, "id", "prediction id missing from ground truth");
    }
    const ParsedTrace trace = parse_trace(j["trace_text"].get<std::string>());
    const RewardBreakdown b = composite_reward(trace, *it->second, reward, dims);

    nlohmann::ordered_json row;
    row["id"] = id;
    row["r_vg"] = b.vg;
    row["r_la"] = b.la;
    row["r_mc"] = b.mc;
    row["vg_applicable"] = b.vg_applicable;
    row["la_applicable"] = b.la_applicable;
    row["mc_applicable"] = b.mc_applicable;
    row["composite"] = b.composite;
    out << row.dump() << "\n";

    sum_vg += b.vg;
    sum_la += b.la;
    sum_mc += b.mc;
    sum_composite += b.composite;
    ++n;
  }
  if (n == 0) throw EmptyInput("no predictions to score");

  nlohmann::ordered_json agg;
  agg["aggregate"] = true;
  agg["n"] = n;
  agg["mean_vg"] = sum_vg / static_cast<double>(n);
  agg["mean_la"] = sum_la / static_cast<double>(n);
  agg["mean_mc"] = sum_mc / static_cast<double>(n);
  agg["mean_composite"] = sum_composite / static_cast<double>(n);
  out << agg.dump() << "\n";
  if (!out) throw IoFailure("write failed");
  return kExitOk;
}

int cmd_train_toy(const RunConfig& cfg) {
  require_keys(cfg, {"train.out_report"});
  TrainConfig tc;
  tc.env = env_config(cfg);
  tc.grpo = grpo_config(cfg);
  tc.reward = reward_config(cfg);

  const TrainingReport report = run_rft(tc);
  const nlohmann::ordered_json header = artifact_header(cfg, "train-toy");
  write_report_jsonl(report, header, cfg.get_string("train.out_report"));
  if (cfg.has("train.out_params")) {
    write_params_json(report.params, header, cfg.get_string("train.out_params"));
  }

  nlohmann::ordered_json out;
  out["iterations"] = report.rows.size();
  out["final_mean_reward"] = report.rows.empty() ? 0.0 : report.rows.back().mean_reward;
  std::cout << out.dump() << "\n";
  return kExitOk;
}

int cmd_eval(const RunConfig& cfg) {
  require_keys(cfg, {"eval.pred", "eval.gt"});
  const auto predictions = load_predictions(cfg.get_string("eval.pred"));
  const auto truth = load_dataset(cfg.get_string("eval.gt"));
  const EvalReport report = evaluate(predictions, truth);

  nlohmann::ordered_json out;
  out["header"] = artifact_header(cfg, "eval");
  out.update(report_to_json(report));

  if (cfg.has("eval.out")) {
    std::ofstream file(cfg.get_string("eval.out"), std::ios::binary);
    if (!file) throw IoFailure("cannot open '" + cfg.get_string("eval.out") + "' for writing");
    file << out.dump(2) << "\n";
  }
  std::cout << out.dump() << "\n";
  return kExitOk;
}

int cmd_forge(const RunConfig& cfg) {
  require_keys(cfg,
               {"forge.annotations", "forge.endpoint", "forge.model", "forge.out", "forge.audit"});
  const auto annotations = load_annotations(cfg.get_string("forge.annotations"));
  if (annotations.empty()) throw EmptyInput("no annotations to forge");

  GenerationEndpointConfig endpoint;
  endpoint.base_url = cfg.get_string("forge.endpoint");
  endpoint.model = cfg.get_string("forge.model");
  endpoint.temperature = cfg.get_double("forge.temperature");
  endpoint.timeout_seconds = cfg.get_int("forge.timeout_seconds");
  endpoint.max_attempts = cfg.get_int("forge.max_attempts");
  endpoint.backoff_initial_ms = cfg.get_int("forge.backoff_ms");
  endpoint.audit_path = cfg.get_string("forge.audit");
  if (const char* key = std::getenv("VQLA_API_KEY")) {
    endpoint.api_key = key;
  }

  const int max_inflight =
      std::max(1, std::min(cfg.get_int("forge.max_inflight"),
                           static_cast<int>(annotations.size())));

  // Workers pull annotation indices; results keep annotation order so the
  // output file does not depend on scheduling.
  std::vector<std::vector<DatasetRecord>> results(annotations.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= annotations.size()) return;
      try {
        results[i] = forge_records(annotations[i], endpoint);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(max_inflight));
  for (int t = 0; t < max_inflight; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  std::ofstream out(cfg.get_string("forge.out"), std::ios::binary);
  if (!out) throw IoFailure("cannot open '" + cfg.get_string("forge.out") + "' for writing");
  std::size_t total = 0;
  for (const auto& records : results) {
    for (const DatasetRecord& rec : records) {
      out << record_to_json(rec).dump() << "\n";
      ++total;
    }
  }
  if (!out) throw IoFailure("write failed");

  nlohmann::ordered_json summary;
  summary["header"] = artifact_header(cfg, "forge");
  summary["annotations"] = annotations.size();
  summary["records"] = total;
  std::cout << summary.dump() << "\n";
  return kExitOk;
}

int run_command(const std::string& command, int argc, const char* const* argv) {
  if (command == "validate") {
    static const std::vector<FlagSpec> specs = {
        {"--input", "validate.input"}, {"--width", "env.width"}, {"--height", "env.height"}};
    return cmd_validate(parse_flags(argc, argv, 2, specs));
  }
  if (command == "stats") {
    static const std::vector<FlagSpec> specs = {
        {"--input", "stats.input"}, {"--width", "env.width"}, {"--height", "env.height"}};
    return cmd_stats(parse_flags(argc, argv, 2, specs));
  }
  if (command == "split") {
    static const std::vector<FlagSpec> specs = {{"--input", "split.input"},
                                                {"--sft-fraction", "dataset.sft_fraction"},
                                                {"--split-unit", "dataset.split_unit"},
                                                {"--out-sft", "split.out_sft"},
                                                {"--out-rft", "split.out_rft"}};
    return cmd_split(parse_flags(argc, argv, 2, specs));
  }
  if (command == "score") {
    static const std::vector<FlagSpec> specs = {
        {"--pred", "score.pred"},   {"--gt", "score.gt"},       {"--out", "score.out"},
        {"--tau", "reward.tau"},    {"--w-vg", "reward.w_vg"},  {"--w-la", "reward.w_la"},
        {"--w-mc", "reward.w_mc"},  {"--width", "env.width"},   {"--height", "env.height"}};
    return cmd_score(parse_flags(argc, argv, 2, specs));
  }
  if (command == "train-toy") {
    static const std::vector<FlagSpec> specs = {
        {"--out-report", "train.out_report"},
        {"--out-params", "train.out_params"},
        {"--iterations", "grpo.iterations"},
        {"--group-size", "grpo.group_size"},
        {"--temperature", "grpo.temperature"},
        {"--learning-rate", "grpo.learning_rate"},
        {"--beta", "grpo.beta"},
        {"--epsilon", "grpo.epsilon"},
        {"--objective-mode", "grpo.objective_mode"},
        {"--updates-per-group", "grpo.updates_per_group"},
        {"--tau", "reward.tau"},
        {"--w-vg", "reward.w_vg"},
        {"--w-la", "reward.w_la"},
        {"--w-mc", "reward.w_mc"},
        {"--width", "env.width"},
        {"--height", "env.height"},
        {"--anchor-k", "env.anchor_k"}};
    return cmd_train_toy(parse_flags(argc, argv, 2, specs));
  }
  if (command == "eval") {
    static const std::vector<FlagSpec> specs = {
        {"--pred", "eval.pred"}, {"--gt", "eval.gt"}, {"--out", "eval.out"}};
    return cmd_eval(parse_flags(argc, argv, 2, specs));
  }
  if (command == "forge") {
    static const std::vector<FlagSpec> specs = {{"--annotations", "forge.annotations"},
                                                {"--endpoint", "forge.endpoint"},
                                                {"--model", "forge.model"},
                                                {"--out", "forge.out"},
                                                {"--audit", "forge.audit"},
                                                {"--max-inflight", "forge.max_inflight"},
                                                {"--max-attempts", "forge.max_attempts"},
                                                {"--backoff-ms", "forge.backoff_ms"},
                                                {"--timeout", "forge.timeout_seconds"}};
    return cmd_forge(parse_flags(argc, argv, 2, specs));
  }
  throw UsageError("unknown command '" + command + "'");
}

void print_error(const std::string& kind, const std::string& message,
                 const std::string& record_id = "", const std::string& field = "") {
  nlohmann::ordered_json err;
  err["error"] = {{"kind", kind}, {"message", message}};
  if (!record_id.empty()) err["error"]["record_id"] = record_id;
  if (!field.empty()) err["error"]["field"] = field;
  std::cerr << err.dump() << "\n";
}

}  // namespace

int dispatch(int argc, const char* const* argv) {
  if (argc < 2) {
    print_error("UsageError",
                "usage: vqla <validate|stats|split|forge|score|train-toy|eval> [flags]");
    return kExitUsage;
  }

  try {
    return run_command(argv[1], argc, argv);
  } catch (const UsageError& e) {
    print_error(e.kind(), e.what());
    return kExitUsage;
  } catch (const ValidationError& e) {
    print_error(e.kind(), e.what(), e.record_id(), e.field());
    return kExitValidation;
  } catch (const IdMismatch& e) {
    print_error(e.kind(), e.what());
    return kExitValidation;
  } catch (const IoFailure& e) {
    print_error(e.kind(), e.what());
    return kExitIo;
  } catch (const HttpError& e) {
    print_error(e.kind(), e.what());
    return kExitIo;
  } catch (const Timeout& e) {
    print_error(e.kind(), e.what());
    return kExitIo;
  } catch (const MalformedResponse& e) {
    print_error(e.kind(), e.what());
    return kExitIo;
  } catch (const EmptyInput& e) {
    print_error(e.kind(), e.what());
    return kExitValidation;
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return kExitIo;
  }
}

}  // namespace vqla
