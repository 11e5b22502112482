#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vqla/errors.hpp"
#include "vqla/geometry.hpp"

namespace vqla {

enum class RecordKind { CoT, VisualQA, GroundingQA };
enum class QuestionType { Organ, InstrumentLocation, InstrumentState, VisualSub, GroundingSub };
enum class StageLabel { Planning, Principle, VisualAnalysis, Comparison, ContactAnalysis, Conclusion };

const char* record_kind_name(RecordKind k);
const char* question_type_name(QuestionType q);
const char* stage_label_name(StageLabel s);
std::optional<RecordKind> record_kind_from_name(const std::string& name);
std::optional<QuestionType> question_type_from_name(const std::string& name);
std::optional<StageLabel> stage_label_from_name(const std::string& name);

// Position of a stage in the canonical reasoning sequence
// Planning -> Principle -> VisualAnalysis -> Comparison -> ContactAnalysis -> Conclusion.
int stage_rank(StageLabel s);

struct CoTStage {
  StageLabel label;
  std::string text;

  bool operator==(const CoTStage&) const = default;
};

struct CoTChain {
  std::vector<CoTStage> stages;

  bool empty() const { return stages.empty(); }
  bool operator==(const CoTChain&) const = default;
};

struct DatasetRecord {
  std::string id;
  RecordKind kind = RecordKind::VisualQA;
  std::string image_id;
  std::string question;
  QuestionType question_type = QuestionType::VisualSub;
  std::string answer;  // canonical ground-truth answer, non-empty after normalization
  std::optional<BoundingBox> bbox;
  std::optional<CoTChain> cot;

  bool operator==(const DatasetRecord&) const = default;
};

struct DatasetStats {
  std::size_t n_cot = 0;
  std::size_t n_visual_qa = 0;
  std::size_t n_grounding_qa = 0;
  std::map<std::string, std::size_t> per_question_type;

  std::size_t total() const { return n_cot + n_visual_qa + n_grounding_qa; }
};

// Validation failure for one record. `code` is one of MissingField,
// BadStageOrder, EmptyAnswer, BoxOutOfFrame; `field` names the offending
// field and `record_id` the record (empty when the id itself is missing).
class ValidationError : public Error {
 public:
  ValidationError(std::string code, std::string record_id, std::string field, std::string message)
      : Error(code, message + " (record '" + record_id + "', field '" + field + "')"),
        record_id_(std::move(record_id)),
        field_(std::move(field)) {}

  const std::string& record_id() const { return record_id_; }
  const std::string& field() const { return field_; }

 private:
  std::string record_id_;
  std::string field_;
};

// Checks schema and invariants of one parsed JSON object and returns the
// typed record. When `dims` is given, boxes must also fit inside the frame.
DatasetRecord validate_record(const nlohmann::json& raw,
                              std::optional<ImageDims> dims = std::nullopt);

// Re-checks an already-typed record (used on records built in-process).
void check_record(const DatasetRecord& record, std::optional<ImageDims> dims = std::nullopt);

enum class SplitUnit { Record, Image };

struct SplitResult {
  std::vector<DatasetRecord> sft;
  std::vector<DatasetRecord> rft;
};

// Partitions records for the two training stages: every non-CoT record goes
// to SFT; CoT records are shuffled with a SplitMix64-seeded Fisher-Yates pass
// and round(sft_fraction * n_cot) of them (round half up) join SFT, the rest
// form the RFT set. With SplitUnit::Image the shuffle and cut operate on
// whole image_id groups of CoT records instead of single records.
SplitResult split_dataset(const std::vector<DatasetRecord>& records, double sft_fraction,
                          std::uint64_t seed, SplitUnit unit = SplitUnit::Record);

DatasetStats dataset_stats(const std::vector<DatasetRecord>& records);

enum class TrainingStage { SFT, RFT };

// Serializes one record with the stable wire field order
// (id, kind, image_id, question, question_type, answer, bbox, cot).
// RFT lines omit the cot stages: that stage trains against rewards.
nlohmann::ordered_json record_to_json(const DatasetRecord& record,
                                      TrainingStage stage = TrainingStage::SFT);

void export_training_file(const std::vector<DatasetRecord>& records, TrainingStage stage,
                          const std::string& path);

// Reads and validates a JSONL dataset file. Throws IoFailure on unreadable
// files and ValidationError on the first bad record (with its line's id).
std::vector<DatasetRecord> load_dataset(const std::string& path,
                                        std::optional<ImageDims> dims = std::nullopt);

}  // namespace vqla
