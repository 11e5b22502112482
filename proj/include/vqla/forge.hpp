#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vqla/dataset.hpp"
#include "vqla/geometry.hpp"

namespace vqla {

// One frame annotation driving chain construction: the main question with
// its ground truth, plus the labelled boxes handed to the generator as
// context.
struct FrameAnnotation {
  std::string image_id;
  std::string question;
  QuestionType question_type = QuestionType::InstrumentLocation;
  std::string answer;
  std::optional<BoundingBox> bbox;  // ground-truth box of the main question
  std::vector<std::pair<std::string, BoundingBox>> boxes;  // label -> box
};

struct SubQuestion {
  std::string slot;   // unique key, "<stage>.<index>"
  StageLabel stage;
  std::string prompt;
};

struct PromptPack {
  std::string image_id;
  QuestionType question_type = QuestionType::InstrumentLocation;
  std::string system_prompt;
  std::vector<SubQuestion> sub_questions;  // ordered, covers every required stage
  std::vector<std::pair<std::string, BoundingBox>> context;  // boxes passed to the generator
};

inline constexpr const char* kPromptTemplateVersion = "prompts-1";

enum class Provenance { Generated, ManuallyEdited };

struct SubAnswerSet {
  std::map<std::string, std::string> answers;  // slot -> answer text
  Provenance provenance = Provenance::Generated;
};

struct UnsupportedQuestionType : Error {
  explicit UnsupportedQuestionType(const std::string& msg)
      : Error("UnsupportedQuestionType", msg) {}
};

struct MissingSlot : Error {
  explicit MissingSlot(const std::string& msg) : Error("MissingSlot", msg) {}
};

// Builds the sub-question pack for a frame: planning, principle, one visual
// sub-question per scene plus one per context box, comparison, contact
// analysis for instrument-state questions only, and the conclusion.
PromptPack build_prompt_pack(const FrameAnnotation& annotation, QuestionType question_type);

// Chat-completions endpoint in the OpenAI-compatible shape.
struct GenerationEndpointConfig {
  std::string base_url;            // scheme://host:port
  std::string model;
  double temperature = 0.7;
  std::string api_key;             // read from VQLA_API_KEY by the CLI
  int timeout_seconds = 30;
  int max_attempts = 3;            // bounded exponential backoff
  int backoff_initial_ms = 200;
  std::string audit_path;          // JSONL of (request, response, timestamp)
};

struct HttpError : Error {
  int status;
  explicit HttpError(int status_code, const std::string& msg)
      : Error("HttpError", msg), status(status_code) {}
};

struct MalformedResponse : Error {
  explicit MalformedResponse(const std::string& msg) : Error("MalformedResponse", msg) {}
};

struct Timeout : Error {
  explicit Timeout(const std::string& msg) : Error("Timeout", msg) {}
};

// POSTs each sub-question to `{base_url}/v1/chat/completions` and collects
// one answer per slot. Retries transient failures (HTTP errors, timeouts,
// malformed bodies) up to max_attempts with exponential backoff; every
// request/response pair lands in the audit log for the review step.
SubAnswerSet fetch_sub_answers(const PromptPack& pack, const GenerationEndpointConfig& endpoint);

// Joins the sub-answers into a canonical-order chain with templated
// connective text. Deterministic in its inputs; throws MissingSlot when a
// pack slot has no answer.
CoTChain assemble_cot(const SubAnswerSet& answers, const PromptPack& pack);

// Compiles the pack into flat QA records: visual-analysis and
// contact-analysis answers become VisualQA records, context boxes become
// GroundingQA records. Every output passes validate_record.
std::vector<DatasetRecord> compile_qa_pairs(const SubAnswerSet& answers, const PromptPack& pack,
                                            const std::vector<std::pair<std::string, BoundingBox>>& boxes);

// Whole-frame pipeline: pack -> fetch -> chain + QA records, with the chain
// wrapped in a validated CoT record.
std::vector<DatasetRecord> forge_records(const FrameAnnotation& annotation,
                                         const GenerationEndpointConfig& endpoint);

FrameAnnotation annotation_from_json(const nlohmann::json& raw);
std::vector<FrameAnnotation> load_annotations(const std::string& path);

}  // namespace vqla
