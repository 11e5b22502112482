#include "vqla/forge.hpp"

#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace vqla {

namespace {

const char* stage_slot_prefix(StageLabel s) {
  switch (s) {
    case StageLabel::Planning: return "planning";
    case StageLabel::Principle: return "principle";
    case StageLabel::VisualAnalysis: return "visual_analysis";
    case StageLabel::Comparison: return "comparison";
    case StageLabel::ContactAnalysis: return "contact_analysis";
    case StageLabel::Conclusion: return "conclusion";
  }
  return "?";
}

std::string slot_key(StageLabel s, int index) {
  return std::string(stage_slot_prefix(s)) + "." + std::to_string(index);
}

std::string describe_boxes(const std::vector<std::pair<std::string, BoundingBox>>& boxes) {
  std::ostringstream out;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& [label, b] = boxes[i];
    if (i) out << "; ";
    out << label << " at [" << b.x1 << "," << b.y1 << "," << b.x2 << "," << b.y2 << "]";
  }
  return out.str();
}

std::mutex& audit_mutex() {
  static std::mutex m;
  return m;
}

void append_audit(const std::string& path, const nlohmann::ordered_json& entry) {
  if (path.empty()) return;
  std::lock_guard<std::mutex> lock(audit_mutex());
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw IoFailure("cannot append to audit log '" + path + "'");
  out << entry.dump() << '\n';
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

PromptPack build_prompt_pack(const FrameAnnotation& annotation, QuestionType question_type) {
  if (question_type != QuestionType::Organ &&
      question_type != QuestionType::InstrumentLocation &&
      question_type != QuestionType::InstrumentState) {
    throw UnsupportedQuestionType(std::string("no prompt templates for question type '") +
                                  question_type_name(question_type) + "'");
  }

  PromptPack pack;
  pack.image_id = annotation.image_id;
  pack.question_type = question_type;
  pack.context = annotation.boxes;
  pack.system_prompt =
      std::string("You are an assistant describing robotic-surgery frames. "
                  "Answer each sub-question in one or two plain sentences grounded in the "
                  "image and the provided boxes. Template version ") +
      kPromptTemplateVersion + ". Image: " + annotation.image_id +
      ". Boxes: " + describe_boxes(annotation.boxes) + ".";

  const std::string& q = annotation.question;
  pack.sub_questions.push_back(
      {slot_key(StageLabel::Planning, 0), StageLabel::Planning,
       "Break the question \"" + q + "\" into the steps needed to answer it."});
  pack.sub_questions.push_back(
      {slot_key(StageLabel::Principle, 0), StageLabel::Principle,
       "Which general visual characteristics identify the target of \"" + q + "\"?"});

  int visual_index = 0;
  pack.sub_questions.push_back({slot_key(StageLabel::VisualAnalysis, visual_index++),
                                StageLabel::VisualAnalysis,
                                "How many instruments are visible in the image?"});
  for (const auto& [label, box] : annotation.boxes) {
    pack.sub_questions.push_back(
        {slot_key(StageLabel::VisualAnalysis, visual_index++), StageLabel::VisualAnalysis,
         "Describe the appearance and surroundings of the " + label + "."});
  }

  pack.sub_questions.push_back(
      {slot_key(StageLabel::Comparison, 0), StageLabel::Comparison,
       "Which visible candidate matches those characteristics best, and why?"});

  if (question_type == QuestionType::InstrumentState) {
    pack.sub_questions.push_back(
        {slot_key(StageLabel::ContactAnalysis, 0), StageLabel::ContactAnalysis,
         "Describe the contact between the target instrument and the tissue: deformation, "
         "smoke, or burn marks."});
  }

  pack.sub_questions.push_back({slot_key(StageLabel::Conclusion, 0), StageLabel::Conclusion,
                                "State the final answer to \"" + q + "\" in one sentence."});
  return pack;
}

SubAnswerSet fetch_sub_answers(const PromptPack& pack,
                               const GenerationEndpointConfig& endpoint) {
  httplib::Client client(endpoint.base_url);
  client.set_connection_timeout(endpoint.timeout_seconds, 0);
  client.set_read_timeout(endpoint.timeout_seconds, 0);

  httplib::Headers headers;
  if (!endpoint.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + endpoint.api_key);
  }

  SubAnswerSet out;
  for (const SubQuestion& sub : pack.sub_questions) {
    nlohmann::ordered_json body;
    body["model"] = endpoint.model;
    body["messages"] = {{{"role", "system"}, {"content", pack.system_prompt}},
                        {{"role", "user"}, {"content", sub.prompt}}};
    body["temperature"] = endpoint.temperature;
    const std::string payload = body.dump();

    std::string answer;
    std::string last_error;
    bool ok = false;
    for (int attempt = 1; attempt <= endpoint.max_attempts && !ok; ++attempt) {
      if (attempt > 1) {
        std::this_thread::sleep_for(std::chrono::milliseconds(
            endpoint.backoff_initial_ms * (1 << (attempt - 2))));
      }

      auto result = client.Post("/v1/chat/completions", headers, payload, "application/json");

      nlohmann::ordered_json audit;
      audit["timestamp"] = iso_timestamp();
      audit["slot"] = sub.slot;
      audit["attempt"] = attempt;
      audit["request"] = {{"url", endpoint.base_url + "/v1/chat/completions"},
                          {"body", payload}};

      if (!result) {
        last_error = "transport failure: " + httplib::to_string(result.error());
        audit["response"] = {{"error", last_error}};
        append_audit(endpoint.audit_path, audit);
        continue;
      }
      audit["response"] = {{"status", result->status}, {"body", result->body}};
      append_audit(endpoint.audit_path, audit);

      if (result->status != 200) {
        last_error = "http status " + std::to_string(result->status);
        continue;
      }
      nlohmann::json parsed = nlohmann::json::parse(result->body, nullptr, false);
      if (parsed.is_discarded() || !parsed.contains("choices") || parsed["choices"].empty() ||
          !parsed["choices"][0].contains("message") ||
          !parsed["choices"][0]["message"].contains("content") ||
          !parsed["choices"][0]["message"]["content"].is_string()) {
        last_error = "malformed response body";
        continue;
      }
      answer = parsed["choices"][0]["message"]["content"].get<std::string>();
      ok = true;
    }

    if (!ok) {
      if (last_error.rfind("http status", 0) == 0) {
        const int status = std::stoi(last_error.substr(12));
        throw HttpError(status, "slot '" + sub.slot + "' failed after " +
                                    std::to_string(endpoint.max_attempts) +
                                    " attempts: " + last_error);
      }
      if (last_error.rfind("transport", 0) == 0) {
        throw Timeout("slot '" + sub.slot + "' failed after " +
                      std::to_string(endpoint.max_attempts) + " attempts: " + last_error);
      }
      throw MalformedResponse("slot '" + sub.slot + "' failed after " +
                              std::to_string(endpoint.max_attempts) +
                              " attempts: " + last_error);
    }
    out.answers[sub.slot] = answer;
  }
  out.provenance = Provenance::Generated;
  return out;
}

namespace {
const std::string& answer_for(const SubAnswerSet& answers, const std::string& slot) {
  const auto it = answers.answers.find(slot);
  if (it == answers.answers.end()) {
    throw MissingSlot("no answer for slot '" + slot + "'");
  }
  return it->second;
}
}  // namespace

CoTChain assemble_cot(const SubAnswerSet& answers, const PromptPack& pack) {
  // Gather per-stage answers in pack order, then emit stages canonically.
  std::map<StageLabel, std::vector<std::string>> by_stage;
  for (const SubQuestion& sub : pack.sub_questions) {
    by_stage[sub.stage].push_back(answer_for(answers, sub.slot));
  }

  static const StageLabel kOrder[] = {StageLabel::Planning,        StageLabel::Principle,
                                      StageLabel::VisualAnalysis,  StageLabel::Comparison,
                                      StageLabel::ContactAnalysis, StageLabel::Conclusion};
  CoTChain chain;
  for (StageLabel stage : kOrder) {
    const auto it = by_stage.find(stage);
    if (it == by_stage.end()) continue;
    std::string text;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      if (i) text += " ";
      text += it->second[i];
    }
    chain.stages.push_back({stage, std::move(text)});
  }
  return chain;
}

std::vector<DatasetRecord> compile_qa_pairs(
    const SubAnswerSet& answers, const PromptPack& pack,
    const std::vector<std::pair<std::string, BoundingBox>>& boxes) {
  std::vector<DatasetRecord> records;
  int visual_ordinal = 0;
  for (const SubQuestion& sub : pack.sub_questions) {
    if (sub.stage != StageLabel::VisualAnalysis && sub.stage != StageLabel::ContactAnalysis) {
      continue;
    }
    DatasetRecord rec;
    rec.id = pack.image_id + "#VisualQA#" + std::to_string(visual_ordinal++);
    rec.kind = RecordKind::VisualQA;
    rec.image_id = pack.image_id;
    rec.question = sub.prompt;
    rec.question_type = QuestionType::VisualSub;
    rec.answer = answer_for(answers, sub.slot);
    check_record(rec);
    records.push_back(std::move(rec));
  }

  int grounding_ordinal = 0;
  for (const auto& [label, box] : boxes) {
    DatasetRecord rec;
    rec.id = pack.image_id + "#GroundingQA#" + std::to_string(grounding_ordinal++);
    rec.kind = RecordKind::GroundingQA;
    rec.image_id = pack.image_id;
    rec.question = "Provide the bounding box of the " + label + ".";
    rec.question_type = QuestionType::GroundingSub;
    rec.answer = label;
    rec.bbox = box;
    check_record(rec);
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<DatasetRecord> forge_records(const FrameAnnotation& annotation,
                                         const GenerationEndpointConfig& endpoint) {
  const PromptPack pack = build_prompt_pack(annotation, annotation.question_type);
  const SubAnswerSet answers = fetch_sub_answers(pack, endpoint);

  DatasetRecord cot_record;
  cot_record.id = annotation.image_id + "#CoT#0";
  cot_record.kind = RecordKind::CoT;
  cot_record.image_id = annotation.image_id;
  cot_record.question = annotation.question;
  cot_record.question_type = annotation.question_type;
  cot_record.answer = annotation.answer;
  cot_record.bbox = annotation.bbox;
  cot_record.cot = assemble_cot(answers, pack);
  check_record(cot_record);

  std::vector<DatasetRecord> records;
  records.push_back(std::move(cot_record));
  for (DatasetRecord& rec : compile_qa_pairs(answers, pack, pack.context)) {
    records.push_back(std::move(rec));
  }
  return records;
}

FrameAnnotation annotation_from_json(const nlohmann::json& raw) {
  FrameAnnotation a;
  a.image_id = raw.at("image_id").get<std::string>();
  a.question = raw.at("question").get<std::string>();
  const auto qt = question_type_from_name(raw.at("question_type").get<std::string>());
  if (!qt) {
    throw ValidationError("MissingField", a.image_id, "question_type",
                          "unknown question_type in annotation");
  }
  a.question_type = *qt;
  a.answer = raw.at("answer").get<std::string>();
  if (raw.contains("bbox") && raw["bbox"].is_array() && raw["bbox"].size() == 4) {
    a.bbox = BoundingBox{raw["bbox"][0].get<int>(), raw["bbox"][1].get<int>(),
                         raw["bbox"][2].get<int>(), raw["bbox"][3].get<int>()};
  }
  if (raw.contains("boxes")) {
    for (const auto& entry : raw["boxes"]) {
      a.boxes.emplace_back(entry.at("label").get<std::string>(),
                           BoundingBox{entry.at("bbox")[0].get<int>(),
                                       entry.at("bbox")[1].get<int>(),
                                       entry.at("bbox")[2].get<int>(),
                                       entry.at("bbox")[3].get<int>()});
    }
  }
  return a;
}

std::vector<FrameAnnotation> load_annotations(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");
  std::vector<FrameAnnotation> annotations;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json raw = nlohmann::json::parse(line, nullptr, false);
    if (raw.is_discarded()) {
      throw ValidationError("MissingField", "", "annotations",
                            "annotation line is not valid JSON");
    }
    annotations.push_back(annotation_from_json(raw));
  }
  return annotations;
}

}  // namespace vqla
