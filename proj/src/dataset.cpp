#include "vqla/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "vqla/rng.hpp"

namespace vqla {

const char* record_kind_name(RecordKind k) {
  switch (k) {
    case RecordKind::CoT: return "CoT";
    case RecordKind::VisualQA: return "VisualQA";
    case RecordKind::GroundingQA: return "GroundingQA";
  }
  return "?";
}

const char* question_type_name(QuestionType q) {
  switch (q) {
    case QuestionType::Organ: return "Organ";
    case QuestionType::InstrumentLocation: return "InstrumentLocation";
    case QuestionType::InstrumentState: return "InstrumentState";
    case QuestionType::VisualSub: return "VisualSub";
    case QuestionType::GroundingSub: return "GroundingSub";
  }
  return "?";
}

const char* stage_label_name(StageLabel s) {
  switch (s) {
    case StageLabel::Planning: return "Planning";
    case StageLabel::Principle: return "Principle";
    case StageLabel::VisualAnalysis: return "VisualAnalysis";
    case StageLabel::Comparison: return "Comparison";
    case StageLabel::ContactAnalysis: return "ContactAnalysis";
    case StageLabel::Conclusion: return "Conclusion";
  }
  return "?";
}

std::optional<RecordKind> record_kind_from_name(const std::string& name) {
  if (name == "CoT") return RecordKind::CoT;
  if (name == "VisualQA") return RecordKind::VisualQA;
  if (name == "GroundingQA") return RecordKind::GroundingQA;
  return std::nullopt;
}

std::optional<QuestionType> question_type_from_name(const std::string& name) {
  if (name == "Organ") return QuestionType::Organ;
  if (name == "InstrumentLocation") return QuestionType::InstrumentLocation;
  if (name == "InstrumentState") return QuestionType::InstrumentState;
  if (name == "VisualSub") return QuestionType::VisualSub;
  if (name == "GroundingSub") return QuestionType::GroundingSub;
  return std::nullopt;
}

std::optional<StageLabel> stage_label_from_name(const std::string& name) {
  if (name == "Planning") return StageLabel::Planning;
  if (name == "Principle") return StageLabel::Principle;
  if (name == "VisualAnalysis") return StageLabel::VisualAnalysis;
  if (name == "Comparison") return StageLabel::Comparison;
  if (name == "ContactAnalysis") return StageLabel::ContactAnalysis;
  if (name == "Conclusion") return StageLabel::Conclusion;
  return std::nullopt;
}

int stage_rank(StageLabel s) { return static_cast<int>(s); }

namespace {

std::string normalized_copy(const std::string& s) {
  // Keep in sync with trace normalization; duplicated here so the dataset
  // layer does not depend on the trace parser.
  std::string out;
  bool in_space = false;
  for (char c : s) {
    const bool ws = (c == ' ' || c == '\t' || c == '\n' || c == '\r');
    if (ws) {
      in_space = !out.empty();
      continue;
    }
    if (in_space) out.push_back(' ');
    in_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  while (!out.empty()) {
    const char c = out.back();
    if (c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?') {
      out.pop_back();
      while (!out.empty() && out.back() == ' ') out.pop_back();
    } else {
      break;
    }
  }
  return out;
}

std::string get_string_field(const nlohmann::json& raw, const std::string& id, const char* key) {
  auto it = raw.find(key);
  if (it == raw.end() || !it->is_string()) {
    throw ValidationError("MissingField", id, key, "required string field absent or wrong type");
  }
  return it->get<std::string>();
}

BoundingBox parse_bbox(const nlohmann::json& arr, const std::string& id,
                       const std::optional<ImageDims>& dims) {
  if (!arr.is_array() || arr.size() != 4 ||
      !std::all_of(arr.begin(), arr.end(), [](const nlohmann::json& v) {
        return v.is_number_integer();
      })) {
    throw ValidationError("BoxOutOfFrame", id, "bbox",
                          "bbox must be [x1,y1,x2,y2] with integer pixel coordinates");
  }
  BoundingBox box{arr[0].get<int>(), arr[1].get<int>(), arr[2].get<int>(), arr[3].get<int>()};
  if (!box.valid()) {
    throw ValidationError("BoxOutOfFrame", id, "bbox",
                          "bbox requires 0 <= x1 < x2 and 0 <= y1 < y2");
  }
  if (dims && (box.x2 > dims->width || box.y2 > dims->height)) {
    throw ValidationError("BoxOutOfFrame", id, "bbox", "bbox exceeds the frame");
  }
  return box;
}

void check_chain(const CoTChain& chain, const std::string& id, QuestionType question_type) {
  if (chain.stages.empty()) {
    throw ValidationError("MissingField", id, "cot", "CoT record requires a non-empty chain");
  }
  int prev_rank = -1;
  for (const CoTStage& stage : chain.stages) {
    const int rank = stage_rank(stage.label);
    if (rank <= prev_rank) {
      throw ValidationError("BadStageOrder", id, "cot",
                            std::string("stage '") + stage_label_name(stage.label) +
                                "' out of canonical order");
    }
    prev_rank = rank;
    if (stage.label == StageLabel::ContactAnalysis &&
        question_type != QuestionType::InstrumentState) {
      throw ValidationError("BadStageOrder", id, "cot",
                            "ContactAnalysis only belongs to InstrumentState questions");
    }
  }
  if (chain.stages.back().label != StageLabel::Conclusion) {
    throw ValidationError("BadStageOrder", id, "cot", "chain must end with Conclusion");
  }
}

}  // namespace

void check_record(const DatasetRecord& r, std::optional<ImageDims> dims) {
  if (r.id.empty()) {
    throw ValidationError("MissingField", r.id, "id", "record id must be non-empty");
  }
  if (normalized_copy(r.answer).empty()) {
    throw ValidationError("EmptyAnswer", r.id, "answer", "answer is empty after normalization");
  }
  if (r.kind == RecordKind::GroundingQA && !r.bbox) {
    throw ValidationError("MissingField", r.id, "bbox", "GroundingQA record requires a bbox");
  }
  if (r.kind == RecordKind::VisualQA && r.bbox) {
    throw ValidationError("MissingField", r.id, "bbox",
                          "VisualQA record must not carry a bbox");
  }
  if (r.bbox) {
    if (!r.bbox->valid()) {
      throw ValidationError("BoxOutOfFrame", r.id, "bbox",
                            "bbox requires 0 <= x1 < x2 and 0 <= y1 < y2");
    }
    if (dims && (r.bbox->x2 > dims->width || r.bbox->y2 > dims->height)) {
      throw ValidationError("BoxOutOfFrame", r.id, "bbox", "bbox exceeds the frame");
    }
  }
  if (r.kind == RecordKind::CoT) {
    if (!r.cot) {
      throw ValidationError("MissingField", r.id, "cot", "CoT record requires a chain");
    }
    check_chain(*r.cot, r.id, r.question_type);
  } else if (r.cot) {
    throw ValidationError("MissingField", r.id, "cot",
                          "only CoT records may carry a chain");
  }
}

DatasetRecord validate_record(const nlohmann::json& raw, std::optional<ImageDims> dims) {
  if (!raw.is_object()) {
    throw ValidationError("MissingField", "", "", "record must be a JSON object");
  }
  DatasetRecord rec;
  rec.id = get_string_field(raw, "", "id");

  const std::string kind_name = get_string_field(raw, rec.id, "kind");
  const auto kind = record_kind_from_name(kind_name);
  if (!kind) {
    throw ValidationError("MissingField", rec.id, "kind", "unknown kind '" + kind_name + "'");
  }
  rec.kind = *kind;

  rec.image_id = get_string_field(raw, rec.id, "image_id");
  rec.question = get_string_field(raw, rec.id, "question");

  const std::string qt_name = get_string_field(raw, rec.id, "question_type");
  const auto qt = question_type_from_name(qt_name);
  if (!qt) {
    throw ValidationError("MissingField", rec.id, "question_type",
                          "unknown question_type '" + qt_name + "'");
  }
  rec.question_type = *qt;

  rec.answer = get_string_field(raw, rec.id, "answer");

  if (auto it = raw.find("bbox"); it != raw.end() && !it->is_null()) {
    rec.bbox = parse_bbox(*it, rec.id, dims);
  }

  if (auto it = raw.find("cot"); it != raw.end() && !it->is_null()) {
    if (!it->is_array()) {
      throw ValidationError("MissingField", rec.id, "cot", "cot must be an array of stages");
    }
    CoTChain chain;
    for (const nlohmann::json& entry : *it) {
      if (!entry.is_object() || !entry.contains("stage") || !entry.contains("text") ||
          !entry["stage"].is_string() || !entry["text"].is_string()) {
        throw ValidationError("MissingField", rec.id, "cot",
                              "each stage needs string fields 'stage' and 'text'");
      }
      const auto label = stage_label_from_name(entry["stage"].get<std::string>());
      if (!label) {
        throw ValidationError("BadStageOrder", rec.id, "cot",
                              "unknown stage '" + entry["stage"].get<std::string>() + "'");
      }
      chain.stages.push_back({*label, entry["text"].get<std::string>()});
    }
    rec.cot = std::move(chain);
  }

  check_record(rec, dims);
  return rec;
}

SplitResult split_dataset(const std::vector<DatasetRecord>& records, double sft_fraction,
                          std::uint64_t seed, SplitUnit unit) {
  if (records.empty()) {
    throw EmptyInput("split_dataset: no records");
  }
  if (!(sft_fraction > 0.0 && sft_fraction < 1.0)) {
    throw Error("BadFraction", "sft_fraction must lie strictly between 0 and 1");
  }

  SplitResult out;
  std::vector<std::size_t> cot_indices;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (records[i].kind == RecordKind::CoT) {
      cot_indices.push_back(i);
    } else {
      out.sft.push_back(records[i]);
    }
  }

  // Shuffle units (records or whole image groups), then cut at
  // round-half-up of the CoT count.
  SplitMix64 rng(derive_stream(seed, 0x5117));
  auto shuffle = [&rng](auto& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  };

  const std::size_t n_cot = cot_indices.size();
  const std::size_t sft_count =
      static_cast<std::size_t>(std::floor(sft_fraction * static_cast<double>(n_cot) + 0.5));

  std::vector<char> to_sft(records.size(), 0);
  if (unit == SplitUnit::Record) {
    shuffle(cot_indices);
    for (std::size_t k = 0; k < cot_indices.size(); ++k) {
      to_sft[cot_indices[k]] = (k < sft_count) ? 1 : 0;
    }
  } else {
    std::vector<std::string> images;
    for (std::size_t i : cot_indices) {
      const std::string& img = records[i].image_id;
      if (std::find(images.begin(), images.end(), img) == images.end()) {
        images.push_back(img);
      }
    }
    shuffle(images);
    // Walk shuffled groups until the SFT quota is filled; a group that would
    // overshoot still goes to SFT so the quota is met (groups are atomic).
    std::vector<std::string> sft_images;
    std::size_t assigned = 0;
    for (const std::string& img : images) {
      if (assigned >= sft_count) break;
      sft_images.push_back(img);
      assigned += static_cast<std::size_t>(
          std::count_if(cot_indices.begin(), cot_indices.end(), [&](std::size_t i) {
            return records[i].image_id == img;
          }));
    }
    for (std::size_t i : cot_indices) {
      to_sft[i] = std::find(sft_images.begin(), sft_images.end(), records[i].image_id) !=
                          sft_images.end()
                      ? 1
                      : 0;
    }
  }

  for (std::size_t i : cot_indices) {
    (to_sft[i] ? out.sft : out.rft).push_back(records[i]);
  }
  return out;
}

DatasetStats dataset_stats(const std::vector<DatasetRecord>& records) {
  DatasetStats stats;
  for (const DatasetRecord& r : records) {
    switch (r.kind) {
      case RecordKind::CoT: ++stats.n_cot; break;
      case RecordKind::VisualQA: ++stats.n_visual_qa; break;
      case RecordKind::GroundingQA: ++stats.n_grounding_qa; break;
    }
    ++stats.per_question_type[question_type_name(r.question_type)];
  }
  return stats;
}

nlohmann::ordered_json record_to_json(const DatasetRecord& r, TrainingStage stage) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["kind"] = record_kind_name(r.kind);
  j["image_id"] = r.image_id;
  j["question"] = r.question;
  j["question_type"] = question_type_name(r.question_type);
  j["answer"] = r.answer;
  if (r.bbox) {
    j["bbox"] = {r.bbox->x1, r.bbox->y1, r.bbox->x2, r.bbox->y2};
  }
  if (r.cot && stage == TrainingStage::SFT) {
    nlohmann::ordered_json stages = nlohmann::ordered_json::array();
    for (const CoTStage& s : r.cot->stages) {
      stages.push_back({{"stage", stage_label_name(s.label)}, {"text", s.text}});
    }
    j["cot"] = std::move(stages);
  }
  return j;
}

void export_training_file(const std::vector<DatasetRecord>& records, TrainingStage stage,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoFailure("cannot open '" + path + "' for writing");
  }
  for (const DatasetRecord& r : records) {
    out << record_to_json(r, stage).dump() << '\n';
  }
  if (!out) {
    throw IoFailure("write failed for '" + path + "'");
  }
}

std::vector<DatasetRecord> load_dataset(const std::string& path, std::optional<ImageDims> dims) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoFailure("cannot open '" + path + "' for reading");
  }
  std::vector<DatasetRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json raw = nlohmann::json::parse(line, nullptr, false);
    if (raw.is_discarded()) {
      throw ValidationError("MissingField", "", "line " + std::to_string(line_no),
                            "line is not valid JSON");
    }
    records.push_back(validate_record(raw, dims));
  }
  return records;
}

}  // namespace vqla
