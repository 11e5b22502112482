#include "vqla/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "vqla/trace.hpp"

namespace vqla {

double accuracy(const std::vector<AnswerPair>& pairs) {
  if (pairs.empty()) throw EmptyInput("accuracy: no answer pairs");
  std::size_t correct = 0;
  for (const AnswerPair& p : pairs) {
    if (p.predicted == p.truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

std::map<std::string, ClassScore> per_class_scores(const std::vector<AnswerPair>& pairs) {
  std::map<std::string, ClassScore> scores;
  for (const AnswerPair& p : pairs) {
    scores[p.truth].truth_count += 1;
  }
  for (const AnswerPair& p : pairs) {
    auto it = scores.find(p.predicted);
    if (it != scores.end()) {
      it->second.predicted_count += 1;
      if (p.predicted == p.truth) it->second.correct += 1;
    }
  }
  for (auto& [cls, s] : scores) {
    s.precision = s.predicted_count > 0
                      ? static_cast<double>(s.correct) / static_cast<double>(s.predicted_count)
                      : 0.0;
    s.recall = s.truth_count > 0
                   ? static_cast<double>(s.correct) / static_cast<double>(s.truth_count)
                   : 0.0;
    const double pr = s.precision + s.recall;
    s.f1 = pr > 0.0 ? 2.0 * s.precision * s.recall / pr : 0.0;
  }
  return scores;
}

double macro_fscore(const std::vector<AnswerPair>& pairs) {
  if (pairs.empty()) throw EmptyInput("macro_fscore: no answer pairs");
  const auto scores = per_class_scores(pairs);
  double sum = 0.0;
  for (const auto& [cls, s] : scores) sum += s.f1;
  return sum / static_cast<double>(scores.size());
}

double mean_iou(const std::vector<BoxPair>& pairs) {
  if (pairs.empty()) throw EmptyInput("mean_iou: no box pairs");
  double sum = 0.0;
  for (const BoxPair& p : pairs) {
    if (p.predicted && p.predicted->valid()) {
      sum += iou(p.truth, *p.predicted);
    }
  }
  return sum / static_cast<double>(pairs.size());
}

EvalReport evaluate(const std::vector<Prediction>& predictions,
                    const std::vector<DatasetRecord>& ground_truth) {
  std::map<std::string, const DatasetRecord*> truth_by_id;
  for (const DatasetRecord& r : ground_truth) truth_by_id[r.id] = &r;

  std::set<std::string> seen;
  std::vector<std::string> unmatched;
  for (const Prediction& p : predictions) {
    if (!truth_by_id.count(p.id)) unmatched.push_back("prediction '" + p.id + "'");
    seen.insert(p.id);
  }
  for (const DatasetRecord& r : ground_truth) {
    if (!seen.count(r.id)) unmatched.push_back("ground truth '" + r.id + "'");
  }
  if (!unmatched.empty()) {
    std::string msg = "unmatched ids:";
    for (const std::string& u : unmatched) msg += " " + u;
    throw IdMismatch(msg);
  }

  std::vector<AnswerPair> answers;
  std::vector<BoxPair> boxes;
  for (const Prediction& p : predictions) {
    const DatasetRecord& truth = *truth_by_id.at(p.id);
    answers.push_back({normalize_answer(p.answer), normalize_answer(truth.answer)});
    if (truth.bbox) {
      boxes.push_back({p.bbox, *truth.bbox});
    }
  }

  EvalReport report;
  report.n = answers.size();
  report.acc = accuracy(answers);
  report.per_class = per_class_scores(answers);
  double f_sum = 0.0;
  for (const auto& [cls, s] : report.per_class) f_sum += s.f1;
  report.f_score = f_sum / static_cast<double>(report.per_class.size());
  report.miou = boxes.empty() ? 0.0 : mean_iou(boxes);
  return report;
}

std::vector<Prediction> load_predictions(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open '" + path + "' for reading");

  std::vector<Prediction> preds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("answer")) {
      throw ValidationError("MissingField", "", "line " + std::to_string(line_no),
                            "prediction lines need 'id' and 'answer'");
    }
    Prediction p;
    p.id = j["id"].get<std::string>();
    p.answer = j["answer"].get<std::string>();
    if (j.contains("bbox") && j["bbox"].is_array() && j["bbox"].size() == 4) {
      BoundingBox box{j["bbox"][0].get<int>(), j["bbox"][1].get<int>(), j["bbox"][2].get<int>(),
                      j["bbox"][3].get<int>()};
      if (box.valid()) p.bbox = box;
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["averaging"] = "macro-over-truth-classes";
  j["acc"] = report.acc;
  j["f_score"] = report.f_score;
  j["miou"] = report.miou;
  j["n"] = report.n;
  nlohmann::ordered_json classes = nlohmann::ordered_json::object();
  for (const auto& [cls, s] : report.per_class) {
    classes[cls] = {{"truth_count", s.truth_count},
                    {"predicted_count", s.predicted_count},
                    {"correct", s.correct},
                    {"precision", s.precision},
                    {"recall", s.recall},
                    {"f1", s.f1}};
  }
  j["per_class"] = std::move(classes);
  return j;
}

}  // namespace vqla
