#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vqla/dataset.hpp"
#include "vqla/geometry.hpp"

namespace vqla {

struct AnswerPair {
  std::string predicted;  // normalized
  std::string truth;      // normalized
};

struct BoxPair {
  std::optional<BoundingBox> predicted;
  BoundingBox truth;
};

struct ClassScore {
  std::size_t truth_count = 0;
  std::size_t predicted_count = 0;
  std::size_t correct = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct EvalReport {
  double acc = 0.0;
  double f_score = 0.0;  // macro F1 over ground-truth classes
  double miou = 0.0;
  std::size_t n = 0;
  std::map<std::string, ClassScore> per_class;
};

// Fraction of exact matches. Throws EmptyInput on an empty list.
double accuracy(const std::vector<AnswerPair>& pairs);

// Unweighted mean of per-class F1 over the classes present in the ground
// truth; classes with precision + recall = 0 contribute 0. Predictions of a
// class absent from the truths do not add averaging terms.
double macro_fscore(const std::vector<AnswerPair>& pairs);
std::map<std::string, ClassScore> per_class_scores(const std::vector<AnswerPair>& pairs);

// Mean IoU; a missing prediction scores 0 rather than being excluded.
double mean_iou(const std::vector<BoxPair>& pairs);

struct Prediction {
  std::string id;
  std::string answer;
  std::optional<BoundingBox> bbox;
};

// Raised when the prediction and ground-truth files do not cover the same
// record ids; the message lists the unmatched ids.
struct IdMismatch : Error {
  explicit IdMismatch(const std::string& msg) : Error("IdMismatch", msg) {}
};

// Joins predictions and ground truth on id and applies the three metrics;
// mIoU runs over the records whose ground truth carries a box.
EvalReport evaluate(const std::vector<Prediction>& predictions,
                    const std::vector<DatasetRecord>& ground_truth);

std::vector<Prediction> load_predictions(const std::string& path);
nlohmann::ordered_json report_to_json(const EvalReport& report);

}  // namespace vqla
