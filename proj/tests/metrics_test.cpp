#include <doctest.h>

#include "test_support.hpp"
#include "vqla/metrics.hpp"
#include "vqla/reference.hpp"

using namespace vqla;

namespace {

// The 10-item fixture: truths kidney x4 and cutting x6; predictions send one
// cutting to liver (a class absent from the truths) and two to kidney.
// Hand confusion computation: kidney TP 4, predicted 6 -> P 2/3, R 1,
// F1 0.8; cutting TP 3, predicted 3 -> P 1, R 1/2, F1 2/3; liver is
// prediction-only and drops out. Macro = (0.8 + 2/3) / 2 = 11/15.
struct Fixture {
  std::vector<Prediction> predictions;
  std::vector<DatasetRecord> truth;
};

Fixture metrics_fixture() {
  Fixture f;
  auto add = [&](int i, const std::string& truth_answer, const std::string& predicted,
                 std::optional<BoundingBox> truth_box, std::optional<BoundingBox> predicted_box) {
    DatasetRecord r;
    r.id = "fx#" + std::to_string(i);
    r.kind = truth_box ? RecordKind::GroundingQA : RecordKind::VisualQA;
    r.image_id = "fx";
    r.question = "q" + std::to_string(i);
    r.question_type = truth_box ? QuestionType::GroundingSub : QuestionType::VisualSub;
    r.answer = truth_answer;
    r.bbox = truth_box;
    f.truth.push_back(r);
    f.predictions.push_back({r.id, predicted, predicted_box});
  };

  // two grounded records carrying the IoU {1.0, 1/3} pair
  add(0, "kidney", "kidney", BoundingBox{0, 0, 10, 10}, BoundingBox{0, 0, 10, 10});
  add(1, "kidney", "kidney", BoundingBox{0, 0, 10, 10}, BoundingBox{5, 0, 15, 10});
  add(2, "kidney", "kidney", std::nullopt, std::nullopt);
  add(3, "kidney", "kidney", std::nullopt, std::nullopt);
  add(4, "cutting", "liver", std::nullopt, std::nullopt);
  add(5, "cutting", "kidney", std::nullopt, std::nullopt);
  add(6, "cutting", "kidney", std::nullopt, std::nullopt);
  add(7, "cutting", "cutting", std::nullopt, std::nullopt);
  add(8, "cutting", "cutting", std::nullopt, std::nullopt);
  add(9, "cutting", "cutting", std::nullopt, std::nullopt);
  return f;
}

}  // namespace

TEST_CASE("accuracy counts exact matches") {
  CHECK(accuracy({{"a", "a"}, {"b", "b"}}) == 1.0);
  CHECK(accuracy({{"a", "b"}, {"b", "a"}}) == 0.0);

  std::vector<AnswerPair> pairs;
  for (int i = 0; i < 7; ++i) pairs.push_back({"x", "x"});
  for (int i = 0; i < 3; ++i) pairs.push_back({"x", "y"});
  CHECK(accuracy(pairs) == doctest::Approx(0.7));
  CHECK_THROWS_AS(accuracy({}), EmptyInput);
}

TEST_CASE("macro F over the hand confusion example") {
  // truths {a,a,b,b}, preds {a,b,b,b}: class a F1 = 2/3, class b F1 = 0.8
  const std::vector<AnswerPair> pairs = {
      {"a", "a"}, {"b", "a"}, {"b", "b"}, {"b", "b"}};
  CHECK(macro_fscore(pairs) == doctest::Approx(0.733333).epsilon(1e-6));

  const auto scores = per_class_scores(pairs);
  CHECK(scores.at("a").f1 == doctest::Approx(2.0 / 3.0));
  CHECK(scores.at("b").f1 == doctest::Approx(0.8));
}

TEST_CASE("macro F is 1 for perfect predictions over several classes") {
  const std::vector<AnswerPair> pairs = {{"a", "a"}, {"b", "b"}, {"c", "c"}, {"a", "a"}};
  CHECK(macro_fscore(pairs) == 1.0);
}

TEST_CASE("predictions of a class absent from truths are excluded from the macro") {
  const std::vector<AnswerPair> pairs = {{"a", "a"}, {"ghost", "a"}};
  // class a: TP 1, pred 1, truth 2 -> P 1, R 0.5, F1 2/3; no 'ghost' term
  CHECK(macro_fscore(pairs) == doctest::Approx(2.0 / 3.0));
  CHECK(per_class_scores(pairs).count("ghost") == 0);
}

TEST_CASE("a class never predicted contributes zero") {
  const std::vector<AnswerPair> pairs = {{"b", "a"}, {"b", "a"}, {"b", "b"}};
  // class a: P + R = 0 -> F1 0; class b: TP 1, pred 3... hand: P 1/3, R 1 -> 0.5
  CHECK(macro_fscore(pairs) == doctest::Approx((0.0 + 0.5) / 2));
}

TEST_CASE("mean IoU averages with missing predictions as zero") {
  const BoundingBox unit{0, 0, 10, 10};
  CHECK(mean_iou({{unit, unit}, {unit, unit}}) == 1.0);
  CHECK(mean_iou({{unit, unit}, {std::nullopt, unit}}) == doctest::Approx(0.5));
  CHECK(mean_iou({{BoundingBox{5, 0, 15, 10}, unit}, {unit, unit}}) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-6));
  CHECK_THROWS_AS(mean_iou({}), EmptyInput);
}

TEST_CASE("metrics are permutation invariant") {
  Fixture f = metrics_fixture();
  const EvalReport base = evaluate(f.predictions, f.truth);

  std::reverse(f.predictions.begin(), f.predictions.end());
  const EvalReport shuffled = evaluate(f.predictions, f.truth);
  CHECK(base.acc == shuffled.acc);
  CHECK(base.f_score == shuffled.f_score);
  CHECK(base.miou == shuffled.miou);
}

TEST_CASE("the 10-item fixture hits the frozen metric values") {
  const Fixture f = metrics_fixture();
  const EvalReport report = evaluate(f.predictions, f.truth);
  CHECK(report.n == 10);
  CHECK(report.acc == doctest::Approx(0.7));
  CHECK(report.f_score == doctest::Approx(0.733333).epsilon(1e-6));
  CHECK(report.miou == doctest::Approx(0.666667).epsilon(1e-6));
}

TEST_CASE("self-evaluation of the ground truth is perfect") {
  const Fixture f = metrics_fixture();
  std::vector<Prediction> self;
  for (const DatasetRecord& r : f.truth) {
    self.push_back({r.id, r.answer, r.bbox});
  }
  const EvalReport report = evaluate(self, f.truth);
  CHECK(report.acc == 1.0);
  CHECK(report.f_score == 1.0);
  CHECK(report.miou == 1.0);
}

TEST_CASE("accuracy and mean IoU respect concatenation weighting") {
  const BoundingBox unit{0, 0, 10, 10};
  const std::vector<AnswerPair> a = {{"x", "x"}, {"x", "y"}};         // acc 0.5
  const std::vector<AnswerPair> b = {{"x", "x"}, {"x", "x"}, {"x", "x"}};  // acc 1.0
  std::vector<AnswerPair> both = a;
  both.insert(both.end(), b.begin(), b.end());
  CHECK(accuracy(both) ==
        doctest::Approx((2 * accuracy(a) + 3 * accuracy(b)) / 5.0));

  const std::vector<BoxPair> ba = {{unit, unit}};                   // miou 1
  const std::vector<BoxPair> bb = {{std::nullopt, unit}, {unit, unit}};  // miou 0.5
  std::vector<BoxPair> bboth = ba;
  bboth.insert(bboth.end(), bb.begin(), bb.end());
  CHECK(mean_iou(bboth) == doctest::Approx((1 * 1.0 + 2 * 0.5) / 3.0));
}

TEST_CASE("evaluate rejects unmatched ids") {
  Fixture f = metrics_fixture();
  f.predictions.push_back({"fx#extra", "kidney", std::nullopt});
  CHECK_THROWS_AS(evaluate(f.predictions, f.truth), IdMismatch);

  Fixture g = metrics_fixture();
  g.predictions.pop_back();
  try {
    evaluate(g.predictions, g.truth);
    FAIL("expected IdMismatch");
  } catch (const IdMismatch& e) {
    CHECK(std::string(e.what()).find("fx#9") != std::string::npos);
  }
}

TEST_CASE("reference constants are sane benchmark figures") {
  for (double v : {reference::kEndoVis18Acc, reference::kEndoVis18Fscore,
                   reference::kEndoVis18Miou, reference::kEndoVis17Acc,
                   reference::kEndoVis17Fscore, reference::kEndoVis17Miou}) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK(reference::kCotTotal + reference::kGroundingQaTotal + reference::kVisualQaTotalB >
        54000);  // the corpus name promises ~54k records
}
