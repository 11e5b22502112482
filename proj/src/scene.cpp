#include "vqla/scene.hpp"

#include <algorithm>
#include <array>

#include "vqla/errors.hpp"

namespace vqla {

namespace vocab {

const std::vector<std::string>& instruments() {
  static const std::vector<std::string> v = {
      "bipolar-forceps",     "prograsp-forceps", "large-needle-driver",
      "monopolar-curved-scissors", "ultrasound-probe", "suction-instrument",
      "clip-applier",        "grasping-retractor"};
  return v;
}

const std::vector<std::string>& states() {
  static const std::vector<std::string> v = {
      "idle",          "grasping",  "retraction", "tissue-manipulation", "cutting",
      "cauterization", "suction",   "suturing",   "clipping",            "stapling"};
  return v;
}

const std::vector<std::string>& organs() {
  static const std::vector<std::string> v = {"kidney", "liver",     "gallbladder",
                                             "spleen", "intestine", "stomach"};
  return v;
}

const std::vector<std::string>& answers() {
  static const std::vector<std::string> v = [] {
    std::vector<std::string> all;
    for (int q = 0; q < 4; ++q) {
      all.push_back(quadrant_term(static_cast<Quadrant>(q)));
    }
    for (const auto& s : states()) all.push_back(s);
    for (const auto& o : organs()) all.push_back(o);
    return all;
  }();
  return v;
}

std::size_t answer_index(const std::string& answer) {
  const auto& all = answers();
  const auto it = std::find(all.begin(), all.end(), answer);
  if (it == all.end()) {
    throw OutOfSupport("answer '" + answer + "' not in the answer vocabulary");
  }
  return static_cast<std::size_t>(it - all.begin());
}

}  // namespace vocab

namespace {
constexpr int kAnchorInset = 8;   // px between an anchor box and its grid cell
constexpr int kQuadrantMargin = 4;  // minimum distance from a box to its quadrant border

struct QuadrantRect {
  int x0, y0, x1, y1;  // half-open
};

QuadrantRect quadrant_rect(const ImageDims& dims, Quadrant q) {
  const int mx = dims.width / 2;
  const int my = dims.height / 2;
  switch (q) {
    case Quadrant::LT: return {0, 0, mx, my};
    case Quadrant::RT: return {mx, 0, dims.width, my};
    case Quadrant::LB: return {0, my, mx, dims.height};
    case Quadrant::RB: return {mx, my, dims.width, dims.height};
  }
  return {0, 0, 0, 0};
}
}  // namespace

void EnvConfig::check() const {
  if (!dims.valid()) throw Error("BadConfig", "frame dims must be positive");
  if (anchor_k < 1) throw Error("BadConfig", "anchor_k must be >= 1");
  if (dims.width % (2 * anchor_k) != 0 || dims.height % (2 * anchor_k) != 0) {
    throw Error("BadConfig", "frame dims must be divisible by 2 * anchor_k");
  }
  const int cw = dims.width / (2 * anchor_k);
  const int ch = dims.height / (2 * anchor_k);
  if (cw < 4 * kAnchorInset || ch < 4 * kAnchorInset) {
    throw Error("BadConfig", "anchor cells too small for the fixed inset");
  }
}

BoundingBox anchor_box(const EnvConfig& env, int index) {
  if (index < 0 || index >= env.anchor_count()) {
    throw OutOfSupport("anchor index " + std::to_string(index) + " outside grid of " +
                       std::to_string(env.anchor_count()));
  }
  const int per_quadrant = env.anchor_k * env.anchor_k;
  const auto q = static_cast<Quadrant>(index / per_quadrant);
  const int cell = index % per_quadrant;
  const int i = cell % env.anchor_k;
  const int j = cell / env.anchor_k;
  const QuadrantRect rect = quadrant_rect(env.dims, q);
  const int cw = (rect.x1 - rect.x0) / env.anchor_k;
  const int ch = (rect.y1 - rect.y0) / env.anchor_k;
  return {rect.x0 + i * cw + kAnchorInset, rect.y0 + j * ch + kAnchorInset,
          rect.x0 + (i + 1) * cw - kAnchorInset, rect.y0 + (j + 1) * ch - kAnchorInset};
}

Quadrant anchor_quadrant(const EnvConfig& env, int index) {
  if (index < 0 || index >= env.anchor_count()) {
    throw OutOfSupport("anchor index " + std::to_string(index) + " outside grid of " +
                       std::to_string(env.anchor_count()));
  }
  return static_cast<Quadrant>(index / (env.anchor_k * env.anchor_k));
}

int nearest_anchor(const EnvConfig& env, const BoundingBox& box) {
  int best = 0;
  double best_iou = -1.0;
  for (int a = 0; a < env.anchor_count(); ++a) {
    const double overlap = iou(box, anchor_box(env, a));
    if (overlap > best_iou) {
      best_iou = overlap;
      best = a;
    }
  }
  return best;
}

namespace {

// Translates an anchor box by a small random offset, then clamps it back so
// it keeps kQuadrantMargin inside its quadrant.
BoundingBox jittered_box(const EnvConfig& env, Quadrant q, int cell, SplitMix64& rng) {
  const int per_quadrant = env.anchor_k * env.anchor_k;
  const int index = static_cast<int>(q) * per_quadrant + cell;
  BoundingBox box = anchor_box(env, index);

  const QuadrantRect rect = quadrant_rect(env.dims, q);
  const int cw = (rect.x1 - rect.x0) / env.anchor_k;
  const int ch = (rect.y1 - rect.y0) / env.anchor_k;
  const int jx = std::max(1, cw / 12);
  const int jy = std::max(1, ch / 12);
  box = box.translated(rng.next_int(-jx, jx), rng.next_int(-jy, jy));

  int dx = 0;
  int dy = 0;
  if (box.x1 < rect.x0 + kQuadrantMargin) dx = rect.x0 + kQuadrantMargin - box.x1;
  if (box.x2 > rect.x1 - kQuadrantMargin) dx = rect.x1 - kQuadrantMargin - box.x2;
  if (box.y1 < rect.y0 + kQuadrantMargin) dy = rect.y0 + kQuadrantMargin - box.y1;
  if (box.y2 > rect.y1 - kQuadrantMargin) dy = rect.y1 - kQuadrantMargin - box.y2;
  return box.translated(dx, dy);
}

template <typename T>
void partial_shuffle(std::vector<T>& v, SplitMix64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[static_cast<std::size_t>(rng.next_below(i))]);
  }
}

}  // namespace

SceneSpec sample_scene(const EnvConfig& env, SplitMix64& rng) {
  env.check();

  SceneSpec scene;
  scene.dims = env.dims;

  const int n = 1 + static_cast<int>(rng.next_below(3));

  std::vector<Quadrant> quadrants = {Quadrant::LT, Quadrant::RT, Quadrant::LB, Quadrant::RB};
  partial_shuffle(quadrants, rng);

  std::vector<std::size_t> type_order(vocab::instruments().size());
  for (std::size_t i = 0; i < type_order.size(); ++i) type_order[i] = i;
  partial_shuffle(type_order, rng);

  const int per_quadrant = env.anchor_k * env.anchor_k;
  for (int i = 0; i < n; ++i) {
    SceneInstrument inst;
    inst.type = vocab::instruments()[type_order[static_cast<std::size_t>(i)]];
    inst.quadrant = quadrants[static_cast<std::size_t>(i)];
    inst.state = vocab::states()[rng.next_below(vocab::states().size())];
    inst.bbox = jittered_box(env, inst.quadrant, static_cast<int>(rng.next_below(per_quadrant)),
                             rng);
    scene.instruments.push_back(std::move(inst));
  }

  scene.organ = vocab::organs()[rng.next_below(vocab::organs().size())];
  scene.organ_quadrant = static_cast<Quadrant>(rng.next_below(4));
  scene.organ_bbox = jittered_box(env, scene.organ_quadrant,
                                  static_cast<int>(rng.next_below(per_quadrant)), rng);
  return scene;
}

Question render_question(const SceneSpec& scene, SplitMix64& rng) {
  Question q;
  const int kind = static_cast<int>(rng.next_below(3));
  if (kind == 0) {
    q.type = QuestionType::Organ;
    q.text = "What organ is being operated on?";
    q.answer = scene.organ;
    q.bbox = scene.organ_bbox;
    q.target_instrument = -1;
    return q;
  }

  const auto target = static_cast<int>(rng.next_below(scene.instruments.size()));
  const SceneInstrument& inst = scene.instruments[static_cast<std::size_t>(target)];
  q.target_instrument = target;
  q.bbox = inst.bbox;
  if (kind == 1) {
    q.type = QuestionType::InstrumentLocation;
    q.text = "Where is the " + inst.type + " located?";
    q.answer = quadrant_term(inst.quadrant);
  } else {
    q.type = QuestionType::InstrumentState;
    q.text = "What is the state of the " + inst.type + "?";
    q.answer = inst.state;
  }
  return q;
}

DatasetRecord question_truth_record(const SceneSpec& scene, const Question& question,
                                    const std::string& image_id) {
  DatasetRecord rec;
  rec.id = image_id + "#CoT#0";
  rec.kind = RecordKind::CoT;
  rec.image_id = image_id;
  rec.question = question.text;
  rec.question_type = question.type;
  rec.answer = question.answer;
  rec.bbox = question.bbox;
  rec.cot = CoTChain{{{StageLabel::Conclusion, "The answer is " + question.answer + "."}}};
  check_record(rec);
  return rec;
}

}  // namespace vqla
