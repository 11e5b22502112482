#pragma once

#include <string>
#include <vector>

#include "vqla/dataset.hpp"
#include "vqla/geometry.hpp"
#include "vqla/rng.hpp"

namespace vqla {

// Answer-class vocabulary of the synthetic environment. The class lists
// follow the EndoVis-18 annotation vocabulary; treat the exact spellings as
// a versioned asset (bump kVersion when they change).
namespace vocab {

inline constexpr const char* kVersion = "toy-vocab-1";

const std::vector<std::string>& instruments();  // 8 instrument types
const std::vector<std::string>& states();       // 10 operation states
const std::vector<std::string>& organs();       // 6 organs

// Answer head support: 4 quadrant terms, then states, then organs.
const std::vector<std::string>& answers();
std::size_t answer_index(const std::string& answer);  // throws OutOfSupport

}  // namespace vocab

struct EnvConfig {
  ImageDims dims{1280, 1024};
  int anchor_k = 4;  // each quadrant carries a k x k anchor grid

  int anchor_count() const { return 4 * anchor_k * anchor_k; }
  void check() const;  // dims divisible by 2k with roomy cells
};

// Fixed anchor geometry: anchor boxes are quadrant grid cells inset by 8 px,
// indexed quadrant-major (LT block first, then RT, LB, RB).
BoundingBox anchor_box(const EnvConfig& env, int index);
Quadrant anchor_quadrant(const EnvConfig& env, int index);
int nearest_anchor(const EnvConfig& env, const BoundingBox& box);  // argmax IoU, lowest index wins ties

struct SceneInstrument {
  std::string type;
  Quadrant quadrant;
  BoundingBox bbox;
  std::string state;
};

struct SceneSpec {
  ImageDims dims;
  std::vector<SceneInstrument> instruments;  // 1..3, unique types, distinct quadrants
  std::string organ;
  Quadrant organ_quadrant;
  BoundingBox organ_bbox;  // operated-organ region, same anchor-aligned sampling
};

// Draws a scene: instrument count uniform on {1,2,3}, quadrants without
// replacement, instrument types without replacement, boxes jittered off a
// random anchor cell and kept >= 4 px inside their quadrant.
SceneSpec sample_scene(const EnvConfig& env, SplitMix64& rng);

struct Question {
  std::string text;
  QuestionType type = QuestionType::Organ;  // Organ | InstrumentLocation | InstrumentState
  std::string answer;                       // ground-truth A
  BoundingBox bbox;                         // ground-truth B
  int target_instrument = -1;               // index into scene.instruments; -1 for organ questions
};

Question render_question(const SceneSpec& scene, SplitMix64& rng);

// Ground truth as a validated dataset record (CoT kind with a minimal
// conclusion stage), the shape the reward scorer consumes.
DatasetRecord question_truth_record(const SceneSpec& scene, const Question& question,
                                    const std::string& image_id);

}  // namespace vqla
