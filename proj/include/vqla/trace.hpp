#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vqla/dataset.hpp"
#include "vqla/geometry.hpp"

namespace vqla {

// Structured view of one rollout's free text. Parsing is total: malformed or
// absent pieces are represented as absent, never fabricated, and never abort
// extraction of the other fields.
struct ParsedTrace {
  std::string reasoning_text;              // input with answer/box marker spans removed
  std::optional<CoTChain> stages;          // present when stage-labelled lines were found
  std::string answer;                      // normalized <answer> payload; "" when absent
  std::optional<BoundingBox> bbox;         // <box>[x1,y1,x2,y2]</box> when well-formed
  std::vector<Quadrant> spatial_mentions;  // locative terms of the reasoning, in order
  std::optional<Quadrant> q_inferred;      // spatial claim the coherence reward checks
};

// Lowercases, trims, collapses internal whitespace, strips trailing
// punctuation. Idempotent.
std::string normalize_answer(const std::string& text);

// Collects quadrant terms ("left-top", "top left", "Bottom-Right", ...) in
// order of appearance. Case-insensitive; the two words may be joined by
// spaces or hyphens in either order.
std::vector<Quadrant> extract_spatial_terms(const std::string& text);

// Marker grammar: `<answer>...</answer>` and `<box>[x1,y1,x2,y2]</box>`.
// The inferred quadrant is the last spatial mention inside the Conclusion
// stage when stage-labelled lines are present, else the last mention in the
// whole reasoning text.
ParsedTrace parse_trace(const std::string& text);

}  // namespace vqla
