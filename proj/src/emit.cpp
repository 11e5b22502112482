#include "vqla/emit.hpp"

#include <sstream>

namespace vqla {

std::string emit_trace(const EnvConfig& env, const RolloutAction& action,
                       const SceneSpec& scene) {
  const BoundingBox box = anchor_box(env, action.anchor);
  const std::string& answer = vocab::answers().at(static_cast<std::size_t>(action.answer));

  std::ostringstream out;
  out << "Planning: Identify the question target, inspect the scene, compare the candidates, "
         "and conclude.\n";
  out << "Principle: Match each candidate's visible features against the expected ones.\n";
  out << "Visual analysis: The frame shows " << scene.instruments.size();
  out << (scene.instruments.size() == 1 ? " instrument." : " instruments.");
  for (const SceneInstrument& inst : scene.instruments) {
    out << " The " << inst.type << " appears near the " << quadrant_term(inst.quadrant)
        << " area while " << inst.state << ".";
  }
  out << " The exposed " << scene.organ << " lies toward the "
      << quadrant_term(scene.organ_quadrant) << " side.\n";
  out << "Comparison: One candidate matches the expected features best.\n";
  out << "Conclusion: The best match sits in the " << quadrant_term(action.stated)
      << " region. <answer>" << answer << "</answer> <box>[" << box.x1 << "," << box.y1 << ","
      << box.x2 << "," << box.y2 << "]</box>\n";
  return out.str();
}

}  // namespace vqla
