#pragma once

#include <string>

#include "vqla/policy.hpp"
#include "vqla/scene.hpp"

namespace vqla {

// Renders an action as staged rollout text in the marker grammar the parser
// expects. The visual-analysis stage describes the scene as it is; the
// conclusion states the action's claimed quadrant, which may contradict the
// emitted box - that is the modeled spatial hallucination.
std::string emit_trace(const EnvConfig& env, const RolloutAction& action,
                       const SceneSpec& scene);

}  // namespace vqla
