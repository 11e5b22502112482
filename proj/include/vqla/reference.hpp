#pragma once

#include <cstddef>

namespace vqla::reference {

// Full-scale operating points and corpus counts for the EndoVis VQLA
// benchmarks. The toy environment in this repository does not reproduce
// them; they are context constants for reports and documentation.

// EndoVis-18 test split (sequences 1, 5, 16).
inline constexpr double kEndoVis18Acc = 0.7356;
inline constexpr double kEndoVis18Fscore = 0.4576;
inline constexpr double kEndoVis18Miou = 0.8721;

// EndoVis-17, used as an external validation set.
inline constexpr double kEndoVis17Acc = 0.5672;
inline constexpr double kEndoVis17Fscore = 0.4422;
inline constexpr double kEndoVis17Miou = 0.8422;

// Reasoning-corpus composition at full scale. The published visual-QA total
// appears in two variants; both are recorded and neither is enforced by the
// validator.
inline constexpr std::size_t kCotTotal = 12255;
inline constexpr std::size_t kGroundingQaTotal = 8902;
inline constexpr std::size_t kVisualQaTotalA = 33324;
inline constexpr std::size_t kVisualQaTotalB = 33342;

}  // namespace vqla::reference
