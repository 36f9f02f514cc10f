#pragma once

// Frozen constants for the inequality checkers. Regenerate with `incgeo calibrate`.

#include <cstdint>

namespace incgeo {

/// Implicit constant of the large-tube and union bounds: half the minimum ratio
/// lhs / (C^{-1/s} |T cap P| M) observed on the calibration corpus.
inline constexpr double kLargeTubeConstant = 6.2996052494743644;

/// Tubes counted as transversal to T make slope difference >= kTransversalFraction * C^{-1/s}.
inline constexpr double kTransversalFraction = 1.0 / 16.0;

/// Every Elekes line must carry at least |A| / kElekesLineFactor grid squares.
inline constexpr std::int64_t kElekesLineFactor = 4;

/// Allowed factor between the Frostman constants of a slope set and of the
/// parameter set of the tubes through one square with those slopes.
inline constexpr double kSlopeParameterFactor = 8.0;

} // namespace incgeo
