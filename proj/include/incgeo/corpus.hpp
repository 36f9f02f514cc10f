#pragma once

// Seeded nice-configuration generators shared by the CLI, the calibration run
// and the test suites.

#include <cstdint>
#include <vector>

#include "incgeo/incidence.hpp"

namespace incgeo {

struct ConfigSpec {
  int delta_exp = 6;
  double s = 0.5;  ///< slope-set exponent
  double t = 1.0;  ///< point-set exponent
  std::int64_t M = 4;
  std::uint64_t seed = 1;
};

/// 2^(floor(s m) - 2), at least 2.
std::int64_t default_multiplicity(double s, int delta_exp);

/// Random (delta, t)-set with an independent random (delta, s)-slope set of
/// size M at every point.
NiceConfiguration random_config(const ConfigSpec& spec);

/// Random (delta, t)-set with one shared slope set of size M.
NiceConfiguration product_config(const ConfigSpec& spec);

/// `count` evenly spaced squares on the horizontal line y = 1/2, each with a
/// random slope set in [1/2, 1).
NiceConfiguration collinear_config(int delta_exp, std::int64_t count, std::int64_t M, double s,
                                   std::uint64_t seed);

/// `count` specs cycling through the listed scales and a fixed grid of (s, t).
std::vector<ConfigSpec> corpus_specs(std::size_t count, const std::vector<int>& delta_exps,
                                     std::uint64_t seed);

struct CalibrationResult {
  double min_ratio = 0.0;  ///< over the corpus, lhs / (C^{-1/s} |T cap P| M)
  double constant = 0.0;   ///< min_ratio / 2
  std::size_t configs = 0;
  ConfigSpec argmin;
};

/// The large-tube ratio on the heaviest tube of each configuration of the
/// calibration corpus (100 configurations at delta = 2^-6).
CalibrationResult calibrate_large_tube(std::size_t count = 100, std::uint64_t seed = 20240601);

} // namespace incgeo
