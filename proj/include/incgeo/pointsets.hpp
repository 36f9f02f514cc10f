#pragma once

// Frostman-type non-concentration certificates, exact ball counts and the
// generators used to build test corpora.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "incgeo/dyadic.hpp"

namespace incgeo {

using Rng = std::mt19937_64;

/// Deterministic stream derivation for retries and per-cell seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);
double uniform01(Rng& rng);

/// The point (x r, y r) for r = scale.
struct DyadicPoint {
  std::int64_t x = 0;
  std::int64_t y = 0;
  Scale scale;
};

/// A radius stored by its square: radius^2 = squared * unit^2.
struct Radius {
  std::int64_t squared = 0;
  Scale unit;

  static Radius of(std::int64_t n, Scale unit) { return Radius{n * n, unit}; }
  static Radius sqrt_of(std::int64_t squared, Scale unit) { return Radius{squared, unit}; }
  double length() const;
};

struct ScaleEntry {
  Scale r;
  std::int64_t max_count = 0;  ///< max over Q in D_r of |P cap Q|_delta
  DyadicSquare witness;        ///< a square attaining max_count
  double ratio = 0.0;          ///< max_count / (|P|_delta r^s)
};

struct FrostmanCertificate {
  double s = 0.0;
  double C = 0.0;               ///< max of per_scale ratios: the least admissible constant
  std::int64_t total = 0;       ///< |P|_delta
  Scale witness_scale;
  std::vector<ScaleEntry> per_scale;  ///< r = 1, 1/2, ..., delta

  /// P is a (delta, s, C')-set iff C' >= C.
  bool admits(double c_prime) const { return c_prime >= C; }
};

/// count / (total * r^s), the one formula every certificate uses.
double frostman_ratio(std::int64_t count, std::int64_t total, Scale r, double s);

/// Least C such that P is a (delta, s, C)-set, over all dyadic r in [delta, 1].
FrostmanCertificate frostman_constant(const PointSet& P, double s);

/// Number of squares of P whose closure meets the closed ball.
std::int64_t ball_count(const PointSet& P, const DyadicPoint& center, const Radius& radius);
std::int64_t ball_count(const PointSet& P, const ColumnIndex& index, const DyadicPoint& center,
                        const Radius& radius);

struct ConcentrationReport {
  double u = 0.0;
  Radius radius;                 ///< delta |P|_delta^{1/2}
  DyadicPoint worst_center;
  std::int64_t worst_count = 0;
  double worst_ratio = 0.0;      ///< worst_count / |P|_delta
  double threshold = 0.0;        ///< delta^u
  bool pass = false;
};

/// Single-scale non-concentration with centers on the delta-grid.
ConcentrationReport check_nonconcentration(const PointSet& P, double u);

/// Self-similar pattern: a 2^depth x 2^depth subdivision and the kept children.
struct CantorPattern {
  int depth = 1;
  std::vector<Cell> children;
};

PointSet gen_cantor(const CantorPattern& pattern, int levels);

struct GeneratedSet {
  PointSet set;
  FrostmanCertificate certificate;
  int attempts = 0;
};

inline constexpr int kGeneratorRetryBudget = 32;
inline constexpr double kGeneratorConstantCap = 16.0;

/// Random set built by level-wise subsampling with about 2^s children per square.
GeneratedSet gen_random_frostman(double s, Scale delta, std::uint64_t seed);

/// All delta-squares of [0,1)^2 meeting the closed ball.
PointSet gen_ball(const DyadicPoint& center, const Radius& radius, Scale delta);

/// Random subset of {0, ..., 2^depth - 1} with about 2^s children per halving.
std::vector<std::int64_t> random_cantor_1d(double s, int depth, Rng& rng);

/// A (delta, s)-set of exactly `count` slope intervals [a delta, (a+1) delta) in [-1, 1),
/// returned as sorted a-indices.
std::vector<std::int64_t> gen_slope_set(double s, Scale delta, std::int64_t count,
                                        std::uint64_t seed);

/// Deterministic slope set inside [0,1): keep the outer quarters of every
/// interval (dimension 1/2); an odd leftover level keeps both halves.
std::vector<std::int64_t> cantor_slope_set(Scale delta);

/// Evenly spaced subsample of `count` elements (deterministic).
std::vector<std::int64_t> even_subsample(const std::vector<std::int64_t>& values,
                                         std::int64_t count);

/// Embed 1-D interval indices as the cells (a, 0) of an unbounded point set.
PointSet as_line_set(const std::vector<std::int64_t>& indices, Scale delta);

} // namespace incgeo
