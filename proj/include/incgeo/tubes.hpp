#pragma once

// Dyadic delta-tubes and the exact point-tube incidence predicate.
//
// A standard-chart tube with parameter square p = [a, a+d) x [b, b+d) is the
// set of points (x, y) with y = a' x + b' for some (a', b') in p. The vertical
// chart exchanges x and y, giving x = a' y + b'.

#include <compare>
#include <cstdint>
#include <vector>

#include "incgeo/dyadic.hpp"
#include "incgeo/exact.hpp"
#include "incgeo/pointsets.hpp"

namespace incgeo {

enum class Chart { standard, vertical };

struct TubeParam {
  Scale scale;
  std::int64_t a = 0;  ///< slope index: sigma(T) = [a d, (a+1) d)
  std::int64_t b = 0;  ///< intercept index
  Chart chart = Chart::standard;

  /// Throws PreconditionError unless a d in [-1, 1) and b d in [-2, 2).
  void validate() const;

  double slope_lo() const { return static_cast<double>(a) * scale.value(); }

  friend bool operator==(const TubeParam&, const TubeParam&) = default;
  friend std::strong_ordering operator<=>(const TubeParam& x, const TubeParam& y) {
    if (auto c = y.scale.exponent() <=> x.scale.exponent(); c != 0) return c;
    if (auto c = x.chart <=> y.chart; c != 0) return c;
    if (auto c = x.a <=> y.a; c != 0) return c;
    return x.b <=> y.b;
  }
};

/// A real interval with integer endpoints in some fixed unit.
struct Interval {
  i128 lo = 0;
  i128 hi = 0;
  bool lo_closed = true;
  bool hi_closed = false;

  static Interval half_open(i128 lo, i128 hi) { return Interval{lo, hi, true, false}; }
};

/// Whether y = a x + b has a solution with a in A, x in X, b in B, y in Y.
/// A and X share one unit u; B and Y must be given in the unit u^2.
bool lines_meet(const Interval& A, const Interval& X, const Interval& B, const Interval& Y);

bool tube_meets_square(const TubeParam& T, const DyadicSquare& q);

/// Number of squares of P meeting T.
std::int64_t tube_point_count(const TubeParam& T, const PointSet& P);
std::int64_t tube_point_count(const TubeParam& T, const PointSet& P, const ColumnIndex& index);

/// The squares of P meeting T, as indices into P's Z-order.
std::vector<std::size_t> tube_points(const TubeParam& T, const PointSet& P,
                                     const ColumnIndex& index);

class TubeFamily {
public:
  TubeFamily() = default;
  /// Deduplicates; all params must share `scale`.
  TubeFamily(Scale scale, std::vector<TubeParam> params);

  Scale scale() const noexcept { return scale_; }
  std::size_t size() const noexcept { return params_.size(); }
  bool empty() const noexcept { return params_.empty(); }
  /// Sorted by (chart, a, b).
  const std::vector<TubeParam>& params() const noexcept { return params_; }
  bool contains(const TubeParam& T) const;

  /// The parameter squares as a point set in the (a, b)-plane.
  /// Throws PreconditionError when charts are mixed.
  PointSet parameter_set() const;
  FrostmanCertificate certificate(double s) const;

  friend bool operator==(const TubeFamily&, const TubeFamily&) = default;

private:
  Scale scale_;
  std::vector<TubeParam> params_;
};

/// For each slope index a, the tube of slope interval [a d, (a+1) d) whose line of
/// slope (a + 1/2) d passes through the center of q, intercept snapped down.
TubeFamily tubes_through(const DyadicSquare& q, const std::vector<std::int64_t>& slopes,
                         Scale delta);

/// The coarse tubes whose parameter squares contain the fine ones.
TubeFamily tube_cover(const TubeFamily& family, Scale Delta);

} // namespace incgeo
