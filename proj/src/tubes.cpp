#include "incgeo/tubes.hpp"

#include <algorithm>
#include <array>
#include <string>

#include "incgeo/error.hpp"

namespace incgeo {

void TubeParam::validate() const {
  const std::int64_t n = scale.inverse();
  if (a < -n || a >= n) {
    throw PreconditionError("tube slope index " + std::to_string(a) + " outside [-1, 1) at scale 2^-" +
                            std::to_string(scale.exponent()));
  }
  if (b < -2 * n || b >= 2 * n) {
    throw PreconditionError("tube intercept index " + std::to_string(b) + " outside [-2, 2)");
  }
}

namespace {

struct End {
  i128 v = 0;
  bool attained = false;
};

bool is_empty(const Interval& I) {
  return I.lo > I.hi || (I.lo == I.hi && !(I.lo_closed && I.hi_closed));
}

// Infimum and supremum of {a x : a in A, x in X}, with attainment.
void product_range(const Interval& A, const Interval& X, End& lo, End& hi) {
  const std::array<i128, 2> av{A.lo, A.hi};
  const std::array<bool, 2> ain{A.lo_closed, A.hi_closed};
  const std::array<i128, 2> xv{X.lo, X.hi};
  const std::array<bool, 2> xin{X.lo_closed, X.hi_closed};
  i128 v[2][2];
  for (int p = 0; p < 2; ++p)
    for (int q = 0; q < 2; ++q) v[p][q] = av[p] * xv[q];
  lo.v = std::min({v[0][0], v[0][1], v[1][0], v[1][1]});
  hi.v = std::max({v[0][0], v[0][1], v[1][0], v[1][1]});

  auto attained = [&](i128 target) {
    bool hit = false;
    for (int p = 0; p < 2; ++p)
      for (int q = 0; q < 2; ++q)
        if (v[p][q] == target && ain[p] && xin[q]) hit = true;
    // an extremal edge is one along which the product is constant
    for (int p = 0; p < 2; ++p)
      if (v[p][0] == target && v[p][1] == target && ain[p]) hit = true;
    for (int q = 0; q < 2; ++q)
      if (v[0][q] == target && v[1][q] == target && xin[q]) hit = true;
    return hit;
  };
  lo.attained = attained(lo.v);
  hi.attained = attained(hi.v);
}

} // namespace

bool lines_meet(const Interval& A, const Interval& X, const Interval& B, const Interval& Y) {
  if (is_empty(A) || is_empty(X) || is_empty(B) || is_empty(Y)) return false;
  End wlo, whi;
  product_range(A, X, wlo, whi);
  const i128 zlo = wlo.v + B.lo;
  const i128 zhi = whi.v + B.hi;
  const bool zlo_closed = wlo.attained && B.lo_closed;
  const bool zhi_closed = whi.attained && B.hi_closed;

  i128 lo, hi;
  bool lo_closed, hi_closed;
  if (zlo > Y.lo) {
    lo = zlo;
    lo_closed = zlo_closed;
  } else if (zlo < Y.lo) {
    lo = Y.lo;
    lo_closed = Y.lo_closed;
  } else {
    lo = zlo;
    lo_closed = zlo_closed && Y.lo_closed;
  }
  if (zhi < Y.hi) {
    hi = zhi;
    hi_closed = zhi_closed;
  } else if (zhi > Y.hi) {
    hi = Y.hi;
    hi_closed = Y.hi_closed;
  } else {
    hi = zhi;
    hi_closed = zhi_closed && Y.hi_closed;
  }
  return lo < hi || (lo == hi && lo_closed && hi_closed);
}

bool tube_meets_square(const TubeParam& T, const DyadicSquare& q) {
  const int G = std::max(T.scale.exponent(), q.scale().exponent());
  const i128 gt = pow2(G - T.scale.exponent());
  const i128 gq = pow2(G - q.scale().exponent());
  const i128 unit2 = pow2(G);
  Interval A = Interval::half_open(T.a * gt, (T.a + 1) * gt);
  Interval B = Interval::half_open(T.b * gt * unit2, (T.b + 1) * gt * unit2);
  // the chart's free coordinate, then its dependent one
  std::int64_t u = q.i(), v = q.j();
  if (T.chart == Chart::vertical) std::swap(u, v);
  Interval X = Interval::half_open(u * gq, (u + 1) * gq);
  Interval Y = Interval::half_open(v * gq * unit2, (v + 1) * gq * unit2);
  return lines_meet(A, X, B, Y);
}

namespace {

// Rows j of column i (at base scale, in units of the base side) met by a
// standard-chart tube: [floor(L), ceil(U) - 1] where (L, U) bounds the section.
std::pair<std::int64_t, std::int64_t> column_rows(const TubeParam& T, Scale base, std::int64_t i) {
  const int G = std::max(T.scale.exponent(), base.exponent());
  const i128 gt = pow2(G - T.scale.exponent());
  const i128 gq = pow2(G - base.exponent());
  const i128 a0 = T.a * gt, a1 = (T.a + 1) * gt;
  const i128 x0 = i * gq, x1 = (i + 1) * gq;
  const i128 lo = std::min({a0 * x0, a0 * x1}) + T.b * gt * pow2(G);
  const i128 hi = std::max({a1 * x0, a1 * x1}) + (T.b + 1) * gt * pow2(G);
  const i128 cell = gq * pow2(G);
  return {static_cast<std::int64_t>(floor_div<i128>(lo, cell)),
          static_cast<std::int64_t>(ceil_div<i128>(hi, cell) - 1)};
}

} // namespace

std::int64_t tube_point_count(const TubeParam& T, const PointSet& P, const ColumnIndex& index) {
  if (T.chart == Chart::vertical) return static_cast<std::int64_t>(tube_points(T, P, index).size());
  std::int64_t total = 0;
  for (std::int64_t i = index.min_column(); i <= index.max_column(); ++i) {
    auto [jlo, jhi] = column_rows(T, P.base_scale(), i);
    total += index.count(i, jlo, jhi);
  }
  return total;
}

std::int64_t tube_point_count(const TubeParam& T, const PointSet& P) {
  ColumnIndex index(P);
  return tube_point_count(T, P, index);
}

std::vector<std::size_t> tube_points(const TubeParam& T, const PointSet& P,
                                     const ColumnIndex& index) {
  std::vector<std::size_t> out;
  if (T.chart == Chart::vertical) {
    for (std::size_t k = 0; k < P.size(); ++k) {
      if (tube_meets_square(T, P.square(k))) out.push_back(k);
    }
    return out;
  }
  for (std::int64_t i = index.min_column(); i <= index.max_column(); ++i) {
    auto [jlo, jhi] = column_rows(T, P.base_scale(), i);
    for (std::int64_t j : index.rows(i, jlo, jhi)) out.push_back(*P.index_of({i, j}));
  }
  std::sort(out.begin(), out.end());
  return out;
}

TubeFamily::TubeFamily(Scale scale, std::vector<TubeParam> params)
    : scale_(scale), params_(std::move(params)) {
  for (const TubeParam& T : params_) {
    if (T.scale != scale_) throw PreconditionError("tube family mixes scales");
    T.validate();
  }
  std::sort(params_.begin(), params_.end());
  params_.erase(std::unique(params_.begin(), params_.end()), params_.end());
}

bool TubeFamily::contains(const TubeParam& T) const {
  return std::binary_search(params_.begin(), params_.end(), T);
}

PointSet TubeFamily::parameter_set() const {
  std::vector<Cell> cells;
  cells.reserve(params_.size());
  for (const TubeParam& T : params_) {
    if (T.chart != params_.front().chart) {
      throw PreconditionError("parameter set of a family with mixed charts");
    }
    cells.push_back({T.a, T.b});
  }
  return PointSet(scale_, std::move(cells), Bounds::unbounded);
}

FrostmanCertificate TubeFamily::certificate(double s) const {
  return frostman_constant(parameter_set(), s);
}

TubeFamily tubes_through(const DyadicSquare& q, const std::vector<std::int64_t>& slopes,
                         Scale delta) {
  const int m = delta.exponent();
  const int k = q.scale().exponent();
  std::vector<TubeParam> params;
  params.reserve(slopes.size());
  for (std::int64_t a : slopes) {
    if (a < -delta.inverse() || a >= delta.inverse()) {
      throw PreconditionError("slope index " + std::to_string(a) + " outside [-1, 1)");
    }
    // b = cy - (a + 1/2) d cx in units of 2^-(m+k+2)
    const i128 num = i128{2 * q.j() + 1} * pow2(m + 1) - i128{2 * a + 1} * (2 * q.i() + 1);
    const auto b = static_cast<std::int64_t>(floor_div<i128>(num, pow2(k + 2)));
    params.push_back(TubeParam{delta, a, b, Chart::standard});
  }
  return TubeFamily(delta, std::move(params));
}

TubeFamily tube_cover(const TubeFamily& family, Scale Delta) {
  if (Delta < family.scale()) throw InvalidScale("tube_cover: Delta finer than the family scale");
  const int k = family.scale().exponent() - Delta.exponent();
  std::vector<TubeParam> params;
  params.reserve(family.size());
  for (const TubeParam& T : family.params()) {
    params.push_back(TubeParam{Delta, T.a >> k, T.b >> k, T.chart});
  }
  return TubeFamily(Delta, std::move(params));
}

} // namespace incgeo
