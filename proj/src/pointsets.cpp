#include "incgeo/pointsets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "incgeo/error.hpp"
#include "incgeo/exact.hpp"

namespace incgeo {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t uniform_index(Rng& rng, std::uint64_t n) { return rng() % n; }

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double Radius::length() const { return std::sqrt(static_cast<double>(squared)) * unit.value(); }

double frostman_ratio(std::int64_t count, std::int64_t total, Scale r, double s) {
  return static_cast<double>(count) / (static_cast<double>(total) * std::pow(r.value(), s));
}

FrostmanCertificate frostman_constant(const PointSet& P, double s) {
  if (P.empty()) throw PreconditionError("frostman_constant: empty point set");
  const int m = P.base_scale().exponent();
  auto keys = P.keys();
  auto cells = P.cells();
  FrostmanCertificate cert;
  cert.s = s;
  cert.total = static_cast<std::int64_t>(P.size());
  cert.C = -1.0;
  for (int e = 0; e <= m; ++e) {
    const int shift = 2 * (m - e);
    std::int64_t best = 0, run = 0;
    std::size_t best_at = 0, run_start = 0;
    for (std::size_t n = 0; n < keys.size(); ++n) {
      if (n == 0 || (keys[n] >> shift) != (keys[n - 1] >> shift)) {
        run = 0;
        run_start = n;
      }
      ++run;
      if (run > best) {
        best = run;
        best_at = run_start;
      }
    }
    ScaleEntry entry;
    entry.r = Scale(e);
    entry.max_count = best;
    entry.witness = DyadicSquare(P.base_scale(), cells[best_at]).ancestor(entry.r);
    entry.ratio = frostman_ratio(best, cert.total, entry.r, s);
    if (entry.ratio > cert.C) {
      cert.C = entry.ratio;
      cert.witness_scale = entry.r;
    }
    cert.per_scale.push_back(entry);
  }
  return cert;
}

namespace {

struct BallFrame {
  i128 g;   // side of a base cell in common units
  i128 cx, cy;
  i128 r2;
};

BallFrame make_frame(Scale base, const DyadicPoint& c, const Radius& radius) {
  int G = std::max({base.exponent(), c.scale.exponent(), radius.unit.exponent()});
  BallFrame f;
  f.g = pow2(G - base.exponent());
  f.cx = i128{c.x} * pow2(G - c.scale.exponent());
  f.cy = i128{c.y} * pow2(G - c.scale.exponent());
  f.r2 = i128{radius.squared} * pow2(2 * (G - radius.unit.exponent()));
  return f;
}

i128 gap(i128 lo, i128 hi, i128 c) {
  if (c < lo) return lo - c;
  if (c > hi) return c - hi;
  return 0;
}

// Visits every column i with its inclusive row range [jlo, jhi] of cells
// whose closure meets the closed ball.
template <typename F>
void for_each_ball_column(const BallFrame& f, std::int64_t imin, std::int64_t imax, F&& visit) {
  if (f.r2 < 0) return;
  const i128 s = isqrt(f.r2);
  i128 lo = ceil_div<i128>(f.cx - s, f.g) - 1;
  i128 hi = floor_div<i128>(f.cx + s, f.g);
  lo = std::max<i128>(lo, imin);
  hi = std::min<i128>(hi, imax);
  for (i128 i = lo; i <= hi; ++i) {
    const i128 dx = gap(i * f.g, (i + 1) * f.g, f.cx);
    const i128 rem = f.r2 - dx * dx;
    if (rem < 0) continue;
    const i128 sy = isqrt(rem);
    const i128 jlo = ceil_div<i128>(f.cy - sy, f.g) - 1;
    const i128 jhi = floor_div<i128>(f.cy + sy, f.g);
    visit(static_cast<std::int64_t>(i), static_cast<std::int64_t>(jlo),
          static_cast<std::int64_t>(jhi));
  }
}

} // namespace

std::int64_t ball_count(const PointSet& P, const ColumnIndex& index, const DyadicPoint& center,
                        const Radius& radius) {
  if (P.empty()) return 0;
  BallFrame f = make_frame(P.base_scale(), center, radius);
  std::int64_t total = 0;
  for_each_ball_column(f, index.min_column(), index.max_column(),
                       [&](std::int64_t i, std::int64_t jlo, std::int64_t jhi) {
                         total += index.count(i, jlo, jhi);
                       });
  return total;
}

std::int64_t ball_count(const PointSet& P, const DyadicPoint& center, const Radius& radius) {
  if (P.empty()) return 0;
  ColumnIndex index(P);
  return ball_count(P, index, center, radius);
}

ConcentrationReport check_nonconcentration(const PointSet& P, double u) {
  if (P.empty()) throw PreconditionError("check_nonconcentration: empty point set");
  const Scale delta = P.base_scale();
  const std::int64_t n = delta.inverse();
  const auto total = static_cast<std::int64_t>(P.size());
  ConcentrationReport rep;
  rep.u = u;
  rep.radius = Radius::sqrt_of(total, delta);
  rep.threshold = std::pow(delta.value(), u);
  rep.worst_center = DyadicPoint{0, 0, delta};

  if (total >= 2 * n * n) {
    // radius >= sqrt(2): every grid-centred ball swallows [0,1]^2
    rep.worst_count = total;
  } else {
    ColumnIndex index(P);
    for (std::int64_t x = 0; x <= n; ++x) {
      for (std::int64_t y = 0; y <= n; ++y) {
        DyadicPoint c{x, y, delta};
        std::int64_t k = ball_count(P, index, c, rep.radius);
        if (k > rep.worst_count) {
          rep.worst_count = k;
          rep.worst_center = c;
          if (k == total) break;
        }
      }
      if (rep.worst_count == total) break;
    }
  }
  rep.worst_ratio = static_cast<double>(rep.worst_count) / static_cast<double>(total);
  rep.pass = rep.worst_ratio <= rep.threshold;
  return rep;
}

PointSet gen_cantor(const CantorPattern& pattern, int levels) {
  if (pattern.children.empty()) throw PreconditionError("gen_cantor: empty pattern");
  if (pattern.depth < 1 || levels < 0) throw PreconditionError("gen_cantor: bad depth or levels");
  const std::int64_t b = std::int64_t{1} << pattern.depth;
  for (const Cell& c : pattern.children) {
    if (c.i < 0 || c.j < 0 || c.i >= b || c.j >= b) {
      throw PreconditionError("gen_cantor: child outside the subdivision");
    }
  }
  Scale delta(pattern.depth * levels);
  std::vector<Cell> cells{{0, 0}};
  for (int l = 0; l < levels; ++l) {
    std::vector<Cell> next;
    next.reserve(cells.size() * pattern.children.size());
    for (const Cell& c : cells) {
      for (const Cell& ch : pattern.children) next.push_back({c.i * b + ch.i, c.j * b + ch.j});
    }
    cells = std::move(next);
  }
  return PointSet::collect(delta, std::move(cells));
}

GeneratedSet gen_random_frostman(double s, Scale delta, std::uint64_t seed) {
  if (!(s > 0.0 && s <= 2.0)) throw PreconditionError("gen_random_frostman: s must be in (0, 2]");
  const double branching = std::pow(2.0, s);
  const int whole = static_cast<int>(std::floor(branching));
  const double frac = branching - whole;
  for (int attempt = 0; attempt < kGeneratorRetryBudget; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::vector<Cell> cells{{0, 0}};
    for (int level = 0; level < delta.exponent(); ++level) {
      std::vector<Cell> next;
      for (const Cell& c : cells) {
        int q = whole + (uniform01(rng) < frac ? 1 : 0);
        q = std::clamp(q, 1, 4);
        std::array<int, 4> order{0, 1, 2, 3};
        for (int k = 0; k < q; ++k) {
          auto pick = k + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(4 - k)));
          std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(pick)]);
          int child = order[static_cast<std::size_t>(k)];
          next.push_back({2 * c.i + (child & 1), 2 * c.j + (child >> 1)});
        }
      }
      cells = std::move(next);
    }
    PointSet P(delta, std::move(cells));
    FrostmanCertificate cert = frostman_constant(P, s);
    if (cert.C <= kGeneratorConstantCap) {
      return GeneratedSet{std::move(P), std::move(cert), attempt + 1};
    }
  }
  throw GeneratorExhausted("gen_random_frostman: no set with C <= 16 within the retry budget");
}

PointSet gen_ball(const DyadicPoint& center, const Radius& radius, Scale delta) {
  BallFrame f = make_frame(delta, center, radius);
  if (radius.squared < 0) throw PreconditionError("gen_ball: negative radius");
  std::vector<Cell> cells;
  const std::int64_t n = delta.inverse();
  for_each_ball_column(f, 0, n - 1, [&](std::int64_t i, std::int64_t jlo, std::int64_t jhi) {
    for (std::int64_t j = std::max<std::int64_t>(jlo, 0); j <= std::min(jhi, n - 1); ++j) {
      cells.push_back({i, j});
    }
  });
  return PointSet(delta, std::move(cells));
}

std::vector<std::int64_t> random_cantor_1d(double s, int depth, Rng& rng) {
  if (!(s > 0.0 && s <= 1.0)) throw PreconditionError("random_cantor_1d: s must be in (0, 1]");
  const double p_two = std::pow(2.0, s) - 1.0;
  std::vector<std::int64_t> nodes{0};
  for (int level = 0; level < depth; ++level) {
    std::vector<std::int64_t> next;
    for (std::int64_t x : nodes) {
      if (uniform01(rng) < p_two) {
        next.push_back(2 * x);
        next.push_back(2 * x + 1);
      } else {
        next.push_back(2 * x + static_cast<std::int64_t>(uniform_index(rng, 2)));
      }
    }
    nodes = std::move(next);
  }
  std::sort(nodes.begin(), nodes.end());
  return nodes;
}

std::vector<std::int64_t> even_subsample(const std::vector<std::int64_t>& values,
                                         std::int64_t count) {
  const auto n = static_cast<std::int64_t>(values.size());
  if (count >= n) return values;
  std::vector<std::int64_t> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    out.push_back(values[static_cast<std::size_t>(k * n / count)]);
  }
  return out;
}

std::vector<std::int64_t> gen_slope_set(double s, Scale delta, std::int64_t count,
                                        std::uint64_t seed) {
  const int m = delta.exponent();
  const std::int64_t half = delta.inverse();
  if (count < 1 || count > 2 * half) {
    throw PreconditionError("gen_slope_set: count must be in [1, 2/delta]");
  }
  constexpr int kBudget = 64;
  for (int attempt = 0; attempt < kBudget; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt) + 1000));
    std::vector<std::int64_t> leaves = random_cantor_1d(s, m + 1, rng);
    if (static_cast<std::int64_t>(leaves.size()) < count) continue;
    for (auto& a : leaves) a -= half;
    return even_subsample(leaves, count);
  }
  throw GeneratorExhausted("gen_slope_set: random sets too small for the requested count " +
                           std::to_string(count));
}

std::vector<std::int64_t> cantor_slope_set(Scale delta) {
  const int m = delta.exponent();
  std::vector<std::int64_t> nodes{0};
  int level = 0;
  for (; level + 2 <= m; level += 2) {
    std::vector<std::int64_t> next;
    for (auto x : nodes) {
      next.push_back(4 * x);
      next.push_back(4 * x + 3);
    }
    nodes = std::move(next);
  }
  if (level < m) {
    std::vector<std::int64_t> next;
    for (auto x : nodes) {
      next.push_back(2 * x);
      next.push_back(2 * x + 1);
    }
    nodes = std::move(next);
  }
  return nodes;
}

PointSet as_line_set(const std::vector<std::int64_t>& indices, Scale delta) {
  std::vector<Cell> cells;
  cells.reserve(indices.size());
  for (auto a : indices) cells.push_back({a, 0});
  return PointSet::collect(delta, std::move(cells), Bounds::unbounded);
}

} // namespace incgeo
