#pragma once

// Brute-force reference implementations. Nothing here shares code with the
// library beyond the basic value types.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "incgeo/dyadic.hpp"
#include "incgeo/pointsets.hpp"
#include "incgeo/tubes.hpp"

namespace oracle {

using incgeo::Cell;
using incgeo::PointSet;
using incgeo::Scale;
using incgeo::TubeParam;

inline std::int64_t fdiv(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline std::int64_t cdiv(std::int64_t a, std::int64_t b) { return -fdiv(-a, b); }

/// Ancestors at scale 2^-e found by dividing the indices.
inline std::int64_t covering(const PointSet& P, int e) {
  const int k = P.base_scale().exponent() - e;
  std::set<std::pair<std::int64_t, std::int64_t>> cover;
  for (const Cell& c : P.cells()) cover.insert({fdiv(c.i, std::int64_t{1} << k), fdiv(c.j, std::int64_t{1} << k)});
  return static_cast<std::int64_t>(cover.size());
}

/// The Frostman constant straight from the definition: every scale, every
/// dyadic square of [0,1)^2 at that scale.
inline double frostman(const PointSet& P, double s) {
  const int m = P.base_scale().exponent();
  const auto total = static_cast<std::int64_t>(P.size());
  double best = 0.0;
  for (int e = 0; e <= m; ++e) {
    const std::int64_t side = std::int64_t{1} << e;
    const std::int64_t w = std::int64_t{1} << (m - e);
    for (std::int64_t qi = 0; qi < side; ++qi) {
      for (std::int64_t qj = 0; qj < side; ++qj) {
        std::int64_t count = 0;
        for (const Cell& c : P.cells()) {
          if (c.i >= qi * w && c.i < (qi + 1) * w && c.j >= qj * w && c.j < (qj + 1) * w) ++count;
        }
        best = std::max(best, incgeo::frostman_ratio(count, total, Scale(e), s));
      }
    }
  }
  return best;
}

/// Squares of P whose closure meets the closed ball of radius^2 = r2 (all in
/// units of the base scale, center doubled: (cx2/2, cy2/2)).
inline std::int64_t ball(const PointSet& P, std::int64_t cx2, std::int64_t cy2, std::int64_t r2) {
  std::int64_t count = 0;
  for (const Cell& c : P.cells()) {
    auto gap = [](std::int64_t lo, std::int64_t hi, std::int64_t v) -> std::int64_t {
      return v < lo ? lo - v : (v > hi ? v - hi : 0);
    };
    const std::int64_t dx = gap(2 * c.i, 2 * c.i + 2, cx2);
    const std::int64_t dy = gap(2 * c.j, 2 * c.j + 2, cy2);
    if (dx * dx + dy * dy <= 4 * r2) ++count;
  }
  return count;
}

/// Projection count by merging the open image intervals of all squares,
/// in units of delta^2, and counting the delta-cells the union meets.
inline std::int64_t projection(const PointSet& P, std::int64_t d) {
  const int m = P.base_scale().exponent();
  const std::int64_t n = std::int64_t{1} << m;
  std::vector<std::pair<std::int64_t, std::int64_t>> iv;
  for (const Cell& c : P.cells()) {
    // corners of the square under x - (d/n) y, scaled by n^2
    std::int64_t lo = INT64_MAX, hi = INT64_MIN;
    for (int dx = 0; dx <= 1; ++dx) {
      for (int dy = 0; dy <= 1; ++dy) {
        const std::int64_t v = (c.i + dx) * n - d * (c.j + dy);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    iv.push_back({lo, hi});
  }
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<std::int64_t, std::int64_t>> merged;
  for (auto p : iv) {
    if (!merged.empty() && p.first < merged.back().second) {
      merged.back().second = std::max(merged.back().second, p.second);
    } else {
      merged.push_back(p);
    }
  }
  std::set<std::int64_t> cells;
  for (auto [lo, hi] : merged) {
    for (std::int64_t k = fdiv(lo, n); k * n < hi; ++k) {
      if ((k + 1) * n > lo) cells.insert(k);
    }
  }
  return static_cast<std::int64_t>(cells.size());
}

/// Does some sampled line of the tube pass strictly through the square?
/// Samples S^3 interior parameters; y is compared in units of 2^-(3m) / S^3.
inline bool tube_hits_sampled(const TubeParam& T, std::int64_t i, std::int64_t j, int S,
                              std::int64_t slack_num = 0, std::int64_t slack_den = 1) {
  const std::int64_t n = T.scale.inverse();
  // a = (T.a + (u + 1/2)/S) / n, x = (i + (v + 1/2)/S) / n, b = (T.b + (w + 1/2)/S) / n
  // y n^2 (2S)^2 = (2 S T.a + 2u + 1)(2 S i + 2v + 1) + n (2S) (2 S T.b + 2w + 1)
  const std::int64_t S2 = 2 * S;
  const std::int64_t unit = n * S2 * S2;  // y = 1/n corresponds to n (2S)^2
  const std::int64_t lo = j * unit - slack_num * unit / slack_den;
  const std::int64_t hi = (j + 1) * unit + slack_num * unit / slack_den;
  for (int u = 0; u < S; ++u) {
    for (int v = 0; v < S; ++v) {
      const std::int64_t ax = (S2 * T.a + 2 * u + 1) * (S2 * i + 2 * v + 1);
      for (int w = 0; w < S; ++w) {
        const std::int64_t y = ax + n * S2 * (S2 * T.b + 2 * w + 1);
        if (y >= lo && y < hi) return true;
      }
    }
  }
  return false;
}

/// Sumset cells by listing every sum of interval endpoints.
inline std::vector<std::int64_t> sumset(const std::vector<std::int64_t>& A, const std::vector<std::int64_t>& B) {
  std::set<std::int64_t> out;
  for (auto a : A) {
    for (auto b : B) {
      // [a + b, a + b + 2) meets the cells a + b and a + b + 1
      for (std::int64_t c = a + b; c < a + b + 2; ++c) out.insert(c);
    }
  }
  return {out.begin(), out.end()};
}

/// Product cells: [ab, (a+1)(b+1)) / n in units of delta.
inline std::vector<std::int64_t> productset(const std::vector<std::int64_t>& A,
                                            const std::vector<std::int64_t>& B, std::int64_t n) {
  std::set<std::int64_t> out;
  for (auto a : A) {
    for (auto b : B) {
      for (std::int64_t c = 0; c * n < (a + 1) * (b + 1); ++c) {
        if ((c + 1) * n > a * b) out.insert(c);
      }
    }
  }
  return {out.begin(), out.end()};
}

/// Children counts of every occupied square at each chain level.
inline bool uniform(const PointSet& P, const std::vector<int>& chain_exps) {
  const int m = P.base_scale().exponent();
  for (std::size_t j = 1; j < chain_exps.size(); ++j) {
    std::map<std::pair<std::int64_t, std::int64_t>, std::set<std::pair<std::int64_t, std::int64_t>>> kids;
    const std::int64_t wc = std::int64_t{1} << (m - chain_exps[j - 1]);
    const std::int64_t wf = std::int64_t{1} << (m - chain_exps[j]);
    for (const Cell& c : P.cells()) kids[{c.i / wc, c.j / wc}].insert({c.i / wf, c.j / wf});
    std::size_t K = kids.begin()->second.size();
    for (auto& [q, ch] : kids) {
      if (ch.size() != K) return false;
    }
  }
  return true;
}

} // namespace oracle
