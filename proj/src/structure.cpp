#include <algorithm>
#include <cmath>
#include <map>

#include "incgeo/error.hpp"
#include "incgeo/multiscale.hpp"

namespace incgeo {

namespace {

constexpr double kSlack = 1e-12;

struct BlockData {
  double alpha = 0.0;
  double log_inv_lambda = 0.0;
};

// ln(1/lambda) and alpha of the block [j0, j1) of a uniform set.
BlockData block_data(const ScaleChain& chain, const std::vector<std::int64_t>& K, int j0, int j1) {
  BlockData b;
  b.log_inv_lambda = (chain.at(j1).exponent() - chain.at(j0).exponent()) * std::log(2.0);
  double mass = 0.0;
  for (int j = j0; j < j1; ++j) mass += std::log(static_cast<double>(K[static_cast<std::size_t>(j)]));
  b.alpha = mass / b.log_inv_lambda;
  return b;
}

// The blocks' fine-scale ancestors of P inside each coarse square, rescaled to [0,1)^2.
std::vector<PointSet> local_pieces(const PointSet& P, Scale coarse, Scale fine) {
  std::vector<Cell> anc;
  const int up = P.base_scale().exponent() - fine.exponent();
  for (const Cell& c : P.cells()) anc.push_back({c.i >> up, c.j >> up});
  PointSet A = PointSet::collect(fine, std::move(anc));
  std::vector<PointSet> out;
  for (const DyadicSquare& Q : dyadic_cubes(A, coarse)) out.push_back(rescale(restrict_to(A, Q), Q));
  return out;
}

// max over pieces, grid centers and dyadic radii r in [lambda, 1] of count / (r^alpha |piece|).
double worst_local_ratio(const PointSet& P, Scale coarse, Scale fine, double alpha) {
  const int d = fine.exponent() - coarse.exponent();
  const Scale unit(d);
  const std::int64_t n = unit.inverse();
  double worst = 0.0;
  for (const PointSet& L : local_pieces(P, coarse, fine)) {
    ColumnIndex index(L);
    const auto total = static_cast<double>(L.size());
    for (int i = 0; i <= d; ++i) {
      const Radius radius = Radius::of(std::int64_t{1} << (d - i), unit);
      const double denom = std::pow(std::ldexp(1.0, -i), alpha) * total;
      std::int64_t best = 0;
      for (std::int64_t x = 0; x <= n; ++x)
        for (std::int64_t y = 0; y <= n; ++y)
          best = std::max(best, ball_count(L, index, DyadicPoint{x, y, unit}, radius));
      worst = std::max(worst, static_cast<double>(best) / denom);
    }
  }
  return worst;
}

std::vector<double> grid_or(const std::optional<double>& fixed, std::vector<double> grid) {
  if (fixed) return {*fixed};
  return grid;
}

} // namespace

MultiscaleDecomposition decompose_frostman_pieces(const UniformSet& U, double epsilon, double u,
                                                  const DecomposeOptions& options) {
  if (!U.chain.constant_ratio()) throw PreconditionError("decompose: chain ratio is not constant");
  if (U.chain.finest() != U.P.base_scale()) throw InvalidScale("decompose: chain does not end at delta");
  auto K = is_uniform(U.P, U.chain);
  if (!K) throw PreconditionError("decompose: input set is not uniform along its chain");
  const int N = U.chain.levels();
  if (N > 12) throw PreconditionError("decompose: at most 12 levels");
  ConcentrationReport nc = check_nonconcentration(U.P, u);
  if (!nc.pass) {
    throw PreconditionError("decompose: set fails single-scale non-concentration at u = " +
                            std::to_string(u) + " (worst ratio " + std::to_string(nc.worst_ratio) + ")");
  }

  MultiscaleDecomposition out;
  out.epsilon = epsilon;
  out.u = u;
  out.sampling_note =
      "item (i) checked at grid centers of each block's fine scale and dyadic radii only";
  const double log_inv_delta = U.P.base_scale().exponent() * std::log(2.0);
  const double log_P = std::log(static_cast<double>(U.P.size()));
  const auto taus = grid_or(options.tau, {epsilon, epsilon / 2, epsilon / 4, epsilon / 8});
  const auto xis = grid_or(options.xi, {0.5, 0.25, 0.125, 0.0625, 0.03125});
  std::map<std::pair<int, int>, double> local_cache;

  // The partition merging consecutive levels with near-equal alpha goes first,
  // then all cut masks by number of cuts, so coarser partitions come first.
  const int cuts = N - 1;
  std::uint32_t natural = 0;
  for (int c = 0; c < cuts; ++c) {
    const double a0 = block_data(U.chain, *K, c, c + 1).alpha;
    const double a1 = block_data(U.chain, *K, c + 1, c + 2).alpha;
    if (std::abs(a1 - a0) > epsilon) natural |= std::uint32_t{1} << c;
  }
  std::vector<std::uint32_t> masks{natural};
  for (std::uint32_t mask = 0; mask < (std::uint32_t{1} << cuts); ++mask) {
    if (mask != natural) masks.push_back(mask);
  }
  std::stable_sort(masks.begin() + 1, masks.end(), [](std::uint32_t a, std::uint32_t b) {
    return __builtin_popcount(a) < __builtin_popcount(b);
  });

  for (std::uint32_t mask : masks) {
    ++out.partitions_tried;
    std::vector<int> bounds{0};
    for (int c = 0; c < cuts; ++c)
      if (mask & (std::uint32_t{1} << c)) bounds.push_back(c + 1);
    bounds.push_back(N);

    std::vector<BlockData> data;
    for (std::size_t b = 0; b + 1 < bounds.size(); ++b)
      data.push_back(block_data(U.chain, *K, bounds[b], bounds[b + 1]));

    for (double tau : taus) {
      for (double xi : xis) {
        double mass = 0.0, good = 0.0;
        for (const BlockData& b : data) {
          const bool is_long = b.log_inv_lambda >= tau * log_inv_delta - kSlack;
          if (!is_long) continue;
          mass += b.alpha * b.log_inv_lambda;
          if (b.alpha >= xi - kSlack && b.alpha <= 2.0 - xi + kSlack) good += b.log_inv_lambda;
        }
        const double mass_rhs = log_P - 2.0 * epsilon * log_inv_delta;
        const double good_rhs = xi * log_inv_delta;
        if (mass < mass_rhs - kSlack || good < good_rhs - kSlack) continue;

        bool local_ok = true;
        std::vector<double> local(data.size());
        for (std::size_t b = 0; b < data.size() && local_ok; ++b) {
          auto key = std::make_pair(bounds[b], bounds[b + 1]);
          auto it = local_cache.find(key);
          if (it == local_cache.end()) {
            it = local_cache
                     .emplace(key, worst_local_ratio(U.P, U.chain.at(bounds[b]),
                                                     U.chain.at(bounds[b + 1]), data[b].alpha))
                     .first;
          }
          local[b] = it->second;
          local_ok = local[b] <= std::exp(epsilon * data[b].log_inv_lambda) + kSlack;
        }
        if (!local_ok) continue;

        out.found = true;
        out.tau = tau;
        out.xi = xi;
        out.mass_lhs = mass;
        out.mass_rhs = mass_rhs;
        out.good_lhs = good;
        out.good_rhs = good_rhs;
        for (std::size_t b = 0; b < data.size(); ++b) {
          FrostmanBlock blk;
          blk.first = bounds[b];
          blk.last = bounds[b + 1];
          blk.alpha = data[b].alpha;
          blk.log_inv_lambda = data[b].log_inv_lambda;
          blk.worst_local_ratio = local[b];
          blk.long_block = data[b].log_inv_lambda >= tau * log_inv_delta - kSlack;
          blk.good = blk.long_block && blk.alpha >= xi - kSlack && blk.alpha <= 2.0 - xi + kSlack;
          if (blk.long_block) out.normal.push_back(static_cast<int>(b));
          if (blk.good) out.good_blocks.push_back(static_cast<int>(b));
          out.blocks.push_back(blk);
        }
        return out;
      }
    }
  }
  out.reason = "no partition of the " + std::to_string(N) +
               "-level chain satisfies items (i)-(iii) at epsilon = " + std::to_string(epsilon) +
               " on the declared (tau, xi) grid; existence is only guaranteed for long chains";
  return out;
}

bool verify_decomposition(const UniformSet& U, const MultiscaleDecomposition& D) {
  if (!D.found) return false;
  const double log_inv_delta = U.P.base_scale().exponent() * std::log(2.0);
  auto profile = branching_profile(U.P, U.chain);
  double mass = 0.0, good = 0.0;
  int expect_first = 0;
  for (const FrostmanBlock& blk : D.blocks) {
    if (blk.first != expect_first || blk.last <= blk.first) return false;
    expect_first = blk.last;
    const Scale coarse = U.chain.at(blk.first), fine = U.chain.at(blk.last);
    const int d = fine.exponent() - coarse.exponent();
    const double lil = d * std::log(2.0);
    double logK = 0.0;
    for (int j = blk.first; j < blk.last; ++j) logK += std::log(static_cast<double>(profile[static_cast<std::size_t>(j)].front()));
    const double alpha = logK / lil;
    const bool is_long = lil >= D.tau * log_inv_delta - kSlack;
    if (is_long) {
      mass += alpha * lil;
      if (alpha >= D.xi - kSlack && alpha <= 2.0 - D.xi + kSlack) good += lil;
    }
    // item (i) by direct distance tests on every square of every piece
    const i128 side = 1;
    const std::int64_t n = std::int64_t{1} << d;
    for (const PointSet& L : local_pieces(U.P, coarse, fine)) {
      const double total = static_cast<double>(L.size());
      for (int i = 0; i <= d; ++i) {
        const i128 R = i128{1} << (d - i);
        double allowed = std::exp(D.epsilon * lil) * std::pow(std::ldexp(1.0, -i), alpha) * total;
        for (std::int64_t x = 0; x <= n; ++x) {
          for (std::int64_t y = 0; y <= n; ++y) {
            std::int64_t count = 0;
            for (const Cell& c : L.cells()) {
              i128 dx = x < c.i ? c.i - x : (x > c.i + side ? x - c.i - side : 0);
              i128 dy = y < c.j ? c.j - y : (y > c.j + side ? y - c.j - side : 0);
              if (dx * dx + dy * dy <= R * R) ++count;
            }
            if (static_cast<double>(count) > allowed + kSlack) return false;
          }
        }
      }
    }
  }
  if (expect_first != U.chain.levels()) return false;
  const double mass_rhs = std::log(static_cast<double>(U.P.size())) - 2.0 * D.epsilon * log_inv_delta;
  return mass >= mass_rhs - 1e-9 && good >= D.xi * log_inv_delta - 1e-9;
}

std::string to_string(StructureClass c) {
  switch (c) {
    case StructureClass::gain_large_tube: return "GAIN-LARGE-TUBE";
    case StructureClass::gain_small_tube: return "GAIN-SMALL-TUBE";
    case StructureClass::regular: return "REGULAR";
  }
  return "REGULAR";
}

ClassificationReport classify_structure(const NiceConfiguration& config, double eta,
                                        const ClassifyOptions& options) {
  if (!(eta > 0.0 && eta <= 1.0)) throw PreconditionError("classify: eta must lie in (0, 1]");
  const Scale delta = config.delta();
  const int m = delta.exponent();
  if (m < 1) throw PreconditionError("classify: delta must be below 1");
  ClassificationReport rep;
  rep.eta = eta;
  rep.N = std::min({static_cast<int>(std::ceil(1.0 / eta)), 8, m});
  rep.chain = ScaleChain::even(delta, rep.N);
  rep.points_initial = static_cast<std::int64_t>(config.points().size());
  const double log_inv_delta = m * std::log(2.0);
  rep.t = options.t.value_or(std::log(static_cast<double>(rep.points_initial)) / log_inv_delta);

  UniformSet U = uniformize(config.points(), rep.chain);
  NiceConfiguration uniform_config = restrict_config(config, U.P);
  MultiscaleOutcome ms;
  try {
    ms = multiscale_refine(uniform_config, rep.chain, RefineOptions{options.allowance, options.strict});
  } catch (const VerificationError& e) {
    throw VerificationError(e.property(), e.measured(), e.threshold(),
                            std::string("classify: multiscale refinement stage: ") + e.what());
  }
  rep.pipeline_verified = ms.verified;
  rep.pipeline_diagnostic = ms.diagnostic;

  const NiceConfiguration& fin = ms.final_config;
  const PointSet& P = fin.points();
  rep.points_final = static_cast<std::int64_t>(P.size());
  rep.tubes_final = static_cast<std::int64_t>(fin.tubes().size());
  rep.M = fin.M();
  ColumnIndex index(P);

  // large-tube test at every chain scale
  rep.large_tube_threshold = std::pow(2.0, 2.0 * eta * m);
  std::vector<std::vector<DyadicSquare>> cubes;
  std::vector<std::vector<std::int64_t>> pops;
  for (int j = 1; j <= rep.chain.levels(); ++j) {
    cubes.push_back(dyadic_cubes(P, rep.chain.at(j)));
    pops.push_back(cube_populations(P, rep.chain.at(j)));
  }
  std::vector<std::int64_t> tube_counts(fin.tubes().size());
  for (std::size_t t = 0; t < fin.tubes().size(); ++t) {
    auto on = tube_points(fin.tubes()[t], P, index);
    tube_counts[t] = static_cast<std::int64_t>(on.size());
    for (int j = 1; j <= rep.chain.levels(); ++j) {
      const Scale r = rep.chain.at(j);
      const auto& cj = cubes[static_cast<std::size_t>(j - 1)];
      const auto& pj = pops[static_cast<std::size_t>(j - 1)];
      std::map<std::uint64_t, std::int64_t> hits;
      for (std::size_t k : on) ++hits[morton_key(P.square(k).ancestor(r).cell())];
      for (const auto& [key, count] : hits) {
        auto it = std::lower_bound(cj.begin(), cj.end(), key, [](const DyadicSquare& q, std::uint64_t v) {
          return morton_key(q.cell()) < v;
        });
        const double pop = static_cast<double>(pj[static_cast<std::size_t>(it - cj.begin())]);
        rep.large_tube_max_ratio = std::max(rep.large_tube_max_ratio, count / std::sqrt(pop));
      }
    }
  }

  // small-tube test
  rep.light_threshold = std::pow(2.0, -2.0 * eta * m) * std::sqrt(static_cast<double>(P.size()));
  std::int64_t light_points = 0;
  for (std::size_t k = 0; k < P.size(); ++k) {
    std::int64_t light = 0;
    for (const TubeParam& T : fin.tubes_at(k).params()) {
      if (static_cast<double>(tube_counts[fin.tube_index(T)]) <= rep.light_threshold) ++light;
    }
    if (2 * light >= static_cast<std::int64_t>(fin.tubes_at(k).size())) ++light_points;
  }
  rep.light_point_fraction = P.empty() ? 0.0 : static_cast<double>(light_points) / static_cast<double>(P.size());

  // regular case: slices as (delta, t/2, delta^{-7 eta})-sets
  const double slice_cap = std::pow(2.0, 7.0 * eta * m);
  std::int64_t certified = 0;
  for (const TubeParam& T : fin.tubes()) {
    auto on = tube_points(T, P, index);
    std::vector<Cell> cells;
    for (std::size_t k : on) cells.push_back(P.cells()[k]);
    if (cells.empty()) continue;
    PointSet slice(delta, std::move(cells));
    if (frostman_constant(slice, rep.t / 2.0).C <= slice_cap) ++certified;
  }
  rep.certified_slice_fraction =
      fin.tubes().empty() ? 0.0 : static_cast<double>(certified) / static_cast<double>(fin.tubes().size());

  if (rep.large_tube_max_ratio >= rep.large_tube_threshold) {
    rep.classification = StructureClass::gain_large_tube;
  } else if (2.0 * rep.light_point_fraction >= 1.0) {
    rep.classification = StructureClass::gain_small_tube;
  } else {
    rep.classification = StructureClass::regular;
  }
  rep.observed_ratio = static_cast<double>(rep.tubes_final) /
                       (static_cast<double>(rep.M) * std::pow(2.0, (rep.t / 2.0 + eta) * m));
  return rep;
}

} // namespace incgeo
