#include "incgeo/incidence.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "incgeo/error.hpp"

namespace incgeo {

namespace {

// Certificates are recomputed from the same formula, so only decimal
// round-trips of C need the slack.
constexpr double kCertificateSlack = 1e-12;

} // namespace

std::vector<std::string> NiceConfiguration::problems(const PointSet& P,
                                                     const std::vector<TubeFamily>& families,
                                                     double s, double C, std::int64_t M) {
  std::vector<std::string> out;
  if (M < 1) out.push_back("M must be positive");
  if (!(s >= 0.0 && s <= 2.0)) out.push_back("s must lie in [0, 2]");
  if (families.size() != P.size()) {
    out.push_back("expected " + std::to_string(P.size()) + " tube families, got " +
                  std::to_string(families.size()));
    return out;
  }
  for (std::size_t k = 0; k < P.size(); ++k) {
    const TubeFamily& F = families[k];
    const DyadicSquare p = P.square(k);
    const std::string where =
        "point (" + std::to_string(p.i()) + ", " + std::to_string(p.j()) + "): ";
    if (!F.empty() && F.scale() != P.base_scale()) {
      out.push_back(where + "tube scale differs from the point scale");
      continue;
    }
    const auto n = static_cast<std::int64_t>(F.size());
    if (n < M || n >= 2 * M) {
      out.push_back(where + "|T(p)| = " + std::to_string(n) + " outside [M, 2M)");
    }
    for (const TubeParam& T : F.params()) {
      if (!tube_meets_square(T, p)) {
        out.push_back(where + "tube (" + std::to_string(T.a) + ", " + std::to_string(T.b) +
                      ") misses the point");
      }
    }
    if (F.empty()) continue;
    try {
      double c = F.certificate(s).C;
      if (c > C * (1.0 + kCertificateSlack)) {
        out.push_back(where + "tube family has Frostman constant " + std::to_string(c) +
                      " > C = " + std::to_string(C));
      }
    } catch (const PreconditionError& e) {
      out.push_back(where + e.what());
    }
  }
  return out;
}

NiceConfiguration::NiceConfiguration(PointSet P, std::vector<TubeFamily> families, double s,
                                     double C, std::int64_t M)
    : P_(std::move(P)), families_(std::move(families)), s_(s), C_(C), M_(M) {
  auto issues = problems(P_, families_, s_, C_, M_);
  if (!issues.empty()) {
    std::string msg = "invalid nice configuration: " + issues.front();
    if (issues.size() > 1) msg += " (and " + std::to_string(issues.size() - 1) + " more)";
    throw InvalidConfiguration(msg);
  }
  std::vector<std::pair<TubeParam, std::size_t>> incidences;
  for (std::size_t k = 0; k < families_.size(); ++k) {
    for (const TubeParam& T : families_[k].params()) incidences.emplace_back(T, k);
  }
  std::sort(incidences.begin(), incidences.end());
  for (std::size_t n = 0; n < incidences.size(); ++n) {
    if (n == 0 || !(incidences[n].first == incidences[n - 1].first)) {
      tubes_.push_back(incidences[n].first);
      members_.emplace_back();
    }
    members_.back().push_back(incidences[n].second);
  }
}

std::size_t NiceConfiguration::tube_index(const TubeParam& T) const {
  auto it = std::lower_bound(tubes_.begin(), tubes_.end(), T);
  if (it == tubes_.end() || !(*it == T)) throw PreconditionError("tube not in the configuration");
  return static_cast<std::size_t>(it - tubes_.begin());
}

NiceConfiguration build_nice_config(const PointSet& P,
                                    const std::vector<std::vector<std::int64_t>>& slope_plan,
                                    std::int64_t M, double s, std::optional<double> C_cap) {
  if (slope_plan.size() != P.size()) {
    throw PreconditionError("build_nice_config: one slope set per point required");
  }
  if (M < 1) throw PreconditionError("build_nice_config: M must be positive");
  const Scale delta = P.base_scale();
  std::vector<TubeFamily> families;
  families.reserve(P.size());
  double C = 0.0;
  for (std::size_t k = 0; k < P.size(); ++k) {
    std::vector<std::int64_t> slopes = slope_plan[k];
    std::sort(slopes.begin(), slopes.end());
    slopes.erase(std::unique(slopes.begin(), slopes.end()), slopes.end());
    const auto n = static_cast<std::int64_t>(slopes.size());
    if (n < M) {
      throw PreconditionError("build_nice_config: slope set of size " + std::to_string(n) +
                              " is smaller than M = " + std::to_string(M));
    }
    if (n >= 2 * M) slopes = even_subsample(slopes, M);
    families.push_back(tubes_through(P.square(k), slopes, delta));
    C = std::max(C, families.back().certificate(s).C);
  }
  if (C_cap && C > *C_cap) {
    throw InvalidConfiguration("build_nice_config: certified C = " + std::to_string(C) +
                               " exceeds the cap " + std::to_string(*C_cap));
  }
  return NiceConfiguration(P, std::move(families), s, C, M);
}

NiceConfiguration build_product_config(const PointSet& P, const std::vector<std::int64_t>& slopes,
                                       double s, std::optional<double> C_cap) {
  std::vector<std::vector<std::int64_t>> plan(P.size(), slopes);
  return build_nice_config(P, plan, static_cast<std::int64_t>(slopes.size()), s, C_cap);
}

IncidenceSummary summarize(const NiceConfiguration& config) {
  IncidenceSummary out;
  for (const TubeFamily& F : config.families()) {
    out.total_incidences += static_cast<std::int64_t>(F.size());
  }
  const auto& tubes = config.tubes();
  out.union_size = static_cast<std::int64_t>(tubes.size());
  out.membership.resize(tubes.size());
  out.geometric.resize(tubes.size());
  ColumnIndex index(config.points());
  for (std::size_t t = 0; t < tubes.size(); ++t) {
    out.membership[t] = static_cast<std::int64_t>(config.members()[t].size());
    out.geometric[t] = tube_point_count(tubes[t], config.points(), index);
    out.membership_sum += out.membership[t];
    out.K_membership = std::max(out.K_membership, out.membership[t]);
    if (out.geometric[t] > out.K_geometric) {
      out.K_geometric = out.geometric[t];
      out.heaviest_tube = t;
    }
  }
  return out;
}

SmallTubeReport check_small_tube(const NiceConfiguration& config) {
  IncidenceSummary sum = summarize(config);
  SmallTubeReport rep;
  rep.lhs = sum.union_size;
  rep.K_membership = sum.K_membership;
  rep.K_geometric = sum.K_geometric;
  const auto n = static_cast<std::int64_t>(config.points().size());
  if (rep.K_membership > 0) {
    rep.rhs_membership = static_cast<double>(n) * static_cast<double>(config.M()) /
                         static_cast<double>(rep.K_membership);
    rep.pass = rep.lhs * rep.K_membership >= n * config.M();
  }
  if (rep.K_geometric > 0) {
    rep.rhs_geometric = static_cast<double>(n) * static_cast<double>(config.M()) /
                        static_cast<double>(rep.K_geometric);
    rep.pass_geometric = rep.lhs * rep.K_geometric >= n * config.M();
  }
  return rep;
}

namespace {

double inverse_power(double C, double s) { return s > 0.0 ? std::pow(C, -1.0 / s) : 0.0; }

} // namespace

LargeTubeReport check_large_tube(const NiceConfiguration& config, const TubeParam& T, double c) {
  LargeTubeReport rep;
  rep.tube = T;
  rep.c = c;
  rep.lhs = static_cast<std::int64_t>(config.tubes().size());
  const PointSet& P = config.points();
  ColumnIndex index(P);
  std::vector<std::size_t> on_tube = tube_points(T, P, index);
  rep.tube_count = static_cast<std::int64_t>(on_tube.size());
  const double scale = inverse_power(config.C(), config.s());
  const double base = scale * static_cast<double>(rep.tube_count) * static_cast<double>(config.M());
  rep.rhs = c * base;
  rep.raw_ratio = base > 0.0 ? static_cast<double>(rep.lhs) / base : 0.0;
  rep.pass = static_cast<double>(rep.lhs) >= rep.rhs;

  rep.angle_threshold = kTransversalFraction * scale;
  const double delta = config.delta().value();
  std::map<TubeParam, std::int64_t> hits;
  rep.min_transversal = on_tube.empty() ? 0 : config.M() * 2;
  for (std::size_t k : on_tube) {
    std::int64_t kept = 0;
    for (const TubeParam& U : config.tubes_at(k).params()) {
      const double angle = static_cast<double>(std::llabs(U.a - T.a)) * delta;
      if (U.chart == T.chart && angle < rep.angle_threshold) continue;
      ++kept;
      ++hits[U];
    }
    rep.transversal_sum += kept;
    rep.min_transversal = std::min(rep.min_transversal, kept);
  }
  rep.transversal_half = 2 * rep.min_transversal >= config.M();
  for (const auto& [U, count] : hits) rep.overlap = std::max(rep.overlap, count);
  if (rep.overlap > 0) {
    rep.overlap_bound =
        static_cast<double>(rep.transversal_sum) / static_cast<double>(rep.overlap);
  }
  return rep;
}

UnionBoundReport check_union_bound(const NiceConfiguration& config, double c) {
  IncidenceSummary sum = summarize(config);
  UnionBoundReport rep;
  rep.c = c;
  rep.lhs = sum.union_size;
  rep.K_geometric = sum.K_geometric;
  const auto n = static_cast<std::int64_t>(config.points().size());
  const double base = inverse_power(config.C(), config.s()) * std::sqrt(static_cast<double>(n)) *
                      static_cast<double>(config.M());
  rep.rhs = c * base;
  rep.raw_ratio = base > 0.0 ? static_cast<double>(rep.lhs) / base : 0.0;
  if (sum.K_geometric * sum.K_geometric >= n && !config.tubes().empty()) {
    rep.branch = "large-tube";
    rep.witness = config.tubes()[sum.heaviest_tube];
  } else {
    rep.branch = "small-tube";
  }
  rep.pass = static_cast<double>(rep.lhs) >= rep.rhs;
  return rep;
}

namespace {

struct QuotaTree {
  std::span<const std::uint64_t> keys;
  int m = 0;
  double s = 0.0;
  std::int64_t budget = 0;
  std::vector<std::size_t> selected;

  std::int64_t quota(int e) const {
    double q = std::floor(static_cast<double>(budget) * std::pow(2.0, -e * s) + 1e-9);
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(q));
  }

  // Children of the level-e run [lo, hi) as level-(e+1) runs.
  std::vector<std::pair<std::size_t, std::size_t>> split(std::size_t lo, std::size_t hi,
                                                         int e) const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const int shift = 2 * (m - e - 1);
    for (std::size_t n = lo; n < hi; ++n) {
      if (n == lo || (keys[n] >> shift) != (keys[n - 1] >> shift)) out.emplace_back(n, n);
      out.back().second = n + 1;
    }
    return out;
  }

  std::int64_t capacity(std::size_t lo, std::size_t hi, int e) const {
    if (e == m) return 1;
    std::int64_t total = 0;
    for (auto [a, b] : split(lo, hi, e)) total += capacity(a, b, e + 1);
    return std::min(quota(e), total);
  }

  void assign(std::size_t lo, std::size_t hi, int e, std::int64_t take) {
    if (take <= 0) return;
    if (e == m) {
      selected.push_back(lo);
      return;
    }
    auto parts = split(lo, hi, e);
    std::vector<std::int64_t> cap, give(parts.size(), 0);
    for (auto [a, b] : parts) cap.push_back(capacity(a, b, e + 1));
    // round-robin water filling in Z-order
    while (take > 0) {
      bool progressed = false;
      for (std::size_t c = 0; c < parts.size() && take > 0; ++c) {
        if (give[c] < cap[c]) {
          ++give[c];
          --take;
          progressed = true;
        }
      }
      if (!progressed) break;
    }
    for (std::size_t c = 0; c < parts.size(); ++c) {
      assign(parts[c].first, parts[c].second, e + 1, give[c]);
    }
  }
};

} // namespace

ExtractionResult extract_frostman_tubes(const TubeFamily& family, double target_s) {
  if (family.empty()) throw PreconditionError("extract_frostman_tubes: empty family");
  if (target_s > 2.0 || target_s < 0.0) {
    throw PreconditionError("extract_frostman_tubes: target exponent must lie in [0, 2]");
  }
  const PointSet params = family.parameter_set();
  const auto n = static_cast<std::int64_t>(params.size());
  const int m = family.scale().exponent();
  const Chart chart = family.params().front().chart;

  std::optional<ExtractionResult> best;
  std::int64_t last_budget = -1;
  for (int k = 0;; ++k) {
    auto budget = static_cast<std::int64_t>(std::ceil(static_cast<double>(n) * std::pow(2.0, -k / 2.0)));
    if (budget < 1) break;
    if (budget == last_budget) {
      if (budget == 1) break;
      continue;
    }
    last_budget = budget;

    QuotaTree tree{params.keys(), m, target_s, budget, {}};
    // roots are the unit-scale runs
    std::vector<std::pair<std::size_t, std::size_t>> roots;
    const int shift = 2 * m;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (i == 0 || (params.keys()[i] >> shift) != (params.keys()[i - 1] >> shift)) {
        roots.emplace_back(i, i);
      }
      roots.back().second = i + 1;
    }
    for (auto [a, b] : roots) tree.assign(a, b, 0, tree.capacity(a, b, 0));

    std::vector<TubeParam> chosen;
    for (std::size_t idx : tree.selected) {
      chosen.push_back(TubeParam{family.scale(), params.cells()[idx].i, params.cells()[idx].j, chart});
    }
    TubeFamily out(family.scale(), std::move(chosen));
    double C_star = out.certificate(target_s).C;
    ExtractionResult res{std::move(out), target_s, C_star, budget, n};
    if (C_star <= 1.0) return res;
    if (!best || C_star < best->C_star ||
        (C_star == best->C_star && res.family.size() > best->family.size())) {
      best = std::move(res);
    }
    if (budget == 1) break;
  }
  return *best;
}

TubeFamily dualize(const PointSet& P) {
  std::vector<TubeParam> params;
  params.reserve(P.size());
  for (const Cell& c : P.cells()) {
    TubeParam T{P.base_scale(), c.i, c.j, Chart::standard};
    try {
      T.validate();
    } catch (const PreconditionError&) {
      throw PreconditionError("dualize: square (" + std::to_string(c.i) + ", " +
                              std::to_string(c.j) + ") outside the chart domain");
    }
    params.push_back(T);
  }
  return TubeFamily(P.base_scale(), std::move(params));
}

PointSet dualize_tubes(const TubeFamily& family) {
  PointSet params = family.parameter_set();
  const std::int64_t n = family.scale().inverse();
  bool inside = std::all_of(params.cells().begin(), params.cells().end(), [&](const Cell& c) {
    return c.i >= 0 && c.j >= 0 && c.i < n && c.j < n;
  });
  std::vector<Cell> cells(params.cells().begin(), params.cells().end());
  return PointSet(family.scale(), std::move(cells),
                  inside ? Bounds::unit_square : Bounds::unbounded);
}

bool dual_meets(const TubeParam& dual_of_point, const TubeParam& T) {
  const int G = std::max(dual_of_point.scale.exponent(), T.scale.exponent());
  const i128 gp = pow2(G - dual_of_point.scale.exponent());
  const i128 gt = pow2(G - T.scale.exponent());
  const i128 unit2 = pow2(G);
  // the point square: x-range acts as slope, y-range as intercept
  Interval A = Interval::half_open(dual_of_point.a * gp, (dual_of_point.a + 1) * gp);
  Interval B = Interval::half_open(dual_of_point.b * gp * unit2, (dual_of_point.b + 1) * gp * unit2);
  // the parameter square of T read as (-a, b)
  Interval X{-(T.a + 1) * gt, -T.a * gt, false, true};
  Interval Y = Interval::half_open(T.b * gt * unit2, (T.b + 1) * gt * unit2);
  return lines_meet(A, X, B, Y);
}

} // namespace incgeo
