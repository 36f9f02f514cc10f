// End-to-end acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "incgeo/constants.hpp"
#include "incgeo/corpus.hpp"
#include "incgeo/error.hpp"
#include "incgeo/experiments.hpp"
#include "incgeo/multiscale.hpp"
#include "oracles.hpp"

using namespace incgeo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

const std::vector<int> kAllScales{6, 7, 8, 9, 10};
constexpr std::uint64_t kCorpusSeed = 7;

const std::vector<NiceConfiguration>& corpus() {
  static const std::vector<NiceConfiguration> configs = [] {
    std::vector<NiceConfiguration> out;
    for (const auto& spec : corpus_specs(200, kAllScales, kCorpusSeed)) out.push_back(random_config(spec));
    return out;
  }();
  return configs;
}

Outcome double_counting() {
  std::size_t bad = 0;
  for (const auto& config : corpus()) {
    const IncidenceSummary sum = summarize(config);
    // independent recount from the families
    std::int64_t direct = 0;
    for (const auto& fam : config.families()) direct += static_cast<std::int64_t>(fam.size());
    if (sum.total_incidences != sum.membership_sum || direct != sum.membership_sum) ++bad;
  }
  return {bad == 0, fmt("%.0f configurations, %.0f mismatches", static_cast<double>(corpus().size()),
                        static_cast<double>(bad))};
}

Outcome small_tube() {
  std::size_t bad = 0;
  for (const auto& config : corpus()) {
    if (!check_small_tube(config).pass) ++bad;
  }
  return {bad == 0, fmt("%.0f failures", static_cast<double>(bad))};
}

Outcome large_tube() {
  const CalibrationResult cal = calibrate_large_tube(100, 20240601);
  const bool frozen = std::abs(cal.constant - kLargeTubeConstant) <= 1e-12 * cal.constant;
  std::size_t bad = 0, total = 0;
  double worst = INFINITY;
  for (const auto& spec : corpus_specs(100, {7, 8}, 424242)) {
    NiceConfiguration config = random_config(spec);
    const IncidenceSummary sum = summarize(config);
    const LargeTubeReport rep = check_large_tube(config, config.tubes()[sum.heaviest_tube]);
    worst = std::min(worst, rep.raw_ratio);
    ++total;
    if (!rep.pass) ++bad;
  }
  return {frozen && bad == 0,
          fmt("calibrated c = %.6g (frozen %.6g), %.0f failures on fresh corpus, min raw ratio %.4g",
              cal.constant, kLargeTubeConstant, static_cast<double>(bad), worst)};
}

Outcome union_bound() {
  std::size_t bad = 0, unlabeled = 0;
  for (const auto& config : corpus()) {
    const UnionBoundReport rep = check_union_bound(config);
    if (!rep.pass) ++bad;
    if (rep.branch.empty()) ++unlabeled;
  }
  return {bad == 0 && unlabeled == 0,
          fmt("%.0f failures, %.0f runs without a branch", static_cast<double>(bad),
              static_cast<double>(unlabeled))};
}

Outcome sharpness() {
  ExperimentConfig cfg;
  cfg.kind = "sharpness";
  cfg.s = 0.5;
  cfg.radius_exp = 4;
  cfg.delta_exps = kAllScales;
  const ExperimentReport rep = run_sharpness(cfg);
  if (!rep.fit) return {false, "no fit"};
  return {std::abs(rep.fit->slope) <= 0.1, fmt("slope %.4f, residual %.4f", rep.fit->slope, rep.fit->residual)};
}

Outcome uniformization() {
  std::size_t bad = 0;
  double worst = INFINITY;
  const Scale delta(8);
  for (int k = 0; k < 50; ++k) {
    const double t = 0.5 + 1.5 * (k % 10) / 9.0;
    PointSet P = gen_random_frostman(t, delta, mix_seed(31337, static_cast<std::uint64_t>(k))).set;
    const int N = k % 2 == 0 ? 2 : 4;
    const ScaleChain chain = ScaleChain::from_ratio(8 / N, N);
    std::vector<int> exps;
    for (auto s : chain.scales()) exps.push_back(s.exponent());
    try {
      UniformSet U = uniformize(P, chain);
      const double ratio = static_cast<double>(U.P.size()) / static_cast<double>(P.size());
      const double bound = uniformization_bound(N, delta);
      worst = std::min(worst, ratio / bound);
      bool inside = true;
      for (const auto& c : U.P.cells()) inside = inside && P.contains(c);
      if (!oracle::uniform(U.P, exps) || !is_uniform(U.P, chain) || ratio < bound || !inside) ++bad;
    } catch (const VerificationError&) {
      ++bad;
    }
  }
  return {bad == 0, fmt("%.0f failures, min kept/bound %.3g", static_cast<double>(bad), worst)};
}

Outcome frostman_oracle() {
  std::size_t bad = 0;
  Rng rng(555);
  const Scale delta(3);
  for (int k = 0; k < 500; ++k) {
    const auto count = 1 + uniform_index(rng, 64);
    std::vector<Cell> cells;
    for (std::int64_t i = 0; i < 8; ++i) {
      for (std::int64_t j = 0; j < 8; ++j) cells.push_back({i, j});
    }
    for (std::size_t a = 0; a < count; ++a) std::swap(cells[a], cells[a + uniform_index(rng, 64 - a)]);
    cells.resize(count);
    PointSet P(delta, cells);
    const double s = 2.0 * uniform01(rng);
    if (frostman_constant(P, s).C != oracle::frostman(P, s)) ++bad;
  }
  return {bad == 0, fmt("500 sets, %.0f mismatches", static_cast<double>(bad))};
}

Outcome duality() {
  std::size_t bad = 0;
  Rng rng(9001);
  const Scale delta(6);
  const std::int64_t n = delta.inverse();
  for (int k = 0; k < 50; ++k) {
    std::vector<Cell> cells;
    const auto count = 1 + uniform_index(rng, 256);
    for (std::size_t a = 0; a < count; ++a) {
      cells.push_back({static_cast<std::int64_t>(uniform_index(rng, n)), static_cast<std::int64_t>(uniform_index(rng, n))});
    }
    PointSet P = PointSet::collect(delta, cells);
    std::vector<TubeParam> params;
    for (int a = 0; a < 40; ++a) {
      params.push_back({delta, static_cast<std::int64_t>(uniform_index(rng, 2 * n)) - n,
                        static_cast<std::int64_t>(uniform_index(rng, 4 * n)) - 2 * n, Chart::standard});
    }
    TubeFamily family(delta, params);
    TubeFamily dual_points = dualize(P);
    for (std::size_t p = 0; p < P.size(); ++p) {
      const TubeParam dual{delta, P.cells()[p].i, P.cells()[p].j, Chart::standard};
      if (!dual_points.contains(dual)) ++bad;
      for (const auto& T : family.params()) {
        if (tube_meets_square(T, P.square(p)) != dual_meets(dual, T)) ++bad;
      }
    }
    if (!(dualize_tubes(dual_points) == P)) ++bad;
    PointSet dual_tubes = dualize_tubes(family);
    if (!(dualize(dual_tubes).params() == family.params())) ++bad;
  }
  return {bad == 0, fmt("%.0f mismatched entries or round trips", static_cast<double>(bad))};
}

Outcome induction_on_scales() {
  std::size_t product_bad = 0, product_total = 0, random_ok = 0, random_total = 0, silent = 0;
  for (int m : {6, 7, 8}) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      for (double s : {0.25, 0.5, 0.75}) {
        ConfigSpec spec{m, s, 1.0, default_multiplicity(s, m), mix_seed(seed, 77)};
        RefineOptions opt;
        opt.allowance = 0.2;
        opt.strict = true;
        ++product_total;
        try {
          refine_induction_on_scales(product_config(spec), Scale(m / 2), opt);
        } catch (const VerificationError&) {
          ++product_bad;
        }
      }
    }
  }
  for (const auto& spec : corpus_specs(60, {6, 7, 8}, 2718)) {
    RefineOptions opt;
    opt.allowance = 0.3;
    opt.strict = false;
    const RefinementOutcome out = refine_induction_on_scales(random_config(spec), Scale(spec.delta_exp / 2), opt);
    ++random_total;
    if (out.verified) ++random_ok;
    else if (out.diagnostic.empty()) ++silent;
  }
  const double rate = static_cast<double>(random_ok) / static_cast<double>(random_total);
  return {product_bad == 0 && rate >= 0.9 && silent == 0,
          fmt("product failures %.0f/%.0f, random success %.3f, failures without diagnostic %.0f",
              static_cast<double>(product_bad), static_cast<double>(product_total), rate,
              static_cast<double>(silent))};
}

Outcome elekes() {
  std::size_t bad = 0, runs = 0;
  for (int m : {6, 8}) {
    const Scale delta(m);
    for (const char* a : {"progression", "cantor"}) {
      for (const char* b1 : {"progression", "cantor"}) {
        for (const char* b2 : {"progression", "cantor"}) {
          const ElekesCheck chk = check_elekes_lines(interval_set(a, delta), interval_set(b1, delta),
                                                     interval_set(b2, delta), delta);
          ++runs;
          if (!chk.pass) ++bad;
        }
      }
    }
  }
  return {bad == 0, fmt("%.0f set triples, %.0f with a short line", static_cast<double>(runs), static_cast<double>(bad))};
}

Outcome projection_exact() {
  std::size_t bad = 0;
  Rng rng(4242);
  for (int k = 0; k < 100; ++k) {
    const int m = 4 + static_cast<int>(uniform_index(rng, 5));
    const Scale delta(m);
    const double t = 0.5 + 1.5 * uniform01(rng);
    PointSet P = gen_random_frostman(t, delta, rng()).set;
    const std::int64_t n = delta.inverse();
    const auto d = n + static_cast<std::int64_t>(uniform_index(rng, n + 1));
    if (projection_count(P, d) != oracle::projection(P, d)) ++bad;
  }
  return {bad == 0, fmt("100 pairs, %.0f mismatches", static_cast<double>(bad))};
}

Outcome furstenberg_exponent() {
  ExperimentConfig cfg;
  cfg.kind = "furstenberg";
  cfg.s = 0.5;
  cfg.t = 1.0;
  cfg.delta_exps = kAllScales;
  cfg.seeds = {1, 2, 3};
  const ExperimentReport rep = run_furstenberg(cfg);
  if (!rep.fit) return {false, "no fit"};
  return {rep.fit->slope >= 0.4,
          fmt("exponent %.4f, gap to t/2 %.4f (t/2 + eta not asserted)", rep.fit->slope, rep.fit->slope - 0.5)};
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"double counting identity", double_counting},
      {"small-tube bound", small_tube},
      {"large-tube bound with frozen constant", large_tube},
      {"union bound", union_bound},
      {"ball sharpness slope", sharpness},
      {"uniformization", uniformization},
      {"Frostman constant oracle", frostman_oracle},
      {"point-line duality", duality},
      {"induction on scales", induction_on_scales},
      {"Elekes lines", elekes},
      {"projection exactness", projection_exact},
      {"Furstenberg exponent", furstenberg_exponent},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] %2d. %s: %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", index, name.c_str(),
                out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.pass) ++failed;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
