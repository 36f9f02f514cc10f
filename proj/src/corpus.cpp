#include "incgeo/corpus.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace incgeo {

std::int64_t default_multiplicity(double s, int delta_exp) {
  const int e = static_cast<int>(std::floor(s * delta_exp)) - 2;
  return std::max<std::int64_t>(2, std::int64_t{1} << std::max(e, 0));
}

NiceConfiguration random_config(const ConfigSpec& spec) {
  Scale delta(spec.delta_exp);
  PointSet P = gen_random_frostman(spec.t, delta, spec.seed).set;
  std::vector<std::vector<std::int64_t>> plan;
  plan.reserve(P.size());
  for (std::size_t k = 0; k < P.size(); ++k) {
    plan.push_back(gen_slope_set(spec.s, delta, spec.M, mix_seed(spec.seed, k + 1)));
  }
  return build_nice_config(P, plan, spec.M, spec.s);
}

NiceConfiguration product_config(const ConfigSpec& spec) {
  Scale delta(spec.delta_exp);
  PointSet P = gen_random_frostman(spec.t, delta, spec.seed).set;
  auto slopes = gen_slope_set(spec.s, delta, spec.M, mix_seed(spec.seed, 0));
  return build_product_config(P, slopes, spec.s);
}

NiceConfiguration collinear_config(int delta_exp, std::int64_t count, std::int64_t M, double s,
                                   std::uint64_t seed) {
  Scale delta(delta_exp);
  const std::int64_t n = delta.inverse();
  count = std::clamp<std::int64_t>(count, 1, n);
  std::vector<Cell> cells;
  for (std::int64_t k = 0; k < count; ++k) cells.push_back({k * n / count, n / 2});
  PointSet P(delta, std::move(cells));
  std::vector<std::vector<std::int64_t>> plan;
  for (std::size_t k = 0; k < P.size(); ++k) {
    std::vector<std::int64_t> slopes;
    for (int attempt = 0; attempt < kGeneratorRetryBudget; ++attempt) {
      Rng rng(mix_seed(seed, k * kGeneratorRetryBudget + static_cast<std::uint64_t>(attempt)));
      slopes = random_cantor_1d(s, std::max(delta_exp - 1, 0), rng);
      if (static_cast<std::int64_t>(slopes.size()) >= M) break;
    }
    for (auto& a : slopes) a += n / 2;
    plan.push_back(even_subsample(slopes, M));
  }
  return build_nice_config(P, plan, M, s);
}

std::vector<ConfigSpec> corpus_specs(std::size_t count, const std::vector<int>& delta_exps,
                                     std::uint64_t seed) {
  constexpr std::array<double, 3> kS{0.25, 0.5, 0.75};
  constexpr std::array<double, 3> kT{0.75, 1.0, 1.25};
  std::vector<ConfigSpec> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    ConfigSpec spec;
    spec.delta_exp = delta_exps[k % delta_exps.size()];
    spec.s = kS[(k / delta_exps.size()) % kS.size()];
    spec.t = kT[(k / (delta_exps.size() * kS.size())) % kT.size()];
    spec.M = default_multiplicity(spec.s, spec.delta_exp);
    spec.seed = mix_seed(seed, k);
    out.push_back(spec);
  }
  return out;
}

CalibrationResult calibrate_large_tube(std::size_t count, std::uint64_t seed) {
  CalibrationResult res;
  res.min_ratio = std::numeric_limits<double>::infinity();
  for (const ConfigSpec& spec : corpus_specs(count, {6}, seed)) {
    NiceConfiguration config = random_config(spec);
    IncidenceSummary sum = summarize(config);
    LargeTubeReport rep = check_large_tube(config, config.tubes()[sum.heaviest_tube], 1.0);
    if (rep.raw_ratio < res.min_ratio) {
      res.min_ratio = rep.raw_ratio;
      res.argmin = spec;
    }
    ++res.configs;
  }
  res.constant = res.min_ratio / 2.0;
  return res;
}

} // namespace incgeo
