#pragma once

// Nice configurations, exact incidence summaries, the elementary lower bounds
// for the number of tubes, Frostman extraction on tube families and
// point-line duality.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "incgeo/constants.hpp"
#include "incgeo/dyadic.hpp"
#include "incgeo/tubes.hpp"

namespace incgeo {

class NiceConfiguration {
public:
  NiceConfiguration() = default;
  /// families[k] is T(p) for the k-th square of P in Z-order. Throws
  /// InvalidConfiguration when an invariant fails.
  NiceConfiguration(PointSet P, std::vector<TubeFamily> families, double s, double C,
                    std::int64_t M);

  /// Every violated invariant, one message each; empty iff valid.
  static std::vector<std::string> problems(const PointSet& P,
                                           const std::vector<TubeFamily>& families, double s,
                                           double C, std::int64_t M);

  Scale delta() const noexcept { return P_.base_scale(); }
  const PointSet& points() const noexcept { return P_; }
  const std::vector<TubeFamily>& families() const noexcept { return families_; }
  const TubeFamily& tubes_at(std::size_t k) const { return families_.at(k); }
  double s() const noexcept { return s_; }
  double C() const noexcept { return C_; }
  std::int64_t M() const noexcept { return M_; }

  /// The union of all T(p), deduplicated and sorted.
  const std::vector<TubeParam>& tubes() const noexcept { return tubes_; }
  /// members()[t] lists the points p (Z-order indices) with tubes()[t] in T(p).
  const std::vector<std::vector<std::size_t>>& members() const noexcept { return members_; }
  std::size_t tube_index(const TubeParam& T) const;

private:
  PointSet P_;
  std::vector<TubeFamily> families_;
  double s_ = 0.0;
  double C_ = 1.0;
  std::int64_t M_ = 1;
  std::vector<TubeParam> tubes_;
  std::vector<std::vector<std::size_t>> members_;
};

/// Tubes through each square of P with the given slope indices. Slope sets with
/// 2M or more entries are evenly thinned to M. C is the worst per-point
/// certificate; exceeding `C_cap` throws InvalidConfiguration.
NiceConfiguration build_nice_config(const PointSet& P,
                                    const std::vector<std::vector<std::int64_t>>& slope_plan,
                                    std::int64_t M, double s,
                                    std::optional<double> C_cap = std::nullopt);

/// Same slope set at every point.
NiceConfiguration build_product_config(const PointSet& P, const std::vector<std::int64_t>& slopes,
                                       double s, std::optional<double> C_cap = std::nullopt);

struct IncidenceSummary {
  std::int64_t total_incidences = 0;  ///< sum over p of |T(p)|
  std::int64_t membership_sum = 0;    ///< sum over T of m(T), counted independently
  std::int64_t union_size = 0;
  std::vector<std::int64_t> membership;  ///< m(T), aligned with config.tubes()
  std::vector<std::int64_t> geometric;   ///< |T cap P|_delta
  std::int64_t K_membership = 0;
  std::int64_t K_geometric = 0;
  std::size_t heaviest_tube = 0;  ///< index of a tube attaining K_geometric
};

IncidenceSummary summarize(const NiceConfiguration& config);

struct SmallTubeReport {
  std::int64_t lhs = 0;  ///< |T|
  std::int64_t K_membership = 0;
  std::int64_t K_geometric = 0;
  double rhs_membership = 0.0;  ///< |P| M / K_membership
  double rhs_geometric = 0.0;
  bool pass = false;            ///< membership form, decided in integers
  bool pass_geometric = false;
};

SmallTubeReport check_small_tube(const NiceConfiguration& config);

struct LargeTubeReport {
  TubeParam tube;
  std::int64_t lhs = 0;         ///< |T|
  std::int64_t tube_count = 0;  ///< |T cap P|_delta
  double c = 0.0;
  double rhs = 0.0;             ///< c C^{-1/s} |T cap P| M
  double raw_ratio = 0.0;       ///< lhs / (C^{-1/s} |T cap P| M)
  bool pass = false;

  // Transversal sub-families T'(p) for p on the tube.
  double angle_threshold = 0.0;  ///< kTransversalFraction * C^{-1/s}
  std::int64_t min_transversal = 0;
  bool transversal_half = false;  ///< every |T'(p)| >= M / 2
  std::int64_t transversal_sum = 0;
  std::int64_t overlap = 0;       ///< max over T' of the points p on the tube with T' in T'(p)
  double overlap_bound = 0.0;     ///< transversal_sum / overlap, a lower bound for |T|
};

LargeTubeReport check_large_tube(const NiceConfiguration& config, const TubeParam& T,
                                 double c = kLargeTubeConstant);

struct UnionBoundReport {
  std::int64_t lhs = 0;
  double rhs = 0.0;  ///< c C^{-1/s} |P|^{1/2} M
  double c = 0.0;
  double raw_ratio = 0.0;
  std::string branch;  ///< "large-tube" or "small-tube"
  std::optional<TubeParam> witness;
  std::int64_t K_geometric = 0;
  bool pass = false;
};

UnionBoundReport check_union_bound(const NiceConfiguration& config,
                                   double c = kLargeTubeConstant);

struct ExtractionResult {
  TubeFamily family;
  double target_s = 0.0;
  double C_star = 0.0;
  std::int64_t budget = 0;
  std::int64_t input_size = 0;
};

/// Top-down quota selection on the parameter set; the output is certified.
ExtractionResult extract_frostman_tubes(const TubeFamily& family, double target_s);

/// Square (i, j) to the standard-chart tube with indices (i, j).
TubeFamily dualize(const PointSet& P);
/// Parameter squares back to a point set.
PointSet dualize_tubes(const TubeFamily& family);

/// Incidence between the dual tube of a point square and the parameter square
/// of T, read in the chart (a, b) -> (-a, b) where the dual lines live.
bool dual_meets(const TubeParam& dual_of_point, const TubeParam& T);

} // namespace incgeo
