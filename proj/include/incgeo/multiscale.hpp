#pragma once

// Scale chains, uniform subsets, the constructive induction-on-scales
// refinement, multiscale Frostman decompositions and the structure
// classification pipeline.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "incgeo/incidence.hpp"

namespace incgeo {

/// 1 = Delta_0 > Delta_1 > ... > Delta_N = delta.
class ScaleChain {
public:
  ScaleChain() = default;
  explicit ScaleChain(std::vector<Scale> scales);

  /// Delta_j = 2^{-j step} for j = 0..N; requires N step <= kMaxExponent.
  static ScaleChain from_ratio(int step, int N);
  /// Steps of ceil(m / N) ending exactly at delta = 2^-m (the last step may be shorter).
  static ScaleChain even(Scale delta, int N);

  int levels() const noexcept { return static_cast<int>(scales_.size()) - 1; }
  Scale at(int j) const { return scales_.at(static_cast<std::size_t>(j)); }
  Scale finest() const { return scales_.back(); }
  const std::vector<Scale>& scales() const noexcept { return scales_; }
  /// log2 of 1/lambda_j where lambda_j = Delta_{j+1} / Delta_j.
  int ratio_exponent(int j) const { return at(j + 1).exponent() - at(j).exponent(); }
  /// The common ratio exponent, if every step has the same size.
  std::optional<int> constant_ratio() const;

  friend bool operator==(const ScaleChain&, const ScaleChain&) = default;

private:
  std::vector<Scale> scales_;
};

/// table[j-1][q] = |P cap Q|_{Delta_j} for the q-th Q in D_{Delta_{j-1}}(P), Z-order.
using BranchingTable = std::vector<std::vector<std::int64_t>>;

BranchingTable branching_profile(const PointSet& P, const ScaleChain& chain);

/// (K_j) when P is uniform along the chain.
std::optional<std::vector<std::int64_t>> is_uniform(const PointSet& P, const ScaleChain& chain);

struct UniformSet {
  PointSet P;
  ScaleChain chain;
  std::vector<std::int64_t> branching;  ///< K_1..K_N
};

/// (4 N^{-1} ln(1/delta))^{-N}
double uniformization_bound(int N, Scale delta);

/// Bottom-up: at each level keep the squares with at least K children for
/// the K maximizing K * #{such squares}, trimmed to their first K children.
UniformSet uniformize(const PointSet& P, const ScaleChain& chain);

struct PropertyCheck {
  std::string name;
  double measured = 0.0;   ///< a ratio that should not exceed the threshold
  double threshold = 0.0;
  bool pass = false;
};

struct RescaledPiece {
  DyadicSquare Q;
  NiceConfiguration config;  ///< (S_Q(P cap Q), T_Q)
};

struct RefinementOutcome {
  Scale delta;
  Scale Delta;
  double allowance = 0.0;
  NiceConfiguration refined;  ///< (P, T(p)) with P inside P_0
  NiceConfiguration coarse;   ///< (D_Delta(P), families inside the Delta-cover of T)
  std::vector<RescaledPiece> pieces;  ///< one per Q in D_Delta(P), Z-order
  std::int64_t initial_union = 0;     ///< |T_0|
  std::int64_t initial_M = 0;
  std::int64_t cover_size = 0;        ///< |T^Delta(T)|
  double product_lhs = 0.0;           ///< |T_0| / M
  double product_rhs = 0.0;           ///< |T^Delta(T)| / M_Delta * max_Q |T_Q| / M_Q
  std::vector<PropertyCheck> checks;
  bool verified = false;
  std::string diagnostic;
};

struct RefineOptions {
  double allowance = 0.2;
  /// Throw VerificationError on the first failed check instead of reporting it.
  bool strict = true;
};

RefinementOutcome refine_induction_on_scales(const NiceConfiguration& config, Scale Delta,
                                             const RefineOptions& options = {});

struct MultiscaleOutcome {
  ScaleChain chain;
  std::vector<RefinementOutcome> levels;  ///< levels[j] refines at Delta_j; pieces live at Delta_{j+1}/Delta_j
  NiceConfiguration final_config;         ///< glued refinement at scale delta
  double product_lhs = 0.0;               ///< |T_0| / M
  double product_rhs = 0.0;               ///< prod_j max_Q |T_Q| / M_Q
  std::vector<PropertyCheck> checks;
  bool verified = false;
  std::string diagnostic;
};

/// Iterated refinement. Each level is held to delta^{-allowance} in the finest
/// delta; the product inequality is checked against
/// delta^{-allowance N}.
MultiscaleOutcome multiscale_refine(const NiceConfiguration& config, const ScaleChain& chain,
                                    const RefineOptions& options = {});

struct FrostmanBlock {
  int first = 0;  ///< chain index of the coarse end
  int last = 0;   ///< chain index of the fine end
  double alpha = 0.0;
  double log_inv_lambda = 0.0;  ///< ln(1/lambda)
  double worst_local_ratio = 0.0;  ///< max over Q, x, r of count / (r^alpha |P cap Q|)
  bool long_block = false;  ///< lambda <= delta^tau
  bool good = false;        ///< long, with alpha in [xi, 2 - xi]
};

struct MultiscaleDecomposition {
  bool found = false;
  std::string reason;
  double epsilon = 0.0;
  double u = 0.0;
  double tau = 0.0;
  double xi = 0.0;
  std::vector<FrostmanBlock> blocks;
  double mass_lhs = 0.0;  ///< sum of alpha ln(1/lambda) over long blocks
  double mass_rhs = 0.0;  ///< ln|P| - 2 eps ln(1/delta)
  double good_lhs = 0.0;  ///< sum of ln(1/lambda) over good blocks
  double good_rhs = 0.0;  ///< xi ln(1/delta)
  std::size_t partitions_tried = 0;
  std::vector<int> normal;  ///< block indices with long blocks
  std::vector<int> good_blocks;
  std::string sampling_note;
};

struct DecomposeOptions {
  std::optional<double> tau;
  std::optional<double> xi;
};

/// Searches consecutive-block partitions of the chain of U: first the one that
/// merges levels of near-equal alpha, then the rest coarsest first.
MultiscaleDecomposition decompose_frostman_pieces(const UniformSet& U, double epsilon, double u,
                                                  const DecomposeOptions& options = {});

/// Independent re-check of items (i)-(iii) for a produced decomposition.
bool verify_decomposition(const UniformSet& U, const MultiscaleDecomposition& D);

enum class StructureClass { gain_large_tube, gain_small_tube, regular };

std::string to_string(StructureClass c);

struct ClassificationReport {
  StructureClass classification = StructureClass::regular;
  double eta = 0.0;
  double t = 0.0;
  int N = 0;
  ScaleChain chain;
  std::int64_t points_initial = 0;
  std::int64_t points_final = 0;
  std::int64_t tubes_final = 0;
  std::int64_t M = 0;
  bool pipeline_verified = false;
  std::string pipeline_diagnostic;
  // large-tube test
  double large_tube_max_ratio = 0.0;  ///< max |T cap P cap Q| / |P cap Q|^{1/2}
  double large_tube_threshold = 0.0;  ///< delta^{-2 eta}
  // small-tube test
  double light_point_fraction = 0.0;  ///< points with at least half their tubes light
  double light_threshold = 0.0;       ///< delta^{2 eta} |P|^{1/2}
  // regular case
  double certified_slice_fraction = 0.0;  ///< slices that are (delta, t/2, delta^{-7 eta})-sets
  // observation only
  double observed_ratio = 0.0;  ///< |T| / (M delta^{-(t/2 + eta)})
};

struct ClassifyOptions {
  double allowance = 0.3;
  std::optional<double> t;  ///< defaults to ln|P| / ln(1/delta)
  bool strict = false;      ///< propagate refinement failures
};

ClassificationReport classify_structure(const NiceConfiguration& config, double eta,
                                        const ClassifyOptions& options = {});

/// The sub-configuration on the points of P that lie in `keep`.
NiceConfiguration restrict_config(const NiceConfiguration& config, const PointSet& keep);

} // namespace incgeo
