#pragma once

// Batch experiments over a range of scales and seeds, with log-log fits and
// JSON/CSV reports.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "incgeo/dyadic.hpp"

namespace incgeo {

inline constexpr const char* kReportSchema = "v1";
inline constexpr const char* kVersion = "0.1.0";

struct ExperimentConfig {
  std::string kind;  ///< furstenberg | sharpness | projection | sumproduct
  std::vector<int> delta_exps{6, 7, 8, 9, 10};
  double s = 0.5;
  double t = 1.0;
  std::optional<double> u;         ///< projection: also run the non-concentration check
  std::optional<std::int64_t> M;   ///< default depends on delta
  std::vector<std::uint64_t> seeds{1};
  int radius_exp = 4;              ///< sharpness: ball radius 2^-radius_exp
  std::string points = "random";   ///< furstenberg: random | collinear | grid
  std::string directions = "all";  ///< projection: all | cantor
  bool heuristic_search = false;   ///< projection: small-projection subset search
  std::string A = "progression";   ///< sumproduct sets: progression | cantor | singleton
  std::string B1 = "progression";
  std::string B2 = "progression";
  std::optional<std::string> output;

  /// Throws ParseError on unknown kinds or malformed fields.
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Fit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  ///< root mean square of the residuals
  std::size_t points = 0;
};

/// Ordinary least squares of ln(y) on ln(1/delta).
std::optional<Fit> fit_loglog(const std::vector<int>& delta_exps, const std::vector<double>& values);

struct ReportRow {
  int delta_exp = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::int64_t>> counts;
  std::vector<std::pair<std::string, double>> ratios;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ExperimentReport {
  std::string schema = kReportSchema;
  std::string kind;
  nlohmann::json config;
  std::vector<ReportRow> rows;
  std::string fitted_quantity;  ///< ratio field used for the fit
  std::optional<Fit> fit;
  nlohmann::json summary = nlohmann::json::object();
  nlohmann::json environment = nlohmann::json::object();

  nlohmann::json to_json() const;
  static ExperimentReport from_json(const nlohmann::json& j);
};

ExperimentReport run_furstenberg(const ExperimentConfig& cfg);
ExperimentReport run_sharpness(const ExperimentConfig& cfg);
ExperimentReport run_projection(const ExperimentConfig& cfg);
ExperimentReport run_sumproduct(const ExperimentConfig& cfg);
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Writes <dir>/report.json and <dir>/report.csv.
void emit_report(const ExperimentReport& report, const std::filesystem::path& dir);
ExperimentReport load_report(const std::filesystem::path& dir);
std::string report_csv(const ExperimentReport& report);

/// |Pi_s(P)|_delta for the direction s = d * delta, by marking image cells.
std::int64_t projection_count(const PointSet& P, std::int64_t d);

/// 1-D interval sets in [1, 2) at scale delta, as indices a with [a d, (a+1) d).
std::vector<std::int64_t> interval_set(const std::string& spec, Scale delta);
/// Cells of A + B with outward rounding.
std::vector<std::int64_t> sumset_cells(const std::vector<std::int64_t>& A,
                                       const std::vector<std::int64_t>& B, Scale delta);
/// Cells of A * B with outward rounding.
std::vector<std::int64_t> productset_cells(const std::vector<std::int64_t>& A,
                                           const std::vector<std::int64_t>& B, Scale delta);
/// Squares of the grid (sum cells) x (product cells) met by Y = b2 (X - b1),
/// with b1 = b1_index delta and b2 = b2_index delta.
std::int64_t elekes_line_count(const std::vector<std::int64_t>& sum_cells,
                               const std::vector<std::int64_t>& product_cells,
                               std::int64_t b1_index, std::int64_t b2_index, Scale delta);

/// Minimum over all lines of carried squares, and |A|.
struct ElekesCheck {
  std::int64_t min_carried = 0;
  std::int64_t A_size = 0;
  std::int64_t lines = 0;
  bool pass = false;  ///< every line carries >= |A| / kElekesLineFactor squares
};
ElekesCheck check_elekes_lines(const std::vector<std::int64_t>& A, const std::vector<std::int64_t>& B1,
                               const std::vector<std::int64_t>& B2, Scale delta);

} // namespace incgeo
