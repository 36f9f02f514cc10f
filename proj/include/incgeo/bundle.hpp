#pragma once

// On-disk nice configurations:
//
//   <dir>/manifest.json     {schema, scale, s, C, M, points, tubes: [{point, file}]}
//   <dir>/points.txt        point set file
//   <dir>/tubes/<k>.txt     tube family of the k-th point in lexicographic order
//   <dir>/certificate.json  per-point Frostman constants

#include <filesystem>
#include <vector>

#include "incgeo/incidence.hpp"

namespace incgeo {

struct ConfigParts {
  PointSet P;
  std::vector<TubeFamily> families;  ///< aligned with P's Z-order
  double s = 0.0;
  double C = 0.0;
  std::int64_t M = 0;
};

void save_config(const std::filesystem::path& dir, const NiceConfiguration& config);

/// Reads a bundle without validating the configuration. Throws ParseError.
ConfigParts load_config_parts(const std::filesystem::path& dir);

/// Reads and validates. Throws ParseError or InvalidConfiguration.
NiceConfiguration load_config(const std::filesystem::path& dir);

} // namespace incgeo
