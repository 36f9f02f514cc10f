#pragma once

// Text formats for point sets and tube families, and JSON generator specs.
//
//   scale <m>
//   <i> <j>                 one square per line
//   <a> <b> [standard|vertical]   one tube per line

#include <filesystem>
#include <iosfwd>

#include <json.hpp>

#include "incgeo/dyadic.hpp"
#include "incgeo/tubes.hpp"

namespace incgeo {

PointSet read_point_set(std::istream& in, Bounds bounds = Bounds::unit_square);
void write_point_set(std::ostream& out, const PointSet& P);
PointSet load_point_set(const std::filesystem::path& path, Bounds bounds = Bounds::unit_square);
void save_point_set(const std::filesystem::path& path, const PointSet& P);

TubeFamily read_tube_family(std::istream& in);
void write_tube_family(std::ostream& out, const TubeFamily& family);
TubeFamily load_tube_family(const std::filesystem::path& path);
void save_tube_family(const std::filesystem::path& path, const TubeFamily& family);

/// Builds a set from {kind: "random", s, delta_exp, seed}, {kind: "cantor",
/// pattern: {depth, children: [[i, j], ...]}, levels}, {kind: "ball", center:
/// [x, y], radius, delta_exp} or {kind: "grid", delta_exp}.
PointSet generate_from_json(const nlohmann::json& spec);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value);

/// Parses "2^-k" or a plain exponent "k" into Scale(k).
Scale parse_scale(const std::string& text);

} // namespace incgeo
