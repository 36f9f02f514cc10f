#include "incgeo/bundle.hpp"

#include <map>

#include "incgeo/error.hpp"
#include "incgeo/io.hpp"

namespace incgeo {

namespace fs = std::filesystem;
using nlohmann::json;

void save_config(const fs::path& dir, const NiceConfiguration& config) {
  fs::create_directories(dir / "tubes");
  const PointSet& P = config.points();
  save_point_set(dir / "points.txt", P);

  json manifest;
  manifest["schema"] = "v1";
  manifest["scale"] = config.delta().exponent();
  manifest["s"] = config.s();
  manifest["C"] = config.C();
  manifest["M"] = config.M();
  manifest["points"] = "points.txt";
  manifest["tubes"] = json::array();
  json certificate;
  certificate["s"] = config.s();
  certificate["per_point"] = json::array();
  double worst = 0.0;

  std::size_t k = 0;
  for (const Cell& c : P.lexicographic_cells()) {
    const TubeFamily& F = config.tubes_at(*P.index_of(c));
    const std::string file = "tubes/" + std::to_string(k++) + ".txt";
    save_tube_family(dir / file, F);
    manifest["tubes"].push_back({{"point", {c.i, c.j}}, {"file", file}});
    const double C = F.certificate(config.s()).C;
    worst = std::max(worst, C);
    certificate["per_point"].push_back({{"point", {c.i, c.j}}, {"C", C}, {"size", F.size()}});
  }
  certificate["C"] = worst;
  write_json_file(dir / "manifest.json", manifest);
  write_json_file(dir / "certificate.json", certificate);
}

ConfigParts load_config_parts(const fs::path& dir) {
  json manifest = read_json_file(dir / "manifest.json");
  ConfigParts parts;
  try {
    if (manifest.at("schema").get<std::string>() != "v1") {
      throw ParseError("unsupported manifest schema");
    }
    parts.s = manifest.at("s").get<double>();
    parts.C = manifest.at("C").get<double>();
    parts.M = manifest.at("M").get<std::int64_t>();
    parts.P = load_point_set(dir / manifest.at("points").get<std::string>());
    if (parts.P.base_scale().exponent() != manifest.at("scale").get<int>()) {
      throw ParseError("manifest scale disagrees with the points file");
    }
    parts.families.assign(parts.P.size(), TubeFamily(parts.P.base_scale(), {}));
    std::vector<bool> seen(parts.P.size(), false);
    for (const auto& entry : manifest.at("tubes")) {
      Cell c{entry.at("point").at(0).get<std::int64_t>(), entry.at("point").at(1).get<std::int64_t>()};
      auto k = parts.P.index_of(c);
      if (!k) throw ParseError("tube file for a point not in the set");
      if (seen[*k]) throw ParseError("two tube files for one point");
      seen[*k] = true;
      parts.families[*k] = load_tube_family(dir / entry.at("file").get<std::string>());
    }
    for (bool b : seen) {
      if (!b) throw ParseError("a point has no tube file");
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  return parts;
}

NiceConfiguration load_config(const fs::path& dir) {
  ConfigParts parts = load_config_parts(dir);
  return NiceConfiguration(std::move(parts.P), std::move(parts.families), parts.s, parts.C,
                           parts.M);
}

} // namespace incgeo
