#include "incgeo/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "incgeo/error.hpp"
#include "incgeo/pointsets.hpp"

namespace incgeo {

namespace {

// Next non-blank line with '#' comments stripped; false at end of input.
bool next_line(std::istream& in, std::string& line, int& lineno) {
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
  }
  return false;
}

[[noreturn]] void fail(int lineno, const std::string& what) {
  throw ParseError("line " + std::to_string(lineno) + ": " + what);
}

Scale read_header(std::istream& in, int& lineno) {
  std::string line;
  if (!next_line(in, line, lineno)) throw ParseError("missing 'scale <m>' header");
  std::istringstream ss(line);
  std::string word;
  int m = -1;
  std::string extra;
  if (!(ss >> word >> m) || word != "scale" || (ss >> extra)) fail(lineno, "expected 'scale <m>'");
  try {
    return Scale(m);
  } catch (const InvalidScale& e) {
    fail(lineno, e.what());
  }
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

} // namespace

PointSet read_point_set(std::istream& in, Bounds bounds) {
  int lineno = 0;
  Scale scale = read_header(in, lineno);
  std::vector<Cell> cells;
  std::string line;
  while (next_line(in, line, lineno)) {
    std::istringstream ss(line);
    Cell c;
    std::string extra;
    if (!(ss >> c.i >> c.j) || (ss >> extra)) fail(lineno, "expected '<i> <j>'");
    cells.push_back(c);
  }
  try {
    return PointSet(scale, std::move(cells), bounds);
  } catch (const PreconditionError& e) {
    throw ParseError(e.what());
  }
}

void write_point_set(std::ostream& out, const PointSet& P) {
  out << "scale " << P.base_scale().exponent() << '\n';
  for (const Cell& c : P.lexicographic_cells()) out << c.i << ' ' << c.j << '\n';
}

PointSet load_point_set(const std::filesystem::path& path, Bounds bounds) {
  auto in = open_in(path);
  return read_point_set(in, bounds);
}

void save_point_set(const std::filesystem::path& path, const PointSet& P) {
  auto out = open_out(path);
  write_point_set(out, P);
}

TubeFamily read_tube_family(std::istream& in) {
  int lineno = 0;
  Scale scale = read_header(in, lineno);
  std::vector<TubeParam> params;
  std::string line;
  while (next_line(in, line, lineno)) {
    std::istringstream ss(line);
    TubeParam T{scale, 0, 0, Chart::standard};
    std::string chart, extra;
    if (!(ss >> T.a >> T.b)) fail(lineno, "expected '<a> <b> [chart]'");
    if (ss >> chart) {
      if (chart == "vertical") {
        T.chart = Chart::vertical;
      } else if (chart != "standard") {
        fail(lineno, "unknown chart '" + chart + "'");
      }
    }
    if (ss >> extra) fail(lineno, "trailing text");
    try {
      T.validate();
    } catch (const PreconditionError& e) {
      fail(lineno, e.what());
    }
    if (!params.empty() && std::find(params.begin(), params.end(), T) != params.end()) {
      fail(lineno, "duplicate tube");
    }
    params.push_back(T);
  }
  return TubeFamily(scale, std::move(params));
}

void write_tube_family(std::ostream& out, const TubeFamily& family) {
  out << "scale " << family.scale().exponent() << '\n';
  for (const TubeParam& T : family.params()) {
    out << T.a << ' ' << T.b;
    if (T.chart == Chart::vertical) out << " vertical";
    out << '\n';
  }
}

TubeFamily load_tube_family(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_tube_family(in);
}

void save_tube_family(const std::filesystem::path& path, const TubeFamily& family) {
  auto out = open_out(path);
  write_tube_family(out, family);
}

namespace {

std::int64_t dyadic_numerator(double v, Scale scale, const char* what) {
  double scaled = std::ldexp(v, scale.exponent());
  if (scaled != std::floor(scaled)) {
    throw ParseError(std::string(what) + " is not a multiple of 2^-" +
                     std::to_string(scale.exponent()));
  }
  return static_cast<std::int64_t>(scaled);
}

} // namespace

PointSet generate_from_json(const nlohmann::json& spec) {
  try {
    const std::string kind = spec.at("kind").get<std::string>();
    if (kind == "random") {
      Scale delta(spec.at("delta_exp").get<int>());
      return gen_random_frostman(spec.at("s").get<double>(), delta,
                                 spec.at("seed").get<std::uint64_t>())
          .set;
    }
    if (kind == "cantor") {
      CantorPattern pattern;
      const auto& p = spec.at("pattern");
      pattern.depth = p.at("depth").get<int>();
      for (const auto& child : p.at("children")) {
        pattern.children.push_back({child.at(0).get<std::int64_t>(), child.at(1).get<std::int64_t>()});
      }
      return gen_cantor(pattern, spec.at("levels").get<int>());
    }
    if (kind == "ball") {
      Scale delta(spec.at("delta_exp").get<int>());
      const auto& c = spec.at("center");
      DyadicPoint center{dyadic_numerator(c.at(0).get<double>(), delta, "center"),
                         dyadic_numerator(c.at(1).get<double>(), delta, "center"), delta};
      std::int64_t n = dyadic_numerator(spec.at("radius").get<double>(), delta, "radius");
      return gen_ball(center, Radius::of(n, delta), delta);
    }
    if (kind == "grid") return full_grid(Scale(spec.at("delta_exp").get<int>()));
    throw ParseError("unknown generator kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("generator spec: ") + e.what());
  }
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& value) {
  auto out = open_out(path);
  out << value.dump(2) << '\n';
}

Scale parse_scale(const std::string& text) {
  std::string body = text;
  if (body.rfind("2^-", 0) == 0) body = body.substr(3);
  try {
    std::size_t used = 0;
    int m = std::stoi(body, &used);
    if (used != body.size()) throw ParseError("bad scale '" + text + "'");
    return Scale(m);
  } catch (const std::logic_error&) {
    throw ParseError("bad scale '" + text + "'");
  }
}

} // namespace incgeo
