#include <doctest.h>

#include <cmath>

#include "incgeo/corpus.hpp"
#include "incgeo/error.hpp"
#include "incgeo/multiscale.hpp"
#include "oracles.hpp"

using namespace incgeo;

namespace {

std::vector<int> exponents(const ScaleChain& chain) {
  std::vector<int> out;
  for (auto s : chain.scales()) out.push_back(s.exponent());
  return out;
}

// one square at 2^-8 in the corner of every square at 2^-4
PointSet spaced_grid() {
  std::vector<Cell> cells;
  for (std::int64_t a = 0; a < 16; ++a) {
    for (std::int64_t b = 0; b < 16; ++b) cells.push_back({16 * a, 16 * b});
  }
  return PointSet(Scale(8), cells);
}

// Children chosen per level from 4 x 4 blocks, one list per level.
PointSet layered(const std::vector<std::vector<Cell>>& levels) {
  std::vector<Cell> cells{{0, 0}};
  for (const auto& kids : levels) {
    std::vector<Cell> next;
    for (const auto& c : cells) {
      for (const auto& k : kids) next.push_back({4 * c.i + k.i, 4 * c.j + k.j});
    }
    cells = std::move(next);
  }
  return PointSet(Scale(2 * static_cast<int>(levels.size())), cells);
}

void check_classification_rule(const ClassificationReport& rep) {
  if (rep.large_tube_max_ratio >= rep.large_tube_threshold) {
    CHECK(rep.classification == StructureClass::gain_large_tube);
  } else if (rep.light_point_fraction >= 0.5) {
    CHECK(rep.classification == StructureClass::gain_small_tube);
  } else {
    CHECK(rep.classification == StructureClass::regular);
  }
}

} // namespace

TEST_CASE("scale chains") {
  ScaleChain c = ScaleChain::from_ratio(2, 4);
  CHECK(exponents(c) == std::vector<int>{0, 2, 4, 6, 8});
  CHECK(c.levels() == 4);
  CHECK(c.constant_ratio() == 2);
  ScaleChain e = ScaleChain::even(Scale(7), 3);
  CHECK(exponents(e) == std::vector<int>{0, 3, 6, 7});
  CHECK_FALSE(e.constant_ratio().has_value());
  CHECK(e.ratio_exponent(2) == 1);
  CHECK_THROWS_AS(ScaleChain({Scale(0)}), InvalidScale);
  CHECK_THROWS_AS(ScaleChain({Scale(1), Scale(2)}), InvalidScale);
  CHECK_THROWS_AS(ScaleChain({Scale(0), Scale(3), Scale(3)}), InvalidScale);
  CHECK_THROWS_AS(ScaleChain::from_ratio(0, 3), InvalidScale);
}

TEST_CASE("branching profiles") {
  const ScaleChain chain = ScaleChain::from_ratio(1, 4);
  SUBCASE("full grid") {
    auto table = branching_profile(full_grid(Scale(4)), chain);
    for (const auto& row : table) {
      for (auto v : row) CHECK(v == 4);
    }
    CHECK(is_uniform(full_grid(Scale(4)), chain) == std::vector<std::int64_t>{4, 4, 4, 4});
  }
  SUBCASE("single point") {
    PointSet P(Scale(4), {{5, 9}});
    for (const auto& row : branching_profile(P, chain)) CHECK(row == std::vector<std::int64_t>{1});
  }
  SUBCASE("diagonal pairs") {
    PointSet P = gen_cantor(CantorPattern{1, {{0, 0}, {1, 1}}}, 4);
    CHECK(is_uniform(P, chain) == std::vector<std::int64_t>{2, 2, 2, 2});
  }
  SUBCASE("non-uniform and wrong chain") {
    PointSet P(Scale(4), {{0, 0}, {1, 0}, {15, 15}});
    CHECK_FALSE(is_uniform(P, chain).has_value());
    CHECK_FALSE(oracle::uniform(P, exponents(chain)));
    CHECK_THROWS_AS(branching_profile(P, ScaleChain::from_ratio(1, 3)), InvalidScale);
  }
}

TEST_CASE("uniformization") {
  SUBCASE("uniform input is returned unchanged") {
    const ScaleChain chain = ScaleChain::from_ratio(1, 4);
    UniformSet U = uniformize(full_grid(Scale(4)), chain);
    CHECK(U.P == full_grid(Scale(4)));
    CHECK(U.branching == std::vector<std::int64_t>{4, 4, 4, 4});
  }
  SUBCASE("grid minus one square") {
    PointSet G = full_grid(Scale(4));
    std::vector<Cell> cells;
    for (const auto& c : G.cells()) {
      if (!(c == Cell{0, 0})) cells.push_back(c);
    }
    PointSet P(Scale(4), cells);
    const ScaleChain chain = ScaleChain::from_ratio(1, 4);
    UniformSet U = uniformize(P, chain);
    // 3 * 4 * 4 * 4 is the largest product available without the corner
    CHECK(U.P.size() == 192);
    CHECK(oracle::uniform(U.P, exponents(chain)));
    for (const auto& c : U.P.cells()) CHECK(P.contains(c));
    CHECK_FALSE(is_uniform(P, chain).has_value());
    // a single level of 255 children is already uniform
    CHECK(uniformize(P, ScaleChain({Scale(0), Scale(4)})).P == P);
  }
  SUBCASE("random sets keep the size bound") {
    const ScaleChain chain = ScaleChain::from_ratio(2, 4);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      PointSet P = gen_random_frostman(1.5, Scale(8), seed).set;
      UniformSet U = uniformize(P, chain);
      CHECK(oracle::uniform(U.P, exponents(chain)));
      CHECK(is_uniform(U.P, chain) == U.branching);
      CHECK(static_cast<double>(U.P.size()) >= uniformization_bound(4, Scale(8)) * static_cast<double>(P.size()));
      std::int64_t product = 1;
      for (auto K : U.branching) product *= K;
      CHECK(product == static_cast<std::int64_t>(U.P.size()));
    }
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(uniformize(PointSet(), ScaleChain::from_ratio(1, 2)), PreconditionError);
    CHECK_THROWS_AS(uniformize(full_grid(Scale(4)), ScaleChain::from_ratio(1, 3)), InvalidScale);
  }
  CHECK(uniformization_bound(2, Scale(8)) == doctest::Approx(std::pow(2.0 * 8.0 * std::log(2.0), -2.0)));
}

TEST_CASE("refinement at a single scale") {
  SUBCASE("product configurations verify strictly") {
    for (int m : {6, 8}) {
      NiceConfiguration c = product_config({m, 0.5, 1.0, default_multiplicity(0.5, m), 11});
      RefinementOutcome out = refine_induction_on_scales(c, Scale(m / 2));
      CHECK(out.verified);
      CHECK(out.diagnostic.empty());
      CHECK(out.product_rhs >= out.product_lhs * std::pow(2.0, -0.2 * m));
      // pieces partition the refined points
      std::size_t total = 0;
      for (const auto& piece : out.pieces) total += piece.config.points().size();
      CHECK(total == out.refined.points().size());
      CHECK(out.coarse.points().size() == dyadic_cubes(out.refined.points(), Scale(m / 2)).size());
      for (const auto& cell : out.refined.points().cells()) CHECK(c.points().contains(cell));
    }
  }
  SUBCASE("Delta = 1 gives one piece") {
    NiceConfiguration c = random_config({6, 0.5, 1.0, 4, 5});
    RefinementOutcome out = refine_induction_on_scales(c, Scale(0), RefineOptions{0.3, false});
    REQUIRE(out.pieces.size() == 1);
    CHECK(out.pieces[0].Q == DyadicSquare::unit());
    CHECK(out.pieces[0].config.points() == out.refined.points());
    CHECK(out.coarse.points().size() == 1);
  }
  SUBCASE("random configurations at delta = 2^-8, Delta = 2^-4") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
      NiceConfiguration c = random_config({8, 0.5, 1.0, default_multiplicity(0.5, 8), seed});
      RefinementOutcome out = refine_induction_on_scales(c, Scale(4), RefineOptions{0.2, false});
      CHECK(out.checks.size() == 6);
      CHECK(out.verified);
      if (!out.verified) CHECK_FALSE(out.diagnostic.empty());
    }
  }
  SUBCASE("strict mode throws on failure") {
    NiceConfiguration c = random_config({6, 0.5, 1.0, 4, 3});
    CHECK_THROWS_AS(refine_induction_on_scales(c, Scale(3), RefineOptions{0.0, true}), VerificationError);
    CHECK_THROWS_AS(refine_induction_on_scales(c, Scale(7)), InvalidScale);
  }
}

TEST_CASE("multiscale refinement") {
  SUBCASE("one level equals one refinement") {
    NiceConfiguration c = random_config({6, 0.5, 1.0, 4, 8});
    RefineOptions opt{0.3, false};
    MultiscaleOutcome ms = multiscale_refine(c, ScaleChain({Scale(0), Scale(6)}), opt);
    RefinementOutcome one = refine_induction_on_scales(c, Scale(0), opt);
    REQUIRE(ms.levels.size() == 1);
    CHECK(ms.levels[0].refined.points() == one.refined.points());
    CHECK(ms.final_config.points() == one.refined.points());
    CHECK(ms.levels[0].product_rhs == one.product_rhs);
  }
  SUBCASE("two levels on a product configuration") {
    NiceConfiguration c = product_config({8, 0.5, 1.0, default_multiplicity(0.5, 8), 2});
    MultiscaleOutcome ms = multiscale_refine(c, ScaleChain::from_ratio(4, 2), RefineOptions{0.2, true});
    CHECK(ms.verified);
    CHECK(ms.levels.size() == 2);
    CHECK(ms.product_rhs >= ms.product_lhs * std::pow(2.0, -0.4 * 8));
    for (const auto& cell : ms.final_config.points().cells()) CHECK(c.points().contains(cell));
  }
  SUBCASE("random configurations, three levels at delta = 2^-9") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      NiceConfiguration c = random_config({9, 0.5, 1.0, default_multiplicity(0.5, 9), seed});
      MultiscaleOutcome ms = multiscale_refine(c, ScaleChain::from_ratio(3, 3), RefineOptions{0.2, false});
      CHECK(ms.verified);
      CHECK(ms.levels.size() == 3);
    }
  }
  CHECK_THROWS_AS(multiscale_refine(random_config({6, 0.5, 1.0, 4, 1}), ScaleChain::from_ratio(1, 9)),
                  InvalidScale);
}

TEST_CASE("multiscale Frostman decomposition") {
  SUBCASE("full grid is concentrated") {
    UniformSet U = uniformize(full_grid(Scale(6)), ScaleChain::from_ratio(2, 3));
    CHECK_THROWS_AS(decompose_frostman_pieces(U, 0.1, 0.5), PreconditionError);
  }
  SUBCASE("spread coarse, single fine") {
    const ScaleChain chain = ScaleChain::from_ratio(2, 4);
    UniformSet U = uniformize(spaced_grid(), chain);
    REQUIRE(U.P == spaced_grid());
    CHECK(U.branching == std::vector<std::int64_t>{16, 16, 1, 1});
    MultiscaleDecomposition D = decompose_frostman_pieces(U, 0.1, 0.5);
    REQUIRE(D.found);
    CHECK(D.mass_lhs >= D.mass_rhs - 1e-9);
    CHECK(D.good_lhs >= D.good_rhs - 1e-9);
    CHECK(D.blocks.front().first == 0);
    CHECK(D.blocks.back().last == 4);
    CHECK_FALSE(D.good_blocks.empty());
    CHECK(verify_decomposition(U, D));
    MultiscaleDecomposition broken = D;
    broken.blocks.back().last = 3;
    CHECK_FALSE(verify_decomposition(U, broken));
  }
  SUBCASE("Ahlfors-regular set is one block") {
    const ScaleChain chain = ScaleChain::from_ratio(2, 4);
    UniformSet U = uniformize(gen_cantor(CantorPattern{1, {{0, 0}, {1, 1}}}, 8), chain);
    REQUIRE(U.branching == std::vector<std::int64_t>{4, 4, 4, 4});
    MultiscaleDecomposition D = decompose_frostman_pieces(U, 0.25, 0.3);
    REQUIRE(D.found);
    REQUIRE(D.blocks.size() == 1);
    CHECK(D.blocks[0].alpha == doctest::Approx(1.0));
    // (ii) with equality before the epsilon slack: alpha ln(1/delta) = ln |P|
    CHECK(D.mass_lhs == doctest::Approx(std::log(static_cast<double>(U.P.size()))));
    CHECK(verify_decomposition(U, D));
  }
  SUBCASE("two regimes give two blocks") {
    std::vector<Cell> dense, sparse{{0, 0}, {2, 2}};
    for (std::int64_t i = 0; i < 4; ++i) {
      for (std::int64_t j = 0; j < 4; ++j) {
        if ((i + j) % 2 == 0) dense.push_back({i, j});
      }
    }
    const ScaleChain chain = ScaleChain::from_ratio(2, 4);
    UniformSet U = uniformize(layered({dense, dense, sparse, sparse}), chain);
    REQUIRE(U.branching == std::vector<std::int64_t>{8, 8, 2, 2});
    MultiscaleDecomposition D = decompose_frostman_pieces(U, 0.75, 0.2);
    REQUIRE(D.found);
    REQUIRE(D.blocks.size() == 2);
    CHECK(D.blocks[0].alpha == doctest::Approx(1.5));
    CHECK(D.blocks[1].alpha == doctest::Approx(0.5));
    CHECK(verify_decomposition(U, D));
  }
  SUBCASE("no partition at tiny epsilon is reported") {
    const ScaleChain chain = ScaleChain::from_ratio(2, 4);
    UniformSet U = uniformize(spaced_grid(), chain);
    DecomposeOptions opt;
    opt.xi = 1.0;
    opt.tau = 0.25;
    MultiscaleDecomposition D = decompose_frostman_pieces(U, 1e-6, 0.5, opt);
    if (!D.found) CHECK_FALSE(D.reason.empty());
    else CHECK(verify_decomposition(U, D));
  }
}

TEST_CASE("structure classification") {
  SUBCASE("ball with Cantor slopes") {
    PointSet ball = gen_ball({1, 1, Scale(1)}, Radius::of(1, Scale(3)), Scale(6));
    NiceConfiguration c = build_product_config(ball, cantor_slope_set(Scale(6)), 0.5);
    ClassificationReport rep = classify_structure(c, 0.25);
    CHECK(rep.N == 4);
    CHECK(rep.points_final <= rep.points_initial);
    check_classification_rule(rep);
    CHECK(to_string(rep.classification).size() > 0);
  }
  SUBCASE("a single point: its tubes are not light") {
    // delta^{2 eta} |P|^{1/2} < 1, so no tube is light and no square is crowded
    PointSet P(Scale(6), {{7, 7}});
    std::vector<std::int64_t> slopes{-40, -20, 0, 20};
    NiceConfiguration c = build_nice_config(P, {slopes}, 4, 0.5);
    ClassificationReport rep = classify_structure(c, 0.5);
    CHECK(rep.light_threshold < 1.0);
    CHECK(rep.light_point_fraction == 0.0);
    CHECK(rep.classification == StructureClass::regular);
  }
  SUBCASE("random configurations follow the rule") {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      ClassificationReport rep = classify_structure(random_config({7, 0.5, 1.0, 4, seed}), 0.3);
      check_classification_rule(rep);
      CHECK(rep.certified_slice_fraction >= 0.0);
      CHECK(rep.certified_slice_fraction <= 1.0);
    }
  }
  CHECK_THROWS_AS(classify_structure(random_config({6, 0.5, 1.0, 4, 1}), 0.0), PreconditionError);
  CHECK(to_string(StructureClass::regular) == "REGULAR");
}
