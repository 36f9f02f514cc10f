#include <doctest.h>

#include <set>

#include "incgeo/error.hpp"
#include "incgeo/pointsets.hpp"
#include "incgeo/tubes.hpp"
#include "oracles.hpp"

using namespace incgeo;

namespace {

TubeParam random_tube(Rng& rng, Scale delta, Chart chart = Chart::standard) {
  const std::int64_t n = delta.inverse();
  return {delta, static_cast<std::int64_t>(uniform_index(rng, 2 * n)) - n,
          static_cast<std::int64_t>(uniform_index(rng, 4 * n)) - 2 * n, chart};
}

TubeParam tp(Scale d, std::int64_t a, std::int64_t b) { return TubeParam{d, a, b, Chart::standard}; }

} // namespace

TEST_CASE("tube parameters") {
  const Scale d(4);
  CHECK_NOTHROW(tp(d, -16, -32).validate());
  CHECK_NOTHROW(tp(d, 15, 31).validate());
  CHECK_THROWS_AS(tp(d, 16, 0).validate(), PreconditionError);
  CHECK_THROWS_AS(tp(d, 0, 32).validate(), PreconditionError);
  CHECK(tp(d, 1, 2) == tp(d, 1, 2));
  CHECK_FALSE(tp(d, 1, 2) == tp(Scale(5), 1, 2));
}

TEST_CASE("line predicate endpoints") {
  // y = a x + b with a, x, b in [0, 1) never reaches 2
  const Interval u = Interval::half_open(0, 1);
  CHECK_FALSE(lines_meet(u, u, u, Interval::half_open(2, 3)));
  const Interval c{0, 1, true, true};
  CHECK(lines_meet(c, c, c, Interval::half_open(2, 3)));
  CHECK(lines_meet(u, u, u, Interval{-5, 0, false, true}));
  CHECK_FALSE(lines_meet(u, u, Interval{0, 1, false, false}, Interval{-5, 0, false, true}));
}

TEST_CASE("tube meets square: worked examples") {
  const Scale d(4);
  CHECK(tube_meets_square({d, 0, 0}, DyadicSquare(d, 0, 0)));
  CHECK_FALSE(tube_meets_square({d, 0, 0}, DyadicSquare(d, 0, 8)));
  // a in [1/2, 1/2 + d), b in [0, d): at x = 1/2 the section is [1/4, 1/4 + 3d/2)
  CHECK(tube_meets_square({d, 8, 0}, DyadicSquare(d, 8, 4)));
  CHECK_FALSE(tube_meets_square({d, 8, 0}, DyadicSquare(d, 8, 7)));
}

TEST_CASE("tube meets square agrees with sampled rasterization") {
  // every sampled interior line that crosses the square must be detected, and
  // every detected incidence must be near a sampled crossing
  auto compare = [](const TubeParam& T, std::int64_t i, std::int64_t j) {
    const bool meets = tube_meets_square(T, DyadicSquare(T.scale, i, j));
    if (oracle::tube_hits_sampled(T, i, j, 6)) CHECK(meets);
    if (meets) CHECK(oracle::tube_hits_sampled(T, i, j, 6, 1, 4));
  };
  SUBCASE("exhaustive at delta = 2^-3") {
    const Scale d(3);
    for (std::int64_t a = -8; a < 8; ++a) {
      for (std::int64_t b = -16; b < 16; ++b) {
        for (std::int64_t i = 0; i < 8; ++i) {
          for (std::int64_t j = 0; j < 8; ++j) compare({d, a, b}, i, j);
        }
      }
    }
  }
  SUBCASE("random at delta = 2^-6") {
    Rng rng(77);
    for (int k = 0; k < 3000; ++k) {
      const TubeParam T = random_tube(rng, Scale(6));
      compare(T, static_cast<std::int64_t>(uniform_index(rng, 64)), static_cast<std::int64_t>(uniform_index(rng, 64)));
    }
  }
}

TEST_CASE("vertical chart swaps the coordinates") {
  Rng rng(12);
  const Scale d(5);
  for (int k = 0; k < 500; ++k) {
    TubeParam T = random_tube(rng, d);
    TubeParam V = T;
    V.chart = Chart::vertical;
    const auto i = static_cast<std::int64_t>(uniform_index(rng, 32));
    const auto j = static_cast<std::int64_t>(uniform_index(rng, 32));
    CHECK(tube_meets_square(V, DyadicSquare(d, i, j)) == tube_meets_square(T, DyadicSquare(d, j, i)));
  }
}

TEST_CASE("tube point counts") {
  const Scale d(4);
  PointSet G = full_grid(d);
  CHECK(tube_point_count({d, 0, 0}, G) == 32);
  CHECK(tube_point_count({d, 0, 0}, PointSet(d, {{3, 0}})) == 1);
  CHECK(tube_point_count({d, 0, 20}, G) == 0);

  Rng rng(4);
  for (int k = 0; k < 40; ++k) {
    const int m = 3 + static_cast<int>(uniform_index(rng, 4));
    PointSet P = gen_random_frostman(0.5 + 1.5 * uniform01(rng), Scale(m), rng()).set;
    ColumnIndex idx(P);
    for (int t = 0; t < 30; ++t) {
      const TubeParam T = random_tube(rng, Scale(m), t % 5 == 0 ? Chart::vertical : Chart::standard);
      std::vector<std::size_t> scan;
      for (std::size_t p = 0; p < P.size(); ++p) {
        if (tube_meets_square(T, P.square(p))) scan.push_back(p);
      }
      CHECK(tube_point_count(T, P) == static_cast<std::int64_t>(scan.size()));
      CHECK(tube_point_count(T, P, idx) == static_cast<std::int64_t>(scan.size()));
      CHECK(tube_points(T, P, idx) == scan);
    }
  }
}

TEST_CASE("tube families") {
  const Scale d(4);
  TubeFamily F(d, {{d, 3, 1}, {d, -2, 5}, {d, 3, 1}});
  CHECK(F.size() == 2);
  CHECK(F.contains({d, -2, 5}));
  CHECK_FALSE(F.contains({d, -2, 6}));
  CHECK(F.params().front().a == -2);
  CHECK_THROWS_AS(TubeFamily(d, {{Scale(5), 0, 0}}), PreconditionError);
  CHECK_THROWS_AS(TubeFamily(d, {{d, 40, 0}}), PreconditionError);
  TubeFamily mixed(d, {{d, 0, 0, Chart::standard}, {d, 0, 0, Chart::vertical}});
  CHECK(mixed.size() == 2);
  CHECK_THROWS_AS(mixed.parameter_set(), PreconditionError);
  PointSet params = F.parameter_set();
  CHECK(params.size() == 2);
  CHECK(params.contains({3, 1}));
  CHECK(F.certificate(1.0).C == frostman_constant(params, 1.0).C);
}

TEST_CASE("tubes through a square") {
  const Scale d(4);
  SUBCASE("one slope") {
    TubeFamily F = tubes_through(DyadicSquare(d, 0, 0), {0}, d);
    REQUIRE(F.size() == 1);
    CHECK(tube_meets_square(F.params()[0], DyadicSquare(d, 0, 0)));
  }
  SUBCASE("all slopes through the center of the unit square") {
    std::vector<std::int64_t> slopes;
    for (std::int64_t a = -16; a < 16; ++a) slopes.push_back(a);
    TubeFamily F = tubes_through(DyadicSquare::unit(), slopes, d);
    CHECK(F.size() == 32);
    std::set<std::int64_t> seen;
    for (const auto& T : F.params()) {
      CHECK(tube_meets_square(T, DyadicSquare::unit()));
      seen.insert(T.a);
    }
    CHECK(seen.size() == 32);
    CHECK(F.certificate(1.0).C <= 4.0);
  }
  SUBCASE("random squares and slopes: every tube meets its square") {
    Rng rng(99);
    for (int k = 0; k < 200; ++k) {
      const int m = 2 + static_cast<int>(uniform_index(rng, 8));
      const Scale dm(m);
      const std::int64_t n = dm.inverse();
      DyadicSquare q(dm, static_cast<std::int64_t>(uniform_index(rng, n)), static_cast<std::int64_t>(uniform_index(rng, n)));
      std::vector<std::int64_t> slopes;
      for (int s = 0; s < 6; ++s) slopes.push_back(static_cast<std::int64_t>(uniform_index(rng, 2 * n)) - n);
      const TubeFamily F = tubes_through(q, slopes, dm);
      for (const auto& T : F.params()) CHECK(tube_meets_square(T, q));
    }
  }
  SUBCASE("slope out of range") { CHECK_THROWS_AS(tubes_through(DyadicSquare(d, 0, 0), {16}, d), PreconditionError); }
}

TEST_CASE("tube cover") {
  Rng rng(6);
  const Scale d(6);
  std::vector<TubeParam> params;
  for (int k = 0; k < 64; ++k) params.push_back(random_tube(rng, d));
  TubeFamily F(d, params);
  CHECK(tube_cover(F, d) == F);
  std::set<std::pair<std::int64_t, std::int64_t>> ancestors;
  for (const auto& T : F.params()) ancestors.insert({oracle::fdiv(T.a, 8), oracle::fdiv(T.b, 8)});
  TubeFamily C = tube_cover(F, Scale(3));
  CHECK(C.size() == ancestors.size());
  for (const auto& T : C.params()) CHECK(ancestors.count({T.a, T.b}) == 1);
  TubeFamily tight(d, {{d, 8, 8}, {d, 9, 15}, {d, 15, 9}});
  CHECK(tube_cover(tight, Scale(3)).size() == 1);
  CHECK_THROWS_AS(tube_cover(F, Scale(7)), InvalidScale);
}
