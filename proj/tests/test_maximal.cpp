#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "mixedlab/maximal.hpp"
#include "oracles.hpp"

using namespace mixedlab;

namespace {

// sup over every interval of [0, n) containing the cell, with the rho factor
GridFunction brute_m(const GridFunction& f, const RhoSpec& rho, double sigma) {
  const Domain& d = f.domain();
  GridFunction m(d, 0.0);
  for (int a = 0; a < d.n(); ++a)
    for (int s = 1; a + s <= d.n(); ++s) {
      const Cube q{{a, 0, 0}, s};
      const double v = oracle::cube_avg(f, q) * std::pow(rho.factor(q.center(d), q.radius(d)), -sigma);
      for (int i = a; i < a + s; ++i) m[i] = std::max(m[i], v);
    }
  return m;
}

GridFunction indicator_first(const Domain& d) {
  GridFunction f(d, 0.0);
  f[0] = 1.0;
  return f;
}

}  // namespace

TEST_CASE("M of the first-cell indicator on eight cells") {
  const Domain d(1, 8.0, 3);
  const CubeFamily all(d, CubePolicy::AllCellAligned);
  CHECK(all.size() == 36);
  const GridFunction f = indicator_first(d);
  const GridFunction m = m_rho_sigma(f, RhoSpec::classical(), {0.0, 1.0}, all);
  CHECK(m[7] == 1.0 / 8.0);
  CHECK(m[1] == 1.0 / 2.0);
  CHECK(m[0] == 1.0);
  const GridFunction m1 = m_rho_sigma(f, RhoSpec::constant(1.0), {1.0, 1.0}, all);
  CHECK(m1[7] == doctest::Approx(1.0 / 40.0).epsilon(1e-15));
}

TEST_CASE("M^{rho,sigma} equals the brute-force interval sup") {
  std::mt19937_64 rng(31);
  const Domain d(1, 8.0, 6);
  const CubeFamily all(d, CubePolicy::AllCellAligned);
  const RhoSpec rho = RhoSpec::inverse_linear(2.0);
  for (int i = 0; i < 5; ++i) {
    const GridFunction f = oracle::random_function(d, rng);
    for (double sigma : {0.0, 1.0, 2.5}) {
      const GridFunction m = m_rho_sigma(f, rho, {sigma, 1.0}, all);
      const GridFunction b = brute_m(f, rho, sigma);
      for (std::size_t c = 0; c < m.size(); ++c) CHECK(m[c] == doctest::Approx(b[c]).epsilon(1e-12));
    }
  }
}

TEST_CASE("power-mean variant") {
  std::mt19937_64 rng(32);
  const Domain d(1, 8.0, 5);
  const CubeFamily all(d, CubePolicy::AllCellAligned);
  const GridFunction f = oracle::random_function(d, rng);
  const GridFunction mq = m_rho_sigma(f, RhoSpec::classical(), {0.0, 3.0}, all);
  const GridFunction ref = m_classical(f.abs().pow(3.0), all).pow(1.0 / 3.0);
  for (std::size_t c = 0; c < f.size(); ++c) CHECK(mq[c] == doctest::Approx(ref[c]).epsilon(1e-12));
  CHECK_THROWS_AS(m_rho_sigma(f, RhoSpec::classical(), {0.0, 0.5}, all), ParameterError);
}

TEST_CASE("an uncovered cell is an error") {
  const Domain d(1, 8.0, 3);
  const CubeFamily half(d, CubePolicy::DyadicGridOf, Cube{{0, 0, 0}, 4});
  CHECK_THROWS_AS(m_rho_sigma(GridFunction(d, 1.0), RhoSpec::classical(), {}, half), CoverageError);
}

TEST_CASE("dyadic maximal examples") {
  const Domain d(1, 4.0, 2);
  const GridFunction f(d, std::vector<double>{4, 0, 0, 0});
  const Cube R = whole_box(d);
  const GridFunction m = m_dyadic(f, R);
  CHECK(m[0] == 4.0);
  CHECK(m[1] == 2.0);
  CHECK(m[3] == 1.0);
  const GridFunction c = m_dyadic(GridFunction(d, 2.5), R);
  for (std::size_t i = 0; i < 4; ++i) CHECK(c[i] == 2.5);
  CHECK_THROWS_AS(m_dyadic(GridFunction(Domain(1, 1.0, 3), 1.0), Cube{{0, 0, 0}, 3}), ParameterError);
}

TEST_CASE("dyadic maximal equals brute force over all 511 dyadic intervals") {
  std::mt19937_64 rng(33);
  const Domain d(1, 1.0, 8);
  const Cube R = whole_box(d);
  CHECK(oracle::dyadic_subcubes(R, 1).size() == 511);
  for (int i = 0; i < 10; ++i) {
    const GridFunction f = oracle::random_integer_function(d, rng);
    const GridFunction m = m_dyadic(f, R), b = oracle::dyadic_max(f, R);
    for (std::size_t c = 0; c < f.size(); ++c) CHECK(m[c] == b[c]);
  }
  // dim 2 on a subcube, zero outside
  const Domain d2(2, 1.0, 4);
  const Cube R2{{8, 0, 0}, 8};
  const GridFunction f2 = oracle::random_integer_function(d2, rng);
  const GridFunction m2 = m_dyadic(f2, R2), b2 = oracle::dyadic_max(f2, R2);
  for (std::size_t c = 0; c < f2.size(); ++c) CHECK(m2[c] == b2[c]);
}

TEST_CASE("localized maximal examples") {
  const Domain d(1, 4.0, 2);
  const Cube R = whole_box(d);
  const GridFunction a(d, std::vector<double>{4, 0, 0, 0});
  CHECK(m_localized(a, R)[1] == 2.0);
  CHECK(m_dyadic(a, R)[1] == 2.0);
  const GridFunction b(d, std::vector<double>{0, 4, 0, 0});
  CHECK(m_localized(b, R)[0] == 2.0);
  const GridFunction z = m_localized(GridFunction(d, 0.0), R);
  for (std::size_t c = 0; c < 4; ++c) CHECK(z[c] == 0.0);
}

TEST_CASE("dyadic <= localized, both >= the average over R") {
  std::mt19937_64 rng(34);
  for (int dim : {1, 2}) {
    const Domain d(dim, 1.0, dim == 1 ? 7 : 4);
    for (int i = 0; i < 10; ++i) {
      const GridFunction f = oracle::random_function(d, rng);
      const Cube R = oracle::random_dyadic_side_cube(d, rng, 2);
      const GridFunction md = m_dyadic(f, R), ml = m_localized(f, R);
      const double avg = oracle::cube_avg(f, R);
      for_each_cell(d, R, [&](std::size_t c) {
        CHECK(md[c] <= ml[c] * (1 + 1e-12));
        CHECK(md[c] >= avg * (1 - 1e-12));
      });
    }
  }
}

TEST_CASE("dyadic weak (1,1) with constant 1") {
  std::mt19937_64 rng(35);
  const Domain d(1, 1.0, 9);
  const Cube R = whole_box(d);
  for (int i = 0; i < 20; ++i) {
    const GridFunction f = oracle::random_function(d, rng, 0.8);
    const GridFunction m = m_dyadic(f, R);
    const double mass = integrate(f.abs(), R);
    std::vector<double> vals(m.values().begin(), m.values().end());
    std::vector<double> cells(vals.size(), d.cell_volume());
    CHECK(oracle::weak_sup_exact(vals, cells) <= mass * (1 + 1e-12));
  }
}

TEST_CASE("sublinear, homogeneous, monotone, sigma-monotone") {
  std::mt19937_64 rng(36);
  const Domain d(2, 4.0, 4);
  const CubeFamily fam(d, CubePolicy::DyadicSides);
  const RhoSpec rho = RhoSpec::inverse_linear(1.0, Point{2, 2, 0});
  for (int i = 0; i < 5; ++i) {
    const GridFunction f = oracle::random_integer_function(d, rng), g = oracle::random_integer_function(d, rng);
    const MaximalParams p{1.0, 1.0};
    const GridFunction mf = m_rho_sigma(f, rho, p, fam), mg = m_rho_sigma(g, rho, p, fam);
    const GridFunction mfg = m_rho_sigma(f + g, rho, p, fam);
    const GridFunction m3 = m_rho_sigma(f.scaled(-3.0), rho, p, fam);
    const GridFunction big = m_rho_sigma(f + g.abs(), rho, p, fam);
    const GridFunction m2 = m_rho_sigma(f, rho, {2.0, 1.0}, fam);
    for (std::size_t c = 0; c < f.size(); ++c) {
      CHECK(mfg[c] <= (mf[c] + mg[c]) * (1 + 1e-12));
      CHECK(m3[c] == doctest::Approx(3.0 * mf[c]).epsilon(1e-14));
      CHECK(mf[c] <= big[c]);
      CHECK(m2[c] <= mf[c]);
    }
  }
}

TEST_CASE("local/global split") {
  std::mt19937_64 rng(37);
  const Domain d(1, 8.0, 6);
  const CubeFamily all(d, CubePolicy::AllCellAligned);
  const GridFunction f = oracle::random_function(d, rng);

  SUBCASE("rho = L makes every cube subcritical") {
    const LocGlobSplit s = loc_glob_split(f, RhoSpec::constant(8.0), 1.0, all);
    const GridFunction m0 = m_classical(f, all);
    for (std::size_t c = 0; c < f.size(); ++c) {
      CHECK(s.glob[c] == 0.0);
      CHECK(s.loc[c] == m0[c]);
    }
  }
  SUBCASE("rho = h/2 leaves only single cells") {
    const LocGlobSplit s = loc_glob_split(f, RhoSpec::constant(d.h() / 2.0), 1.0, all);
    for (std::size_t c = 0; c < f.size(); ++c) CHECK(s.loc[c] == doctest::Approx(std::fabs(f[c])).epsilon(1e-12));
    CHECK(s.upper_violations == 0);
  }
  SUBCASE("rho = 1 passes cellwise") {
    for (double sigma : {0.5, 1.0, 3.0}) {
      const LocGlobSplit s = loc_glob_split(f, RhoSpec::constant(1.0), sigma, all);
      CHECK(s.upper_violations == 0);
      CHECK(s.lower_violations == 0);
    }
  }
}

TEST_CASE("shifted grids: a grid-0 dyadic cube is its own parent") {
  const Domain d(1, 1.0, 7);
  const Cube q{{32, 0, 0}, 16};
  GridFunction f(d, 0.0);
  for_each_cell(d, q, [&](std::size_t c) { f[c] = 1.0 + c % 3; });
  const ShiftedGridReport r = shifted_grid_domination_audit(f, q);
  REQUIRE(r.parents.size() == 3);
  CHECK(r.parents[0] == q);
  CHECK(r.violations == 0);
}

TEST_CASE("shifted grids: no violations on random cubes") {
  std::mt19937_64 rng(38);
  for (int dim : {1, 2}) {
    const Domain d(dim, 1.0, dim == 1 ? 7 : 5);
    for (int i = 0; i < 30; ++i) {
      const GridFunction f = oracle::random_function(d, rng);
      std::uniform_int_distribution<int> side(1, d.n() / 2);
      Cube q{{}, side(rng)};
      std::uniform_int_distribution<int> at(0, d.n() - q.side);
      for (int a = 0; a < dim; ++a) q.anchor[a] = at(rng);
      const ShiftedGridReport r = shifted_grid_domination_audit(f, q);
      CHECK(r.violations == 0);
      for (const Cube& p : r.parents) CHECK(p.contains(q, dim));
      CHECK(r.lambda_best <= r.lambda);
    }
  }
}
