#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "mixedlab/rho.hpp"
#include "oracles.hpp"

using namespace mixedlab;

TEST_CASE("constant and classical evaluation") {
  const RhoSpec c = RhoSpec::constant(2.0);
  CHECK(eval_rho(c, Point{3.1, 0, 0}).radius == 2.0);
  CHECK(c.factor(Point{}, 4.0) == 3.0);
  const RhoSpec cl = RhoSpec::classical();
  CHECK(cl.factor(Point{1, 2, 0}, 1e6) == 1.0);
  CHECK(cl.subcritical(Point{}, 1e6));
  CHECK_THROWS_AS(RhoSpec::constant(0.0), InvalidRho);
  CHECK_THROWS_AS(eval_rho(RhoSpec::analytic([](const Point&) { return -1.0; }, "neg"), Point{}), InvalidRho);
}

TEST_CASE("rho is positive at every grid point") {
  const Domain d(2, 8.0, 5);
  for (const RhoSpec& r : {RhoSpec::inverse_linear(1.0, Point{4, 4, 0}), RhoSpec::ramp(0.25),
                           RhoSpec::constant(0.5)})
    for (std::size_t c = 0; c < d.cell_count(); ++c) CHECK(eval_rho(r, d.cell_center(c)).radius > 0.0);
}

TEST_CASE("Shen radius for a constant potential") {
  // c (4 pi / 3) r^2 = 1
  const Domain d(3, 4.0, 6);
  const Point x{2.0, 2.0, 2.0};
  const double c = 3.0 / (4.0 * std::numbers::pi);
  const ShenValue r1 = shen_rho(GridFunction(d, c), x);
  CHECK_FALSE(r1.capped);
  CHECK(r1.radius == doctest::Approx(1.0).epsilon(0.02));
  const ShenValue r2 = shen_rho(GridFunction(d, 4.0 * c), x);
  CHECK(r2.radius == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("Shen radius is capped for a vanishing potential") {
  const Domain d(3, 2.0, 3);
  const ShenValue r = shen_rho(GridFunction(d, 0.0), Point{1, 1, 1});
  CHECK(r.capped);
  CHECK(r.radius == d.side());
  CHECK_THROWS_AS(RhoSpec::shen(GridFunction(d, 0.0)), InvalidWeight);
  CHECK_THROWS_AS(shen_rho(GridFunction(Domain(2, 1.0, 3), 1.0), Point{}), ParameterError);
}

TEST_CASE("Shen radius does not increase when V is enlarged") {
  std::mt19937_64 rng(11);
  const Domain d(3, 4.0, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> cell(0, d.cell_count() - 1);
  for (int trial = 0; trial < 20; ++trial) {
    GridFunction V(d, 0.0), W(d, 0.0);
    for (std::size_t c = 0; c < V.size(); ++c) {
      V[c] = u(rng);
      W[c] = V[c] + (u(rng) < 0.3 ? u(rng) : 0.0);
    }
    for (int s = 0; s < 5; ++s) {
      const Point x = d.cell_center(cell(rng));
      CHECK(shen_rho(W, x).radius <= shen_rho(V, x).radius);
    }
  }
}

TEST_CASE("admissibility of a constant rho is exact for every N0") {
  const AdmissibilityReport rep = audit_admissibility(RhoSpec::constant(0.7), Domain(1, 8.0, 6), 500, 3);
  CHECK(rep.C0 == 1.0);
  REQUIRE(rep.C0_per_N0.size() == rep.ladder.size());
  for (double c : rep.C0_per_N0) CHECK(c == 1.0);
  CHECK(rep.max_violation == 0.0);
}

TEST_CASE("admissibility certificate holds on the sampled pairs") {
  // 32 cells: 10^4 samples hit every pair with overwhelming probability
  const Domain d(1, 8.0, 5);
  const RhoSpec r = RhoSpec::inverse_linear(1.0);
  const AdmissibilityReport rep = audit_admissibility(r, d, 10000, 17);
  CHECK(std::isfinite(rep.C0));
  CHECK(rep.C0 >= 1.0);
  CHECK(rep.N0 >= 1.0);

  std::size_t bad = 0;
  for (std::size_t i = 0; i < d.cell_count(); ++i)
    for (std::size_t j = 0; j < d.cell_count(); ++j) {
      const Point x = d.cell_center(i), y = d.cell_center(j);
      const double rx = r(x), ry = r(y), base = 1.0 + distance(x, y, 1) / rx;
      if (ry < rx * std::pow(base, -rep.N0) / rep.C0 * (1 - 1e-12)) ++bad;
      if (ry > rep.C0 * rx * std::pow(base, rep.N0 / (rep.N0 + 1)) * (1 + 1e-12)) ++bad;
    }
  CHECK(bad == 0);
}

TEST_CASE("admissibility constant of a ramp reaching zero blows up under refinement") {
  const RhoSpec r = RhoSpec::ramp(1e-9);
  double prev = 0.0;
  for (int level : {4, 7, 10}) {
    const AdmissibilityReport rep = audit_admissibility(r, Domain(1, 8.0, level), 4000, 5);
    CHECK(rep.C0 > prev);
    prev = rep.C0;
  }
}

TEST_CASE("covering with a box-sized radius is one cube") {
  const CoveringReport rep = critical_covering(RhoSpec::constant(8.0), Domain(1, 8.0, 6));
  CHECK(rep.centers.size() == 1);
  CHECK(rep.overlap.at(0) == 1);
  CHECK(rep.covers_box);
}

TEST_CASE("covering count for a small constant radius in dim 1") {
  const double c = 0.25;
  const CoveringReport rep = critical_covering(RhoSpec::constant(c), Domain(1, 8.0, 8));
  const double expect = 8.0 / (2.0 * c);
  CHECK(rep.centers.size() >= expect / 2.0);
  CHECK(rep.centers.size() <= expect * 2.0);
  CHECK(rep.covers_box);
}

TEST_CASE("covering overlap profile for rho = 1/(1+|x|)") {
  for (int dim : {1, 2}) {
    const Domain d(dim, 8.0, dim == 1 ? 9 : 6);
    const CoveringReport rep = critical_covering(RhoSpec::inverse_linear(1.0), d);
    CHECK(rep.covers_box);
    REQUIRE(rep.overlap.size() == 3);
    for (int k : rep.overlap) CHECK(k >= 1);
    CHECK(rep.overlap[0] <= rep.overlap[1]);
    CHECK(rep.overlap[1] <= rep.overlap[2]);
    CHECK(rep.overlap[2] <= rep.C * std::pow(4.0, rep.N1) * (1 + 1e-12));

    // exact cover check: every center inside some selected cube
    const double sd = std::sqrt(static_cast<double>(dim));
    for (std::size_t c = 0; c < d.cell_count(); ++c) {
      const Point x = d.cell_center(c);
      bool in = false;
      for (std::size_t j = 0; j < rep.centers.size() && !in; ++j) {
        bool all = true;
        for (int a = 0; a < dim; ++a)
          all = all && std::fabs(x[a] - rep.centers[j][a]) <= rep.radii[j] / sd + 1e-12;
        in = all;
      }
      CHECK(in);
    }
  }
}
