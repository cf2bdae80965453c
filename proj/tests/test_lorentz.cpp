#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <random>

#include "mixedlab/lorentz.hpp"
#include "mixedlab/maximal.hpp"
#include "oracles.hpp"

using namespace mixedlab;

namespace {

constexpr double kInfty = std::numeric_limits<double>::infinity();

GridFunction density(const Domain& d, std::mt19937_64& rng) {
  // dyadic rationals keep the masses exact
  std::uniform_int_distribution<int> k(1, 8);
  GridFunction w(d, 1.0);
  for (std::size_t c = 0; c < w.size(); ++c) w[c] = k(rng) / 4.0;
  return w;
}

}  // namespace

TEST_CASE("distribution and rearrangement of [3,1,2]") {
  // a fourth zero cell pads to a power of two
  const Domain d(1, 4.0, 2);
  const GridFunction f(d, std::vector<double>{3, 1, 2, 0});
  const WeightedMeasure leb(d);
  CHECK(distribution(f, leb, 1.5) == 2.0);
  CHECK(distribution(f, leb, 3.0) == 0.0);
  CHECK(distribution(f, leb, 10.0) == 0.0);
  const RearrangementTable t = rearrangement(f, leb);
  CHECK(t.value == std::vector<double>{3, 2, 1});
  CHECK(t.mass == std::vector<double>{1, 2, 3});
  CHECK(t(0.0) == 3.0);
  CHECK(t(0.99) == 3.0);
  CHECK(t(1.0) == 2.0);
  CHECK(t(2.5) == 1.0);
  CHECK(t(3.0) == 0.0);
  CHECK_THROWS_AS(distribution(f, leb, -1.0), ParameterError);
}

TEST_CASE("distribution matches a cell filter") {
  std::mt19937_64 rng(61);
  const Domain d(2, 2.0, 4);
  const GridFunction f = oracle::random_function(d, rng);
  const GridFunction w = density(d, rng);
  const WeightedMeasure mu(w);
  std::uniform_real_distribution<double> s(0.0, 1.1);
  for (int i = 0; i < 100; ++i) {
    const double level = s(rng);
    double m = 0.0;
    for (std::size_t c = 0; c < f.size(); ++c)
      if (std::fabs(f[c]) > level) m += w[c] * d.cell_volume();
    CHECK(distribution(f, mu, level) == doctest::Approx(m).epsilon(1e-13));
  }
}

TEST_CASE("indicator rearrangement and norms") {
  const Domain d(1, 8.0, 5);
  GridFunction f(d, 0.0);
  for (int i = 4; i < 14; ++i) f[i] = 2.5;
  const WeightedMeasure leb(d);
  const double m = 10 * d.h();
  const RearrangementTable t = rearrangement(f, leb);
  REQUIRE(t.value.size() == 1);
  CHECK(t.value[0] == 2.5);
  CHECK(t.mass[0] == m);

  const GridFunction chi = f.scaled(1.0 / 2.5);
  for (double p : {1.0, 1.5, 2.0, 4.0})
    for (double q : {0.5, 1.0, 2.0, 3.0}) {
      const double expect = std::pow(p / q, 1.0 / q) * std::pow(m, 1.0 / p);
      CHECK(lorentz_norm(chi, leb, p, q) == doctest::Approx(expect).epsilon(1e-13));
    }
  for (double p : {1.0, 2.0, 3.0})
    CHECK(lorentz_norm(chi, leb, p, kInfty) == doctest::Approx(std::pow(m, 1.0 / p)).epsilon(1e-14));
  CHECK(lorentz_norm(chi, leb, kInfty, kInfty) == 1.0);
  CHECK_THROWS_AS(lorentz_norm(chi, leb, kInfty, 2.0), ParameterError);
  CHECK_THROWS_AS(lorentz_norm(chi, leb, 0.0, 2.0), ParameterError);
}

TEST_CASE("homogeneity, layer cake and the generalized inverse") {
  std::mt19937_64 rng(62);
  const Domain d(1, 4.0, 7);
  const WeightedMeasure mu(density(d, rng));
  std::uniform_real_distribution<double> cd(-5.0, 5.0);
  for (int i = 0; i < 50; ++i) {
    const GridFunction f = oracle::random_function(d, rng);
    const double c = cd(rng);
    for (double p : {1.0, 2.0, 3.5})
      for (double q : {1.0, 2.0, kInfty})
        CHECK(lorentz_norm(f.scaled(c), mu, p, q) == doctest::Approx(std::fabs(c) * lorentz_norm(f, mu, p, q)).epsilon(1e-12));

    for (double p : {1.0, 2.0, 3.0}) {
      double lp = 0.0;
      for (std::size_t x = 0; x < f.size(); ++x) lp += std::pow(std::fabs(f[x]), p) * mu.cell_mass(x);
      CHECK(std::pow(lorentz_norm(f, mu, p, p), p) == doctest::Approx(lp).epsilon(1e-12));
    }

    const RearrangementTable t = rearrangement(f, mu);
    std::uniform_real_distribution<double> s(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
      const double level = s(rng);
      CHECK(t(distribution(f, mu, level)) <= level);
    }
  }
}

TEST_CASE("the five rearrangement properties on integer data") {
  std::mt19937_64 rng(63);
  const Domain d(1, 16.0, 4);  // unit cells: integer masses
  const WeightedMeasure leb(d);
  std::uniform_int_distribution<int> ti(0, 17);
  std::uniform_int_distribution<int> si(0, 10);
  for (int i = 0; i < 1000; ++i) {
    const GridFunction f = oracle::random_integer_function(d, rng, 9, 0.3);
    const GridFunction g = oracle::random_integer_function(d, rng, 9, 0.3);
    const RearrangementTable tf = rearrangement(f, leb), tg = rearrangement(g, leb), tfg = rearrangement(f + g, leb);
    const double t1 = ti(rng), t2 = ti(rng), s = si(rng);
    // lambda_f(f*(t)) <= t
    CHECK(distribution(f, leb, tf(t1)) <= t1);
    // f*(t) > s  iff  t < lambda_f(s)
    CHECK((tf(t1) > s) == (t1 < distribution(f, leb, s)));
    // subadditivity
    CHECK(tfg(t1 + t2) <= tf(t1) + tg(t2));
    // monotone in t, f*(0) is the sup
    CHECK(tf(std::max(t1, t2)) <= tf(std::min(t1, t2)));
    CHECK(tf(0.0) == f.abs().max());
    // |f| <= |h| pointwise gives f* <= h*
    const RearrangementTable th = rearrangement(f.abs() + g.abs(), leb);
    CHECK(tf(t1) <= th(t1));
  }
}

TEST_CASE("weak sup is the L^{1,inf} norm") {
  std::mt19937_64 rng(64);
  const Domain d(1, 8.0, 6);
  const GridFunction w = density(d, rng);
  const WeightedMeasure mu(w);
  for (int i = 0; i < 20; ++i) {
    const GridFunction f = oracle::random_function(d, rng);
    std::vector<double> F(f.size()), m(f.size());
    for (std::size_t c = 0; c < f.size(); ++c) {
      F[c] = std::fabs(f[c]);
      m[c] = mu.cell_mass(c);
    }
    CHECK(weak_sup(f, mu) == doctest::Approx(oracle::weak_sup_exact(F, m)).epsilon(1e-13));
    CHECK(weak_sup(f, mu, {0.25, 0.5}) <= weak_sup(f, mu) * (1 + 1e-13));
  }
}

TEST_CASE("truncations split f") {
  std::mt19937_64 rng(65);
  const Domain d(1, 8.0, 5);
  const GridFunction f = oracle::random_function(d, rng);
  const GridFunction lo = truncate_below(f, 0.5), hi = truncate_above(f, 0.5);
  for (std::size_t c = 0; c < f.size(); ++c) CHECK(lo[c] + hi[c] == f[c]);
}

TEST_CASE("interpolation audit with the identity") {
  std::mt19937_64 rng(66);
  const Domain d(1, 8.0, 6);
  const WeightedMeasure leb(d);
  std::vector<GridFunction> suite;
  for (int i = 0; i < 20; ++i) suite.push_back(oracle::random_function(d, rng));
  const Operator id = [](const GridFunction& f) { return f; };
  const InterpolationReport r = interpolation_audit(id, 1.5, 1.0, 1.0, 3.0, leb, suite);
  CHECK(r.constant > 1.0);
  CHECK(r.conclusion_violations == 0);
  CHECK(r.hypothesis_violations == 0);
  CHECK_THROWS_AS(interpolation_audit(id, 1.5, 1.0, 1.0, 1.5, leb, suite), ParameterError);
}

TEST_CASE("interpolation audit for the maximal operator, with a negative control") {
  std::mt19937_64 rng(67);
  const Domain d(1, 8.0, 6);
  const WeightedMeasure leb(d);
  const CubeFamily all(d, CubePolicy::AllCellAligned);
  std::vector<GridFunction> suite;
  for (int i = 0; i < 30; ++i) suite.push_back(oracle::random_function(d, rng, 0.6));
  const Operator M = [&](const GridFunction& f) { return m_classical(f, all); };
  const EndpointConstants c = measure_endpoint_constants(M, 1.5, leb, suite);
  CHECK(c.C1 == doctest::Approx(1.0));
  const InterpolationReport r = interpolation_audit(M, 1.5, std::nullopt, std::nullopt, 3.0, leb, suite);
  CHECK(r.conclusion_violations == 0);
  CHECK(r.hypothesis_violations == 0);
  const InterpolationReport neg = interpolation_audit(M, 1.5, c.C0 / 2.0, c.C1, 3.0, leb, suite);
  CHECK(neg.hypothesis_violations > 0);
  CHECK_FALSE(neg.violations.empty());
}
