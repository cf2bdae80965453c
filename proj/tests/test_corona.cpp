#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "mixedlab/corona.hpp"
#include "oracles.hpp"

using namespace mixedlab;

namespace {

CellSet cells_of(const Domain& d, const std::vector<Cube>& cubes) {
  CellSet s(d.cell_count(), 0);
  for (const Cube& q : cubes) for_each_cell(d, q, [&](std::size_t c) { s[c] = 1; });
  return s;
}

bool strictly_inside(const Cube& q, const Cube& p, int dim) { return q != p && p.contains(q, dim); }

// Principal generations re-derived from the containment poset of the elements.
std::map<Cube, int> poset_generations(const std::vector<ForestElement>& el, const GridFunction& u, int dim) {
  std::map<Cube, int> gen;
  std::vector<Cube> current;
  for (const ForestElement& e : el) {
    bool top = true;
    for (const ForestElement& o : el) top = top && !strictly_inside(e.cube, o.cube, dim);
    if (top && !gen.count(e.cube)) {
      gen[e.cube] = 0;
      current.push_back(e.cube);
    }
  }
  for (int g = 1; !current.empty(); ++g) {
    std::vector<Cube> next;
    for (const Cube& P : current) {
      const double thr = 2.0 * oracle::cube_avg(u, P);
      for (const ForestElement& e : el) {
        if (!strictly_inside(e.cube, P, dim) || oracle::cube_avg(u, e.cube) <= thr) continue;
        bool maximal = true;
        for (const ForestElement& o : el)
          if (strictly_inside(e.cube, o.cube, dim) && strictly_inside(o.cube, P, dim) &&
              oracle::cube_avg(u, o.cube) > thr)
            maximal = false;
        if (maximal && !gen.count(e.cube)) {
          gen[e.cube] = g;
          next.push_back(e.cube);
        }
      }
    }
    current = next;
  }
  return gen;
}

}  // namespace

TEST_CASE("band arithmetic") {
  CHECK(band_index(1.0, 4.0) == -1);
  CHECK(band_index(4.0, 4.0) == 0);
  CHECK(band_index(4.0000001, 4.0) == 1);
  CHECK(band_index(0.25, 4.0) == -2);
  CHECK(int_power(4.0, -2) == 1.0 / 16.0);
  CHECK_THROWS_AS(band_index(0.0, 4.0), ParameterError);
}

TEST_CASE("CZ on [4,0,0,0]") {
  const Domain d(1, 4.0, 2);
  const GridFunction g(d, std::vector<double>{4, 0, 0, 0});
  const auto cubes = cz_on_cube(g, whole_box(d), 1.0);
  REQUIRE(cubes.size() == 1);
  CHECK(cubes[0] == Cube{{0, 0, 0}, 2});
  CHECK(cz_on_cube(GridFunction(d, 3.0), whole_box(d), 3.0).empty());
  CHECK_THROWS_AS(cz_on_cube(g, whole_box(d), 0.5), PreconditionError);
}

TEST_CASE("CZ cubes are disjoint, bounded and cover {M^D > lambda} exactly") {
  std::mt19937_64 rng(41);
  for (int dim : {1, 2}) {
    const Domain d(dim, 1.0, dim == 1 ? 10 : 5);
    const Cube R = whole_box(d);
    const double cap = std::pow(2.0, dim);
    for (int i = 0; i < 20; ++i) {
      const GridFunction g = oracle::random_integer_function(d, rng, 100, 0.7);
      const double lambda = 2.0 * oracle::cube_avg(g, R);
      const auto cubes = cz_on_cube(g, R, lambda);
      const GridFunction md = oracle::dyadic_max(g, R);
      std::vector<int> hits(d.cell_count(), 0);
      for (const Cube& q : cubes) {
        const double avg = oracle::cube_avg(g, q);
        CHECK(avg > lambda);
        CHECK(avg <= cap * lambda);
        for_each_cell(d, q, [&](std::size_t c) { ++hits[c]; });
      }
      for (std::size_t c = 0; c < d.cell_count(); ++c) {
        CHECK(hits[c] <= 1);
        CHECK((hits[c] == 1) == (md[c] > lambda));
      }
    }
  }
}

TEST_CASE("level decomposition examples") {
  const Domain d(1, 4.0, 2);
  const LevelDecomposition one = level_decomposition(GridFunction(d, 1.0), whole_box(d), 4.0);
  CHECK_FALSE(one.empty);
  CHECK(one.k0 == 0);
  CHECK(one.levels() == 0);

  const LevelDecomposition dec =
      level_decomposition(GridFunction(d, std::vector<double>{4, 0, 0, 0}), whole_box(d), 4.0);
  CHECK(dec.k0 == 0);
  REQUIRE(dec.levels() == 1);
  CHECK(dec.omega[0] == CellSet{1, 1, 0, 0});

  CHECK(level_decomposition(GridFunction(d, 0.0), whole_box(d), 4.0).empty);
  CHECK_THROWS_AS(level_decomposition(GridFunction(d, 1.0), whole_box(d), 2.0), ParameterError);
}

TEST_CASE("level decomposition invariants on random data") {
  std::mt19937_64 rng(42);
  for (int i = 0; i < 100; ++i) {
    const int dim = 1 + i % 2;
    const Domain d(dim, 1.0, dim == 1 ? 8 : 4);
    const Cube R = whole_box(d);
    const double a = std::pow(2.0, dim + 1);
    const GridFunction g = oracle::random_integer_function(d, rng, 1000, 0.6);
    const LevelDecomposition dec = level_decomposition(g, R, a);
    if (dec.empty) continue;
    const double avg = oracle::cube_avg(g, R);
    CHECK(int_power(a, dec.k0 - 1) < avg);
    CHECK(avg <= int_power(a, dec.k0));
    for (int l = 0; l < dec.levels(); ++l) {
      const double ak = int_power(a, dec.k0 + l);
      CHECK(dec.omega[l] == cells_of(d, dec.cubes[l]));
      for (const Cube& q : dec.cubes[l]) {
        CHECK(oracle::cube_avg(g, q) > ak);
        CHECK(oracle::cube_avg(g, q) <= std::pow(2.0, dim) * ak);
      }
      if (l + 1 < dec.levels())
        for (std::size_t c = 0; c < d.cell_count(); ++c) CHECK((dec.omega[l + 1][c] <= dec.omega[l][c]));
    }
  }
}

TEST_CASE("constant v puts every cube of level k >= 1 in the -1 band") {
  const Domain d(1, 1.0, 6);
  GridFunction g(d, 0.0);
  g[17] = 1000.0;
  const LevelDecomposition dec = level_decomposition(g, whole_box(d), 4.0);
  const ClassifiedCubes cls = classify(dec, GridFunction(d, 1.0));
  CHECK_FALSE(cls.primary.empty());
  for (const PrimaryCube& p : cls.primary)
    if (p.k >= 1) CHECK(p.ell == -1);
  CHECK(cls.secondary.empty());
}

TEST_CASE("classification agrees with a per-cube recheck") {
  std::mt19937_64 rng(43);
  const double a = 4.0;
  bool some_gamma = false;
  for (int i = 0; i < 20; ++i) {
    const Domain d(1, 8.0, 8);
    const GridFunction v = two_band_weight(1.0, a * a, 0.5 + 0.25 * (i % 4))(d);
    // sparse and small, so the top level sits low enough to meet the v = a^2 band
    const GridFunction f = oracle::random_integer_function(d, rng, 4, 0.97);
    const LevelDecomposition dec = level_decomposition(f * v, whole_box(d), a);
    const ClassifiedCubes cls = classify(dec, v);
    for (const PrimaryCube& p : cls.primary) {
      const double av = oracle::cube_avg(v, p.cube), ak = int_power(a, p.k);
      CHECK(p.avg_v == doctest::Approx(av).epsilon(1e-14));
      if (av < ak) {
        CHECK(p.ell == -1);
      } else {
        CHECK(int_power(a, p.k + p.ell) <= av);
        CHECK(av < int_power(a, p.k + p.ell + 1));
        bool meets = false;
        for_each_cell(d, p.cube, [&](std::size_t c) { meets = meets || (v[c] > ak && v[c] <= a * ak); });
        CHECK(p.gamma == meets);
        some_gamma = some_gamma || p.gamma;
      }
    }
    for (const SecondaryCube& s : cls.secondary) {
      const PrimaryCube& host = cls.primary.at(s.primary);
      CHECK(host.ell == -1);
      CHECK(host.cube.contains(s.cube, 1));
      const double av = oracle::cube_avg(v, s.cube), ak = int_power(a, s.k);
      CHECK(av > ak);
      CHECK(av <= 2.0 * ak);
    }
  }
  CHECK(some_gamma);
}

TEST_CASE("u = 1 selects only the maximal elements") {
  std::mt19937_64 rng(44);
  const Domain d(1, 8.0, 8);
  const GridFunction u(d, 1.0);
  const GridFunction v = two_band_weight(1.0, 16.0, 0.5)(d);
  for (int i = 0; i < 10; ++i) {
    const GridFunction f = oracle::random_integer_function(d, rng, 50, 0.9);
    const CoronaRun run = run_corona(f, u, v, whole_box(d), RhoSpec::classical());
    for (const PrincipalForest& F : run.forests) {
      if (F.branch < 0) continue;
      CHECK(F.generations() <= 1);
      for (std::size_t c = 0; c < d.cell_count(); ++c) CHECK(F.h[c] <= 1.0);
    }
    CHECK(run.claims.h1_violations == 0);
  }
}

TEST_CASE("principal generations match the poset oracle") {
  std::mt19937_64 rng(45);
  const Domain d(1, 8.0, 9);
  int deepest = 0;
  for (int i = 0; i < 15; ++i) {
    GridFunction u = power_weight(Point{1.0 + 0.5 * i, 0, 0}, -0.9)(d);
    GridFunction v = two_band_weight(1.0, 16.0, 0.25 + 0.125 * (i % 3))(d);
    GridFunction f = oracle::random_integer_function(d, rng, 4, 0.97);
    if (i >= 12) {
      // spike at a shared singularity: nested principal cubes
      u = v = power_weight(Point{4.001, 0, 0}, -0.9)(d);
      f = GridFunction(d, 0.0);
      f[256] = i == 12 ? 1.0 : 10.0;
      f[300] = f[256] / (i - 11);
    }
    const CoronaRun run = run_corona(f, u, v, whole_box(d), RhoSpec::classical());
    for (const PrincipalForest& F : run.forests) {
      // totality: every element assigned to a principal containing it, and the smallest one
      REQUIRE(F.assignment.size() == F.elements.size());
      std::set<std::size_t> principal(F.principal.begin(), F.principal.end());
      for (std::size_t e = 0; e < F.elements.size(); ++e) {
        const std::size_t p = F.assignment[e];
        CHECK(principal.count(p) == 1);
        CHECK(F.elements[p].cube.contains(F.elements[e].cube, 1));
        for (std::size_t q : F.principal)
          if (F.elements[q].cube.contains(F.elements[e].cube, 1))
            CHECK(F.elements[p].cube.side <= F.elements[q].cube.side);
      }
      for (std::size_t j = 0; j < F.principal.size(); ++j)
        if (F.parent[j] >= 0) CHECK(strictly_inside(F.elements[F.principal[j]].cube, F.elements[F.parent[j]].cube, 1));
      if (F.branch < 0) continue;

      const auto gen = poset_generations(F.elements, u, 1);
      CHECK(gen.size() == F.principal.size());
      for (std::size_t j = 0; j < F.principal.size(); ++j) {
        const auto it = gen.find(F.elements[F.principal[j]].cube);
        REQUIRE(it != gen.end());
        CHECK(it->second == F.generation[j]);
      }
      deepest = std::max(deepest, F.generations());

      GridFunction h(d, 0.0);
      for (const auto& [q, g] : gen) {
        const double a = oracle::cube_avg(u, q);
        for_each_cell(d, q, [&](std::size_t c) { h[c] += a; });
      }
      for (std::size_t c = 0; c < d.cell_count(); ++c) CHECK(F.h[c] == doctest::Approx(h[c]).epsilon(1e-12));
    }
    CHECK(run.claims.h1_violations == 0);
  }
  CHECK(deepest >= 2);
}

TEST_CASE("the -1 branch rejects delta outside (0, eps)") {
  const Domain d(1, 1.0, 4);
  const ClassifiedCubes cls;
  CHECK_THROWS_AS(principal_select(cls, GridFunction(d, 1.0), -1, 0.5, 0.5), ParameterError);
  CHECK_THROWS_AS(principal_select(cls, GridFunction(d, 1.0), -1, 0.0, 0.5), ParameterError);
}

TEST_CASE("lemma audits are vacuous for v = 1") {
  std::mt19937_64 rng(46);
  const Domain d(1, 8.0, 7);
  const GridFunction f = oracle::random_integer_function(d, rng, 50, 0.8);
  const GridFunction one(d, 1.0);
  const CoronaRun run = run_corona(f, power_weight(Point{3, 0, 0}, -0.5)(d), one, whole_box(d), RhoSpec::classical());
  CHECK(run.lemmas.sparsity_vacuous);
  CHECK_FALSE(run.lemmas.exponential_conclusive);
}

TEST_CASE("mixed dyadic examples") {
  const Domain d(1, 4.0, 2);
  const GridFunction one(d, 1.0);
  const GridFunction f(d, std::vector<double>{4, 0, 0, 0});
  const DyadicMixedReport r = mixed_verify_dyadic(f, one, one, whole_box(d), 4.0);
  CHECK(r.lhs == 2.0);
  CHECK(r.rhs == 4.0);
  CHECK(r.ratio == 0.5);
  CHECK(r.tail + r.head == r.lhs);
}

TEST_CASE("mixed dyadic with v = 1 is the weighted weak (1,1) level set") {
  std::mt19937_64 rng(47);
  const Domain d(1, 8.0, 8);
  const Cube R = whole_box(d);
  const GridFunction u = power_weight(Point{5, 0, 0}, -0.6)(d), one(d, 1.0);
  for (int i = 0; i < 10; ++i) {
    const GridFunction f = oracle::random_function(d, rng, 0.8);
    const GridFunction md = oracle::dyadic_max(f, R);
    for (double t : {0.1, 0.5, 2.0}) {
      const DyadicMixedReport r = mixed_verify_dyadic(f, u, one, R, 4.0, t);
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t c = 0; c < d.cell_count(); ++c) {
        if (md[c] > t) lhs += u[c] * d.cell_volume();
        rhs += std::fabs(f[c]) * u[c] * d.cell_volume();
      }
      CHECK(r.lhs == doctest::Approx(lhs).epsilon(1e-12));
      CHECK(r.ratio == doctest::Approx(t * lhs / rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("global mixed measurement") {
  std::mt19937_64 rng(48);
  const Domain d(1, 8.0, 7);
  const CubeFamily all(d, CubePolicy::AllCellAligned);
  const GridFunction one(d, 1.0);
  const GridFunction u = power_weight(Point{5, 0, 0}, -0.6)(d);

  CHECK(mixed_verify_global(GridFunction(d, 0.0), u, one, RhoSpec::classical(), 0.0, all).constant == 0.0);

  for (int i = 0; i < 5; ++i) {
    const GridFunction f = oracle::random_function(d, rng, 0.8);
    const GridFunction m = m_classical(f, all);
    std::vector<double> F(m.values().begin(), m.values().end()), leb(F.size(), d.cell_volume()), wu(F.size());
    double mass = 0.0, umass = 0.0;
    for (std::size_t c = 0; c < F.size(); ++c) {
      wu[c] = u[c] * d.cell_volume();
      mass += std::fabs(f[c]) * d.cell_volume();
      umass += std::fabs(f[c]) * wu[c];
    }
    const GlobalMixedReport plain = mixed_verify_global(f, one, one, RhoSpec::classical(), 0.0, all);
    CHECK(plain.constant == doctest::Approx(oracle::weak_sup_exact(F, leb) / mass).epsilon(1e-12));
    const GlobalMixedReport weighted = mixed_verify_global(f, u, one, RhoSpec::classical(), 0.0, all);
    CHECK(weighted.constant == doctest::Approx(oracle::weak_sup_exact(F, wu) / umass).epsilon(1e-12));
  }
}

TEST_CASE("sigma recipe") {
  CHECK(sigma_recipe(1.0, 0.0, 0.5) == 5.0);
  CHECK_THROWS_AS(sigma_recipe(1.0, 0.0, 0.0), ParameterError);
}
