#pragma once

// Stopping-time machinery on a dyadic cube R: Calderon-Zygmund cubes, level sets
// Omega_k, the Lambda/Gamma classification with the secondary decomposition of
// v, principal cubes in both branches, the majorants h1 and h2, the audits of
// the intermediate lemmas and claims, and the mixed weak-type measurements.

#include <map>
#include <optional>
#include <vector>

#include "mixedlab/grid.hpp"
#include "mixedlab/lorentz.hpp"
#include "mixedlab/maximal.hpp"
#include "mixedlab/rho.hpp"
#include "mixedlab/weights.hpp"

namespace mixedlab {

// a^k for integer k; exact when a is a power of two.
double int_power(double a, int k);
// The k with a^k < x <= a^{k+1}.
int band_index(double x, double a);

// Maximal dyadic cubes of R with avg(g) > lambda, in scan order of the bisection.
std::vector<Cube> cz_on_cube(const GridFunction& g, const Cube& R, double lambda);
// Same on a prebuilt pyramid; cubes are returned as (level, index) pairs.
std::vector<std::pair<int, std::size_t>> cz_on_pyramid(const DyadicPyramid& pyr, double lambda);

struct LevelDecomposition {
  Cube R;
  double a = 4.0;
  bool empty = true;  // g vanishes on R: k0 undefined
  int k0 = 0;
  std::vector<std::vector<Cube>> cubes;  // cubes[i] are the Q_j^k for k = k0 + i
  std::vector<CellSet> omega;            // Omega_k as cell sets, same indexing
  int levels() const { return static_cast<int>(cubes.size()); }
};

// Levels k0, k0+1, ... while Omega_k is nonempty.
LevelDecomposition level_decomposition(const GridFunction& g, const Cube& R, double a);

struct PrimaryCube {
  Cube cube;
  int k = 0;
  int ell = -1;       // Lambda band; -1 for avg(v) < a^k
  double avg_v = 0.0;
  bool gamma = false;  // meets {a^k < v <= a^{k+1}} (ell >= 0 only)
};

struct SecondaryCube {
  Cube cube;
  int k = 0;
  std::size_t primary = 0;  // index of the Lambda_{-1,k} host
  bool gamma = false;
};

struct ClassifiedCubes {
  Cube R;
  double a = 4.0;
  int k0 = 0;
  std::vector<PrimaryCube> primary;
  std::vector<SecondaryCube> secondary;
  int max_ell() const;
};

ClassifiedCubes classify(const LevelDecomposition& decomp, const GridFunction& v);

// Elements of S_ell: (cube, level, host cube). For ell >= 0 host == cube.
struct ForestElement {
  Cube cube;
  int k = 0;
  Cube host;
};

struct PrincipalForest {
  int branch = 0;      // ell >= 0, or -1
  double delta = 0.0;  // -1 branch only
  std::vector<ForestElement> elements;
  std::vector<std::size_t> principal;      // element indices, increasing
  std::vector<int> generation;             // first generation of each principal element
  std::vector<std::size_t> assignment;     // per element: smallest principal containing it
  std::vector<std::ptrdiff_t> parent;      // per principal: smallest strictly larger principal, or -1
  GridFunction h;                          // h1 (ell >= 0) or h2 (ell = -1)
  int generations() const;
};

// eps is the A_infinity exponent of v on R; the -1 branch requires 0 < delta < eps.
PrincipalForest principal_select(const ClassifiedCubes& cls, const GridFunction& u, int branch,
                                 double delta = 0.0, double eps = 1.0);

struct ClaimReport {
  double theta = 0.0;
  double u_char = 0.0;        // [u]_{A_1^{rho,theta}} over the dyadic cubes of R
  double h1_bound_factor = 0.0;  // 2^{1+theta} [u]
  std::size_t h1_violations = 0;
  double h1_worst = 0.0;      // max over branches and cells of h1 / (2^{1+theta}[u] u)
  double h2_over_u = 0.0;     // max of h2 / u
  double double_sum = 0.0;    // largest inner double sum along the t_m segmentation
};

ClaimReport claim_audits(const std::vector<PrincipalForest>& forests, const ClassifiedCubes& cls,
                         const LevelDecomposition& decomp, const GridFunction& u, double theta,
                         const RhoSpec& rho);

struct LemmaReport {
  bool exponential_conclusive = false;
  std::vector<int> ells;
  std::vector<double> max_ratio;  // per ell: max u(E_k cap Q) / u(Q)
  double c1 = 0.0, c2 = 0.0, fit_residual = 0.0;
  bool sparsity_vacuous = true;
  double sparsity_union = 0.0;    // max |union of Gamma cubes inside Q| / |Q|
  double sparsity_packing = 0.0;  // max sum of |Q'| / |Q| over Gamma cubes Q' inside Q
};

// E_k sets for every k in [kmin, kmax] used by the audits: M_R^D g / v > 1 and a^k < v <= a^{k+1}.
std::map<int, CellSet> e_sets(const GridFunction& g, const GridFunction& v, const Cube& R, double a);

LemmaReport lemma_audits(const ClassifiedCubes& cls, const GridFunction& u, const GridFunction& v,
                         const GridFunction& g);

struct LevelLedgerRow {
  int k = 0;
  double uv_E = 0.0;
  double I = 0.0;
  double II = 0.0;
};

struct DyadicMixedReport {
  double t = 1.0;
  double lhs = 0.0;  // uv({x in R : M_R^D(fv)/v > t})
  double rhs = 0.0;  // int_R |f| u v
  double ratio = 0.0;  // t lhs / rhs
  int k0 = 0;
  double tail = 0.0;        // sum over k < k0 of uv(E_k)
  double tail_bound = 0.0;  // a^2/(a-1) [u] factor(R)^theta int |f|uv
  double head = 0.0;        // sum over k >= k0 of uv(E_k)
  double I = 0.0, II = 0.0;
  std::vector<LevelLedgerRow> ledger;
};

DyadicMixedReport mixed_verify_dyadic(const GridFunction& f, const GridFunction& u,
                                      const GridFunction& v, const Cube& R, double a, double t = 1.0,
                                      double u_char = 0.0, double factor_theta = 1.0);

// Sup over t of the dyadic ratio, exact over the breakpoints of M_R^D(fv)/v.
double dyadic_mixed_constant(const GridFunction& f, const GridFunction& u, const GridFunction& v,
                             const Cube& R);

struct GlobalMixedReport {
  double sigma = 0.0;
  double constant = 0.0;  // sup_t t uv({M^{rho,sigma}(fv)/v > t}) / int |f| uv
  double loc_constant = 0.0;   // same with M_loc at level t/2
  double glob_constant = 0.0;  // same with M_glob at level t/2
  double rhs = 0.0;
  std::size_t covering_cubes = 0;
};

// sigma > (N1 + theta + 1) / c, c the decay rate from the admissibility report.
double sigma_recipe(double N1, double theta, double decay_rate);

// with_split = false skips the local/global pieces (their constants stay 0).
GlobalMixedReport mixed_verify_global(const GridFunction& f, const GridFunction& u,
                                      const GridFunction& v, const RhoSpec& rho, double sigma,
                                      const CubeFamily& cubes, const std::vector<double>& t_grid = {},
                                      bool with_split = true);

// Everything on one cube: the default base is 2^{dim+1}, the default delta is eps/2.
struct CoronaRun {
  LevelDecomposition decomp;
  ClassifiedCubes classified;
  std::vector<PrincipalForest> forests;  // ell = 0..max_ell, then the -1 branch last
  EpsilonForm v_eps;
  double delta = 0.0;
  ClaimReport claims;
  LemmaReport lemmas;
  DyadicMixedReport mixed;
};

struct CoronaOptions {
  std::optional<double> a;
  std::optional<double> delta;
  double theta = 0.0;
};

CoronaRun run_corona(const GridFunction& f, const GridFunction& u, const GridFunction& v,
                     const Cube& R, const RhoSpec& rho, const CoronaOptions& opt = {});

}  // namespace mixedlab
