#pragma once

// The auxiliary operator S = M^{rho,sigma}(f u)/u, the Rubio de Francia
// iteration with its tail certificate, K0 bookkeeping, synthetic singular
// kernels with size/smoothness audits, the Coifman comparison and the mixed
// measurement for kernels.

#include <cstdint>
#include <string>
#include <vector>

#include "mixedlab/grid.hpp"
#include "mixedlab/lorentz.hpp"
#include "mixedlab/maximal.hpp"
#include "mixedlab/rho.hpp"
#include "mixedlab/weights.hpp"

namespace mixedlab {

GridFunction s_operator(const GridFunction& f, const GridFunction& u, const RhoSpec& rho, double sigma,
                        const CubeFamily& cubes);

// Smallest theta of the ladder whose A_1 characteristic of u stays below cap.
WeightCharacteristic a1_ladder_exponent(const GridFunction& u, const RhoSpec& rho, const CubeFamily& cubes,
                                        const std::vector<double>& thetas = default_theta_ladder(),
                                        double cap = 1e3);

struct SBoundReport {
  double theta1 = 0.0;
  double u_char = 0.0;          // [u]_{A_1^{rho,theta1}}
  double sup_sf = 0.0;
  double sup_f = 0.0;
  bool sigma_below_theta = false;  // sigma < theta1: the bound is not guaranteed
  std::size_t violations = 0;      // cells with Sf > [u] sup|f|
};

SBoundReport s_linf_audit(const GridFunction& f, const GridFunction& u, const RhoSpec& rho, double sigma,
                          const WeightCharacteristic& a1, const CubeFamily& cubes);

struct RdFResult {
  GridFunction value;                // sum_{k < depth} S^k h / (2 K0)^k
  double K0 = 0.0;
  int depth = 0;
  std::vector<double> term_sup;      // sup of each term, k = 0 .. depth
  double tail_bound = 0.0;           // 2 K0 sup(S^depth h) / (2 K0)^depth
  double growth_ratio = 0.0;         // last term sup over the one before
};

// Throws K0TooSmall when the terms stop decaying.
RdFResult rdf_iterate(const GridFunction& h, const GridFunction& u, const RhoSpec& rho, double sigma,
                      double K0, int depth, const CubeFamily& cubes);

struct RdFAudit {
  std::size_t h_violations = 0;      // cells with h > Rh
  std::size_t s_violations = 0;      // cells with S(Rh) > 2 K0 Rh + tail
  double worst_s_ratio = 0.0;        // max S(Rh) / (2 K0 Rh + tail)
  double a1_char = 0.0;              // [(Rh) u]_{A_1^{rho,sigma}}
  double a1_bound = 0.0;             // 2 K0 * 1.1
};

RdFAudit rdf_audit(const GridFunction& h, const RdFResult& r, const GridFunction& u, const RhoSpec& rho,
                   double sigma, const CubeFamily& cubes);

struct RdFState {
  double t = 0.0;      // A_t ladder exponent of v
  double eps = 0.0;    // exponent of the product lemma
  double p0 = 0.0;     // 1 + 2 (t - 1) / eps
  double q = 0.0;
  double measured = 0.0;  // sup ||Sf||_{q,1} / ||f||_{q,1} over the suite
  std::size_t witness = 0;
  double safety = 1.5;
  double K0 = 0.0;        // safety * measured
  double C0 = 0.0;        // sup ||Sf||_{L^{p0}(uv)} / ||f||_{L^{p0}(uv)}
  double C1 = 0.0;        // sup ||Sf||_inf / ||f||_inf
  double K0_formula = 0.0;  // 4 p0 (C0 + C1)
};

double p0_formula(double t, double eps);

// q = 0 selects q = 2 p0.
RdFState estimate_K0(const GridFunction& u, const GridFunction& v, const RhoSpec& rho, double sigma,
                     double t, double eps, double q, const std::vector<GridFunction>& suite,
                     const CubeFamily& cubes);

struct DualityReport {
  double r = 0.0;
  double worst_ratio = 0.0;  // max int |F h| dmu / (||F||_{r,inf} ||h||_{r',1})
  std::size_t witness = 0;
  std::size_t violations = 0;
};

DualityReport duality_audit(const GridFunction& F, const std::vector<GridFunction>& h_suite,
                            const WeightedMeasure& mu, double r);

struct SCZOKernel {
  int dim = 1;
  double N = 0.0;      // decay exponent of (1 + |x-y|/rho(x))^{-N}
  double delta = 1.0;  // declared smoothness exponent
  RhoSpec rho = RhoSpec::classical();

  // z_1 / |z|^{dim+1} times the decay factor, z = x - y; zero at z = 0.
  double operator()(const Point& x, const Point& y) const;
};

std::string to_string(const SCZOKernel& k);

// Sum over cells y != x of K(x_c, y_c) f(y) h^dim.
GridFunction sczo_apply(const GridFunction& f, const SCZOKernel& kernel);

struct KernelAudit {
  double N_audit = 0.0;
  double C_N = 0.0;  // max |K| |x-y|^dim (1 + |x-y|/rho(x))^{N_audit}
  PointPair size_witness;
  double smooth_C = 0.0;  // max |K(x,y) - K(x,y0)| |x-y|^{dim+delta} / |y-y0|^delta
  Point smooth_x{}, smooth_y{}, smooth_y0{};
  std::size_t size_samples = 0;
  std::size_t smooth_samples = 0;
};

KernelAudit audit_kernel_conditions(const SCZOKernel& kernel, const Domain& d, double N_audit,
                                    std::size_t samples, std::uint64_t seed);

struct CoifmanReport {
  double p = 1.0;
  double theta = 0.0;
  double ratio = 0.0;  // sup over the suite of int |Tf|^p w / int (M^{rho,theta} f)^p w
  std::size_t witness = 0;
  std::vector<double> per_instance;
};

CoifmanReport coifman_check(const SCZOKernel& kernel, const GridFunction& w, double p, double theta,
                            const std::vector<GridFunction>& suite, const CubeFamily& cubes);

struct MixedTReport {
  double rhs = 0.0;             // int |f| u v
  double constant = 0.0;        // sup_t t uv(|T(fv)|/v > t) / rhs
  double m_constant = 0.0;      // same with M^{rho,sigma}(fv)
  double comparison = 0.0;      // ||T(fv)/v||_{1,inf} / ||M(fv)/v||_{1,inf}
};

MixedTReport mixed_for_T(const GridFunction& f, const GridFunction& u, const GridFunction& v,
                         const SCZOKernel& kernel, double sigma, const CubeFamily& cubes,
                         const std::vector<double>& t_grid = {});

}  // namespace mixedlab
