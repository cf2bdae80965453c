#pragma once

// rho-adapted Muckenhoupt / reverse Holder characteristics measured as exact
// maxima over a cube family, the A_infinity epsilon form, weight generators and
// the factorization / epsilon-power audits.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "mixedlab/grid.hpp"
#include "mixedlab/rho.hpp"

namespace mixedlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct WeightCharacteristic {
  double p = 1.0;
  double theta = 0.0;
  double value = 0.0;
  Cube witness;
};

struct RHCharacteristic {
  double s = 2.0;
  double theta = 0.0;
  double value = 0.0;
  Cube witness;
};

// sup over the family of the A_p ratio divided by (1 + r_Q/rho(x_Q))^theta.
// p == 1 uses avg/inf, p == kInf uses avg * exp(-avg log w).
WeightCharacteristic ap_characteristic(const GridFunction& w, double p, double theta,
                                       const RhoSpec& rho, const CubeFamily& cubes);
// One sweep, every theta of the ladder.
std::vector<WeightCharacteristic> ap_ladder(const GridFunction& w, double p,
                                            const std::vector<double>& thetas,
                                            const RhoSpec& rho, const CubeFamily& cubes);

RHCharacteristic rh_characteristic(const GridFunction& w, double s, double theta,
                                   const RhoSpec& rho, const CubeFamily& cubes);

struct SubsetPolicy {
  bool dyadic_subcubes = true;
  bool heaviest_cells = true;  // the k cells of largest w, for k on a ladder
  double budget = 2.0;         // the fitted C never exceeds this
};

struct EpsilonForm {
  double C = 1.0;
  double eps = 1.0;
  double residual = 0.0;  // smallest relative slack C x^eps / R - 1 over the sample
  std::size_t samples = 0;
  std::size_t violations = 0;
  Cube witness;  // cube of the sample that pins eps
};

// Fits w(E)/w(Q) <= C (1 + r/rho)^theta (|E|/|Q|)^eps: eps is the largest value in
// (0, 1] for which the sampled ratios stay below budget * x^eps, C is then the
// smallest constant that covers every sample.
EpsilonForm ainf_epsilon_form(const GridFunction& w, double theta, const RhoSpec& rho,
                              const CubeFamily& cubes, const SubsetPolicy& policy = {});

// Fit from explicit (ratio, fraction) samples; exposed for oracle tests.
EpsilonForm fit_epsilon(const std::vector<std::pair<double, double>>& samples, double budget);

// w = u v^(1-p), cellwise.
GridFunction factor_build(const GridFunction& u, const GridFunction& v, double p);

inline const std::vector<double>& default_theta_ladder() {
  static const std::vector<double> ladder = {0.0, 0.5, 1.0, 2.0, 4.0};
  return ladder;
}

// Generators evaluate a weight on any resolution so refinement can be measured.
using WeightGenerator = std::function<GridFunction(const Domain&)>;

WeightGenerator constant_weight(double c = 1.0);
// max(|x - center|, floor_cells * h)^alpha
WeightGenerator power_weight(Point center, double alpha, double floor_cells = 1.0);
// `high` on alternating bands of width `period` along axis 0, `low` elsewhere
WeightGenerator two_band_weight(double low, double high, double period);
// (1 + |x - center| / rho(x))^beta
WeightGenerator rho_adapted_weight(RhoSpec rho, Point center, double beta);
// u * v^(1-p)
WeightGenerator product_weight(WeightGenerator u, WeightGenerator v, double p);

struct StableValue {
  double coarse = 0.0;
  double fine = 0.0;
  double rel_change() const { return std::fabs(fine - coarse) / std::max(coarse, 1e-300); }
};

struct FactorAudit {
  double p = 2.0;
  std::vector<double> thetas;
  std::vector<StableValue> characteristic;  // per theta, at J and J+1
  bool finite = false;                      // some theta is below cap and refinement-stable
};

struct AuditTolerance {
  double cap = 1e3;            // "finite" means below this ...
  double stability = 0.25;     // ... and changing by at most this under J -> J+1
};

FactorAudit factor_audit(const WeightGenerator& u, const WeightGenerator& v, double p,
                         const Domain& domain, const RhoSpec& rho, CubePolicy policy,
                         const std::vector<double>& thetas = default_theta_ladder(),
                         const AuditTolerance& tol = {});

struct EpsilonPowerReport {
  bool conclusive = false;
  double s0 = 0.0;
  double eps0 = 0.0;
  std::vector<double> eps;
  std::vector<StableValue> characteristic;  // best theta of the ladder, per eps
  std::vector<double> theta_used;
  bool pass = false;
};

EpsilonPowerReport epsilon_power_audit(const WeightGenerator& u, const WeightGenerator& v,
                                       double p, const Domain& domain, const RhoSpec& rho,
                                       CubePolicy policy,
                                       const std::vector<double>& s_ladder = {1.25, 1.5, 2.0, 4.0, 8.0, kInf},
                                       const std::vector<double>& thetas = default_theta_ladder(),
                                       const AuditTolerance& tol = {});

}  // namespace mixedlab
