#pragma once

// Critical radius functions: evaluation, sampled admissibility certificates,
// Shen's radius from a potential and the greedy critical-cube covering.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mixedlab/grid.hpp"

namespace mixedlab {

struct ShenValue {
  double radius = 0.0;
  bool capped = false;  // no admissible radius below the box diameter
};

// rho(x) = sup{ r in (0, diam] : r^(2-d) * sum_{cell centers in B(x,r)} V h^d <= 1 }.
// The sup is taken exactly over the piecewise structure of the discrete ball
// integral (it changes only at cell-center distances). Capped radii report L.
ShenValue shen_rho(const GridFunction& potential, const Point& x);

class RhoSpec {
 public:
  enum class Kind { Constant, Classical, Analytic, Shen };

  static RhoSpec constant(double c);
  // The factor (1 + r/rho) is suppressed: eval returns +inf and factor() returns 1.
  static RhoSpec classical();
  static RhoSpec analytic(std::function<double(const Point&)> fn, std::string name);
  // scale / (1 + |x - origin|)
  static RhoSpec inverse_linear(double scale, Point origin = {});
  // max(x_0, floor)
  static RhoSpec ramp(double floor);
  static RhoSpec shen(GridFunction potential);

  Kind kind() const { return kind_; }
  bool is_classical() const { return kind_ == Kind::Classical; }
  const std::string& name() const { return name_; }
  double constant_value() const { return constant_; }
  const GridFunction* potential() const { return potential_.get(); }

  double operator()(const Point& x) const;
  ShenValue eval_flagged(const Point& x) const;

  // 1 + r / rho(center), or exactly 1 for the classical spec.
  double factor(const Point& center, double r) const;
  // r <= rho(center); always true for the classical spec.
  bool subcritical(const Point& center, double r) const;

 private:
  RhoSpec(Kind k, std::string name) : kind_(k), name_(std::move(name)) {}
  Kind kind_;
  std::string name_;
  double constant_ = 0.0;
  std::function<double(const Point&)> fn_;
  std::shared_ptr<const GridFunction> potential_;
  struct ShenCache;
  std::shared_ptr<ShenCache> shen_cache_;
};

// Checked evaluation: positive value, capped flag for Shen radii.
ShenValue eval_rho(const RhoSpec& spec, const Point& x);

struct PointPair {
  Point x{};
  Point y{};
};

struct AdmissibilityReport {
  double C0 = 1.0;
  double N0 = 1.0;
  PointPair worst_pair;
  double max_violation = 0.0;
  // decay rate c = 1/(N0+1) with rho(x_Q)/r_Q <= C 2^{-ck} for cubes ~2^k times critical
  double decay_rate = 0.5;
  std::vector<double> ladder;
  std::vector<double> C0_per_N0;
  int pairs = 0;
  bool capped = false;
};

AdmissibilityReport audit_admissibility(const RhoSpec& spec, const Domain& domain,
                                        int pair_sample_size, std::uint64_t seed);

struct CoveringReport {
  std::vector<Point> centers;
  std::vector<double> radii;  // rho(x_j)
  std::vector<double> sigmas;
  std::vector<int> overlap;  // N(sigma) = max over cells of the sigma Q_j count
  double N1 = 0.0;
  double C = 1.0;           // smallest C with N(sigma) <= C sigma^N1 on the ladder
  double residual = 0.0;    // max relative deviation of the log-log regression line
  bool capped = false;
  bool covers_box = false;
};

CoveringReport critical_covering(const RhoSpec& spec, const Domain& domain,
                                 const std::vector<double>& sigmas = {1.0, 2.0, 4.0});

}  // namespace mixedlab
