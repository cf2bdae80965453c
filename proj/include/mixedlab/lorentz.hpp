#pragma once

// Distribution functions, decreasing rearrangements and Lorentz norms over a
// weighted cell measure, all in closed form for step data, plus the
// interpolation audit for sublinear operators.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixedlab/grid.hpp"

namespace mixedlab {

// mu = density x Lebesgue over the cells; no density means Lebesgue.
class WeightedMeasure {
 public:
  explicit WeightedMeasure(Domain d);
  explicit WeightedMeasure(GridFunction density);

  const Domain& domain() const { return domain_; }
  bool is_lebesgue() const { return !density_.has_value(); }
  double cell_mass(std::size_t c) const {
    return density_ ? (*density_)[c] * domain_.cell_volume() : domain_.cell_volume();
  }
  double total() const;

 private:
  Domain domain_;
  std::optional<GridFunction> density_;
};

// mu({|f| > s})
double distribution(const GridFunction& f, const WeightedMeasure& mu, double s);

// f* as a step function: value[i] on [mass[i-1], mass[i]) with mass[-1] = 0,
// zero beyond mass.back(). Values strictly decrease; equal |f| values share a step.
struct RearrangementTable {
  std::vector<double> value;
  std::vector<double> mass;

  double operator()(double t) const;
  double support_mass() const { return mass.empty() ? 0.0 : mass.back(); }
};

RearrangementTable rearrangement(const GridFunction& f, const WeightedMeasure& mu);
RearrangementTable rearrangement(std::span<const double> values, std::span<const double> masses);

// ||f||_{L^{p,q}(mu)}; p and q may be kInf (std::numeric_limits<double>::infinity()).
double lorentz_norm(const RearrangementTable& table, double p, double q);
double lorentz_norm(const GridFunction& f, const WeightedMeasure& mu, double p, double q);

// sup over t in t_grid of t mu({|f| > t}); an empty grid gives the exact sup.
double weak_sup(const GridFunction& f, const WeightedMeasure& mu, const std::vector<double>& t_grid = {});

using Operator = std::function<GridFunction(const GridFunction&)>;

// f_t = f 1{|f| <= f*(t)} and f^t = f 1{|f| > f*(t)}.
GridFunction truncate_below(const GridFunction& f, double level);
GridFunction truncate_above(const GridFunction& f, double level);

struct EndpointConstants {
  double C0 = 0.0;  // sup ||Tf||_{p0,inf} / ||f||_{p0,1}
  double C1 = 0.0;  // sup ||Tf||_inf / ||f||_inf
};

// Measured over the suite and the truncations f_t, f^t at every step of f*.
EndpointConstants measure_endpoint_constants(const Operator& T, double p0, const WeightedMeasure& mu,
                                             const std::vector<GridFunction>& suite);

struct InterpolationViolation {
  std::size_t index = 0;  // suite member
  std::string kind;       // "conclusion", "hypothesis-p0", "hypothesis-inf"
  double lhs = 0.0;
  double rhs = 0.0;
};

struct InterpolationReport {
  double p0 = 0.0, p = 0.0, C0 = 0.0, C1 = 0.0;
  double constant = 0.0;  // 2^{1/p} (C0 (1/p0 - 1/p)^{-1} + C1)
  double worst_ratio = 0.0;  // max ||Tf||_{p,1} / (constant ||f||_{p,1})
  std::size_t conclusion_violations = 0;
  std::size_t hypothesis_violations = 0;
  std::vector<InterpolationViolation> violations;
};

// Checks the endpoint hypotheses and the explicit-constant conclusion on every
// suite member; missing constants are measured first.
InterpolationReport interpolation_audit(const Operator& T, double p0, std::optional<double> C0,
                                        std::optional<double> C1, double p, const WeightedMeasure& mu,
                                        const std::vector<GridFunction>& suite);

}  // namespace mixedlab
