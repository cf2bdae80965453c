#include "mixedlab/lorentz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mixedlab {

WeightedMeasure::WeightedMeasure(Domain d) : domain_(d) {}

WeightedMeasure::WeightedMeasure(GridFunction density) : domain_(density.domain()) {
  require_weight(density, "measure density");
  density_ = std::move(density);
}

double WeightedMeasure::total() const {
  double s = 0.0;
  for (std::size_t c = 0; c < domain_.cell_count(); ++c) s += cell_mass(c);
  return s;
}

double distribution(const GridFunction& f, const WeightedMeasure& mu, double s) {
  require_same_domain(f.domain(), mu.domain());
  if (!(s >= 0.0)) throw ParameterError("distribution level must be nonnegative");
  double m = 0.0;
  for (std::size_t c = 0; c < f.size(); ++c)
    if (std::fabs(f[c]) > s) m += mu.cell_mass(c);
  return m;
}

double RearrangementTable::operator()(double t) const {
  if (!(t >= 0.0)) throw ParameterError("rearrangement argument must be nonnegative");
  // first step whose right end exceeds t
  const auto it = std::upper_bound(mass.begin(), mass.end(), t);
  return it == mass.end() ? 0.0 : value[it - mass.begin()];
}

RearrangementTable rearrangement(std::span<const double> values, std::span<const double> masses) {
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (std::fabs(values[i]) > 0.0) order.push_back(i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(values[a]) > std::fabs(values[b]);
  });
  RearrangementTable t;
  double acc = 0.0;
  for (std::size_t i : order) {
    const double v = std::fabs(values[i]);
    acc += masses[i];
    if (!t.value.empty() && t.value.back() == v) {
      t.mass.back() = acc;
    } else {
      t.value.push_back(v);
      t.mass.push_back(acc);
    }
  }
  return t;
}

RearrangementTable rearrangement(const GridFunction& f, const WeightedMeasure& mu) {
  require_same_domain(f.domain(), mu.domain());
  std::vector<double> m(f.size());
  for (std::size_t c = 0; c < f.size(); ++c) m[c] = mu.cell_mass(c);
  return rearrangement(f.values(), m);
}

double lorentz_norm(const RearrangementTable& t, double p, double q) {
  if (!(p > 0.0) || !(q > 0.0)) throw ParameterError("Lorentz exponents must be positive");
  if (std::isinf(p)) {
    if (!std::isinf(q)) throw ParameterError("L^{inf,q} with q < inf is degenerate");
    return t.value.empty() ? 0.0 : t.value.front();
  }
  if (std::isinf(q)) {
    // t^{1/p} increases across a step, so its sup sits at the right end
    double best = 0.0;
    for (std::size_t i = 0; i < t.value.size(); ++i)
      best = std::max(best, t.value[i] * std::pow(t.mass[i], 1.0 / p));
    return best;
  }
  const double e = q / p;
  double sum = 0.0;
  double prev = 0.0;
  for (std::size_t i = 0; i < t.value.size(); ++i) {
    const double cur = std::pow(t.mass[i], e);
    sum += std::pow(t.value[i], q) * (p / q) * (cur - prev);
    prev = cur;
  }
  return std::pow(sum, 1.0 / q);
}

double lorentz_norm(const GridFunction& f, const WeightedMeasure& mu, double p, double q) {
  return lorentz_norm(rearrangement(f, mu), p, q);
}

double weak_sup(const GridFunction& f, const WeightedMeasure& mu, const std::vector<double>& t_grid) {
  if (t_grid.empty()) return lorentz_norm(f, mu, 1.0, std::numeric_limits<double>::infinity());
  double best = 0.0;
  for (double t : t_grid) best = std::max(best, t * distribution(f, mu, t));
  return best;
}

GridFunction truncate_below(const GridFunction& f, double level) {
  return f.map([level](double x) { return std::fabs(x) <= level ? x : 0.0; });
}

GridFunction truncate_above(const GridFunction& f, double level) {
  return f.map([level](double x) { return std::fabs(x) > level ? x : 0.0; });
}

namespace {

constexpr double kInfinity = std::numeric_limits<double>::infinity();
constexpr int kTruncationLevels = 8;

double sup_norm(const GridFunction& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::fabs(v));
  return m;
}

// the suite member and its truncations at up to kTruncationLevels steps of f*
std::vector<GridFunction> with_truncations(const GridFunction& f, const WeightedMeasure& mu) {
  std::vector<GridFunction> out{f};
  const RearrangementTable t = rearrangement(f, mu);
  const std::size_t steps = t.value.size();
  const std::size_t stride = std::max<std::size_t>(1, steps / kTruncationLevels);
  for (std::size_t i = 0; i < steps; i += stride) {
    out.push_back(truncate_below(f, t.value[i]));
    out.push_back(truncate_above(f, t.value[i]));
  }
  return out;
}

}  // namespace

EndpointConstants measure_endpoint_constants(const Operator& T, double p0, const WeightedMeasure& mu,
                                             const std::vector<GridFunction>& suite) {
  if (suite.empty()) throw ParameterError("empty function suite");
  EndpointConstants c;
  for (const GridFunction& f : suite)
    for (const GridFunction& g : with_truncations(f, mu)) {
      const double n1 = lorentz_norm(g, mu, p0, 1.0);
      if (n1 <= 0.0) continue;
      const GridFunction tg = T(g);
      c.C0 = std::max(c.C0, lorentz_norm(tg, mu, p0, kInfinity) / n1);
      c.C1 = std::max(c.C1, sup_norm(tg) / sup_norm(g));
    }
  return c;
}

InterpolationReport interpolation_audit(const Operator& T, double p0, std::optional<double> C0,
                                        std::optional<double> C1, double p, const WeightedMeasure& mu,
                                        const std::vector<GridFunction>& suite) {
  if (!(p0 > 1.0)) throw ParameterError("interpolation needs p0 > 1");
  if (!(p > p0) || std::isinf(p)) throw ParameterError("interpolation needs p0 < p < inf");
  if (suite.empty()) throw ParameterError("empty function suite");
  InterpolationReport rep;
  rep.p0 = p0;
  rep.p = p;
  // measured constants satisfy the hypotheses by construction; supplied ones are checked
  const bool check_hypotheses = C0.has_value() || C1.has_value();
  if (!C0 || !C1) {
    const EndpointConstants m = measure_endpoint_constants(T, p0, mu, suite);
    if (!C0) C0 = m.C0;
    if (!C1) C1 = m.C1;
  }
  rep.C0 = *C0;
  rep.C1 = *C1;
  rep.constant = std::pow(2.0, 1.0 / p) * (rep.C0 / (1.0 / p0 - 1.0 / p) + rep.C1);
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const GridFunction& f = suite[i];
    const GridFunction tf = T(f);
    const double lhs = lorentz_norm(tf, mu, p, 1.0);
    const double rhs = rep.constant * lorentz_norm(f, mu, p, 1.0);
    if (rhs > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, lhs / rhs);
    if (lhs > rhs) {
      ++rep.conclusion_violations;
      rep.violations.push_back({i, "conclusion", lhs, rhs});
    }
    if (!check_hypotheses) continue;
    // the endpoint hypotheses on the truncations the proof feeds to T
    for (const GridFunction& g : with_truncations(f, mu)) {
      const GridFunction tg = T(g);
      const double h0 = lorentz_norm(tg, mu, p0, kInfinity);
      const double r0 = rep.C0 * lorentz_norm(g, mu, p0, 1.0);
      if (h0 > r0 * (1.0 + 1e-12)) {
        ++rep.hypothesis_violations;
        rep.violations.push_back({i, "hypothesis-p0", h0, r0});
      }
      const double hi = sup_norm(tg);
      const double ri = rep.C1 * sup_norm(g);
      if (hi > ri * (1.0 + 1e-12)) {
        ++rep.hypothesis_violations;
        rep.violations.push_back({i, "hypothesis-inf", hi, ri});
      }
    }
  }
  return rep;
}

}  // namespace mixedlab
