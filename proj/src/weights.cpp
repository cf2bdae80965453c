#include "mixedlab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace mixedlab {

namespace {

void check_p(double p) {
  if (!(p >= 1.0)) throw ParameterError("p must lie in [1, inf]");
}

// Evaluates the unweighted ratio of every cube and hands it to `sink` with the
// cube's factor (1 + r/rho).
template <class Ratio, class Sink>
void sweep(const RhoSpec& rho, const CubeFamily& cubes, Ratio&& ratio, Sink&& sink) {
  const Domain& d = cubes.domain();
  cubes.for_each([&](const Cube& q) {
    const double fac = rho.factor(q.center(d), q.radius(d));
    sink(q, ratio(q), fac);
  });
}

// Largest of `ratio / fac^theta` per theta, first attaining cube wins.
template <class Ratio>
std::vector<std::pair<double, Cube>> ladder_max(const RhoSpec& rho, const CubeFamily& cubes,
                                                const std::vector<double>& thetas, Ratio&& ratio) {
  std::vector<std::pair<double, Cube>> best(thetas.size(), {-1.0, Cube{}});
  sweep(rho, cubes, ratio, [&](const Cube& q, double r, double fac) {
    for (std::size_t t = 0; t < thetas.size(); ++t) {
      const double v = thetas[t] == 0.0 ? r : r / std::pow(fac, thetas[t]);
      if (v > best[t].first) best[t] = {v, q};
    }
  });
  return best;
}

}  // namespace

std::vector<WeightCharacteristic> ap_ladder(const GridFunction& w, double p,
                                            const std::vector<double>& thetas,
                                            const RhoSpec& rho, const CubeFamily& cubes) {
  check_p(p);
  require_weight(w, "ap_characteristic weight");
  require_same_domain(w.domain(), cubes.domain());
  for (double t : thetas)
    if (!(t >= 0.0)) throw ParameterError("theta must be nonnegative");

  std::vector<std::pair<double, Cube>> best;
  const CubeSums sw(w);
  if (p == 1.0) {
    const CubeExtrema ext(w);
    best = ladder_max(rho, cubes, thetas, [&](const Cube& q) { return sw.average(q) / ext.min(q); });
  } else if (std::isinf(p)) {
    const CubeSums slog(w.log());
    best = ladder_max(rho, cubes, thetas, [&](const Cube& q) {
      return sw.average(q) * std::exp(-slog.average(q));
    });
  } else {
    const double pp = p / (p - 1.0);
    const CubeSums sdual(w.pow(1.0 - pp));
    best = ladder_max(rho, cubes, thetas, [&](const Cube& q) {
      return std::pow(sw.average(q), 1.0 / p) * std::pow(sdual.average(q), 1.0 / pp);
    });
  }
  std::vector<WeightCharacteristic> out;
  for (std::size_t t = 0; t < thetas.size(); ++t)
    out.push_back({p, thetas[t], best[t].first, best[t].second});
  return out;
}

WeightCharacteristic ap_characteristic(const GridFunction& w, double p, double theta,
                                       const RhoSpec& rho, const CubeFamily& cubes) {
  return ap_ladder(w, p, {theta}, rho, cubes).front();
}

RHCharacteristic rh_characteristic(const GridFunction& w, double s, double theta,
                                   const RhoSpec& rho, const CubeFamily& cubes) {
  if (!(s > 1.0)) throw ParameterError("reverse Holder exponent must exceed 1");
  if (!(theta >= 0.0)) throw ParameterError("theta must be nonnegative");
  require_weight(w, "rh_characteristic weight");
  require_same_domain(w.domain(), cubes.domain());
  // the ratio is scale invariant; normalizing keeps w^s in range
  const GridFunction wn = w.scaled(1.0 / w.max());
  const CubeSums sw(wn);
  std::vector<std::pair<double, Cube>> best;
  if (std::isinf(s)) {
    const CubeExtrema ext(wn);
    best = ladder_max(rho, cubes, {theta}, [&](const Cube& q) { return ext.max(q) / sw.average(q); });
  } else {
    const CubeSums ss(wn.pow(s));
    best = ladder_max(rho, cubes, {theta}, [&](const Cube& q) {
      return std::pow(ss.average(q), 1.0 / s) / sw.average(q);
    });
  }
  return {s, theta, best[0].first, best[0].second};
}

namespace {

// Calls fn(R, x) for every sampled subset of every cube, R = w(E)/w(Q)/fac^theta.
template <class Fn>
void epsilon_samples(const GridFunction& w, double theta, const RhoSpec& rho,
                     const CubeFamily& cubes, const SubsetPolicy& policy, Fn&& fn) {
  const Domain& d = cubes.domain();
  const int dim = d.dim();
  const CubeSums sw(w);
  std::vector<double> vals;
  cubes.for_each([&](const Cube& q) {
    const double fac = std::pow(rho.factor(q.center(d), q.radius(d)), theta);
    const double wq = sw.sum(q);
    const double cells = static_cast<double>(q.cell_count(dim));
    fn(q, 1.0 / fac, 1.0);
    if (q.side == 1) return;
    if (policy.dyadic_subcubes && is_power_of_two(q.side)) {
      for (int s = q.side / 2; s >= 1; s /= 2) {
        const int per = q.side / s;
        const double x = static_cast<double>(Cube{Index{}, s}.cell_count(dim)) / cells;
        Index m{};
        for (;;) {
          Cube e{q.anchor, s};
          for (int a = 0; a < dim; ++a) e.anchor[a] += m[a] * s;
          fn(q, sw.sum(e) / wq / fac, x);
          int a = 0;
          while (a < dim && ++m[a] == per) m[a++] = 0;
          if (a == dim) break;
        }
      }
    }
    if (policy.heaviest_cells) {
      vals.clear();
      for_each_cell(d, q, [&](std::size_t c) { vals.push_back(w[c]); });
      std::sort(vals.begin(), vals.end(), std::greater<>());
      const std::size_t total = vals.size();
      double acc = 0.0;
      std::size_t next = 1;
      for (std::size_t k = 1; k < total; ++k) {
        acc += vals[k - 1];
        if (k != next) continue;
        fn(q, acc / wq / fac, static_cast<double>(k) / cells);
        next = k < 32 ? k + 1 : k + std::max<std::size_t>(1, k / 4);
      }
    }
  });
}

void finish_fit(EpsilonForm& out, double budget, const std::function<void(const std::function<void(double, double)>&)>& replay) {
  out.C = 0.0;
  replay([&](double r, double x) { out.C = std::max(out.C, r / std::pow(x, out.eps)); });
  out.C = std::min(out.C, budget);
  out.residual = std::numeric_limits<double>::infinity();
  replay([&](double r, double x) {
    if (r <= 0.0) return;
    const double bound = out.C * std::pow(x, out.eps);
    if (r > bound * (1.0 + 1e-12)) ++out.violations;
    out.residual = std::min(out.residual, bound / r - 1.0);
  });
  if (std::isinf(out.residual)) out.residual = 0.0;
}

double eps_limit(double r, double x, double budget) {
  // r <= budget x^eps with x < 1  <=>  eps <= (log budget - log r) / (-log x)
  if (x >= 1.0 || r <= 0.0) return 1.0;
  return (std::log(budget) - std::log(r)) / -std::log(x);
}

}  // namespace

EpsilonForm fit_epsilon(const std::vector<std::pair<double, double>>& samples, double budget) {
  if (!(budget >= 1.0)) throw ParameterError("epsilon-form budget must be at least 1");
  EpsilonForm out;
  out.samples = samples.size();
  for (const auto& [r, x] : samples) out.eps = std::min(out.eps, eps_limit(r, x, budget));
  finish_fit(out, budget, [&](const std::function<void(double, double)>& fn) {
    for (const auto& [r, x] : samples) fn(r, x);
  });
  return out;
}

EpsilonForm ainf_epsilon_form(const GridFunction& w, double theta, const RhoSpec& rho,
                              const CubeFamily& cubes, const SubsetPolicy& policy) {
  require_weight(w, "ainf_epsilon_form weight");
  require_same_domain(w.domain(), cubes.domain());
  if (!(theta >= 0.0)) throw ParameterError("theta must be nonnegative");
  if (!(policy.budget >= 1.0)) throw ParameterError("epsilon-form budget must be at least 1");
  EpsilonForm out;
  epsilon_samples(w, theta, rho, cubes, policy, [&](const Cube& q, double r, double x) {
    ++out.samples;
    const double lim = eps_limit(r, x, policy.budget);
    if (lim < out.eps) {
      out.eps = lim;
      out.witness = q;
    }
  });
  finish_fit(out, policy.budget, [&](const std::function<void(double, double)>& fn) {
    epsilon_samples(w, theta, rho, cubes, policy, [&](const Cube&, double r, double x) { fn(r, x); });
  });
  return out;
}

GridFunction factor_build(const GridFunction& u, const GridFunction& v, double p) {
  if (!(p > 1.0)) throw ParameterError("factor_build needs p > 1");
  require_weight(u, "u");
  require_weight(v, "v");
  require_same_domain(u.domain(), v.domain());
  return u * v.pow(1.0 - p);
}

WeightGenerator constant_weight(double c) {
  if (!(c > 0.0)) throw InvalidWeight("constant weight must be positive");
  return [c](const Domain& d) { return GridFunction(d, c); };
}

WeightGenerator power_weight(Point center, double alpha, double floor_cells) {
  return [=](const Domain& d) {
    const double fl = floor_cells * d.h();
    return GridFunction::from_function(
        d, [&](const Point& x) { return std::pow(std::max(distance(x, center, d.dim()), fl), alpha); });
  };
}

WeightGenerator two_band_weight(double low, double high, double period) {
  if (!(low > 0.0 && high > 0.0 && period > 0.0)) throw ParameterError("two-band weight needs positive parameters");
  return [=](const Domain& d) {
    return GridFunction::from_function(d, [&](const Point& x) {
      return static_cast<long>(std::floor(x[0] / period)) % 2 ? high : low;
    });
  };
}

WeightGenerator rho_adapted_weight(RhoSpec rho, Point center, double beta) {
  return [=](const Domain& d) {
    if (rho.is_classical()) return GridFunction(d, 1.0);
    return GridFunction::from_function(d, [&](const Point& x) {
      return std::pow(1.0 + distance(x, center, d.dim()) / rho(x), beta);
    });
  };
}

WeightGenerator product_weight(WeightGenerator u, WeightGenerator v, double p) {
  return [=](const Domain& d) { return u(d) * v(d).pow(1.0 - p); };
}

namespace {

CubeFamily family_for(const Domain& d, CubePolicy policy) {
  if (policy == CubePolicy::DyadicGridOf) return CubeFamily(d, policy, whole_box(d));
  return CubeFamily(d, policy);
}

bool stable(const StableValue& s, const AuditTolerance& tol) {
  return s.coarse <= tol.cap && s.fine <= tol.cap && s.rel_change() <= tol.stability;
}

std::vector<StableValue> ap_refined(const WeightGenerator& w, double p, const Domain& domain,
                                    const RhoSpec& rho, CubePolicy policy,
                                    const std::vector<double>& thetas) {
  const Domain fine = domain.refined();
  const auto a = ap_ladder(w(domain), p, thetas, rho, family_for(domain, policy));
  const auto b = ap_ladder(w(fine), p, thetas, rho, family_for(fine, policy));
  std::vector<StableValue> out;
  for (std::size_t t = 0; t < thetas.size(); ++t) out.push_back({a[t].value, b[t].value});
  return out;
}

}  // namespace

FactorAudit factor_audit(const WeightGenerator& u, const WeightGenerator& v, double p,
                         const Domain& domain, const RhoSpec& rho, CubePolicy policy,
                         const std::vector<double>& thetas, const AuditTolerance& tol) {
  FactorAudit out;
  out.p = p;
  out.thetas = thetas;
  // validates the pair at the coarse level before the sweeps
  factor_build(u(domain), v(domain), p);
  out.characteristic = ap_refined(product_weight(u, v, p), p, domain, rho, policy, thetas);
  out.finite = std::any_of(out.characteristic.begin(), out.characteristic.end(),
                           [&](const StableValue& s) { return stable(s, tol); });
  return out;
}

EpsilonPowerReport epsilon_power_audit(const WeightGenerator& u, const WeightGenerator& v,
                                       double p, const Domain& domain, const RhoSpec& rho,
                                       CubePolicy policy, const std::vector<double>& s_ladder,
                                       const std::vector<double>& thetas, const AuditTolerance& tol) {
  check_p(p);
  EpsilonPowerReport rep;
  const Domain fine = domain.refined();
  const GridFunction uc = u(domain), uf = u(fine);
  const CubeFamily fc = family_for(domain, policy), ff = family_for(fine, policy);
  for (double s : s_ladder) {
    bool ok = false;
    for (double t : thetas) {
      const StableValue sv{rh_characteristic(uc, s, t, rho, fc).value,
                           rh_characteristic(uf, s, t, rho, ff).value};
      if (stable(sv, tol)) {
        ok = true;
        break;
      }
    }
    if (ok && s > rep.s0) rep.s0 = s;
  }
  if (rep.s0 == 0.0) return rep;
  rep.conclusive = true;
  rep.eps0 = std::isinf(rep.s0) ? 1.0 : 1.0 - 1.0 / rep.s0;
  rep.pass = true;
  for (double frac : {0.25, 0.5, 0.75}) {
    const double e = frac * rep.eps0;
    rep.eps.push_back(e);
    const WeightGenerator w = [&u, &v, e](const Domain& d) { return u(d) * v(d).pow(e); };
    const auto per_theta = ap_refined(w, p, domain, rho, policy, thetas);
    std::size_t pick = 0;
    bool found = false;
    for (std::size_t t = 0; t < thetas.size() && !found; ++t)
      if (stable(per_theta[t], tol)) {
        pick = t;
        found = true;
      }
    if (!found)
      for (std::size_t t = 1; t < thetas.size(); ++t)
        if (per_theta[t].fine < per_theta[pick].fine) pick = t;
    rep.characteristic.push_back(per_theta[pick]);
    rep.theta_used.push_back(thetas[pick]);
    rep.pass = rep.pass && found;
  }
  return rep;
}

}  // namespace mixedlab
