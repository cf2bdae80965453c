#include "mixedlab/extrapolation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace mixedlab {

namespace {

double sup_abs(const GridFunction& f) {
  double m = 0.0;
  for (double x : f.values()) m = std::max(m, std::fabs(x));
  return m;
}

double lp_norm(const GridFunction& f, const WeightedMeasure& mu, double p) {
  double s = 0.0;
  for (std::size_t c = 0; c < f.size(); ++c) s += std::pow(std::fabs(f[c]), p) * mu.cell_mass(c);
  return std::pow(s, 1.0 / p);
}

}  // namespace

GridFunction s_operator(const GridFunction& f, const GridFunction& u, const RhoSpec& rho, double sigma,
                        const CubeFamily& cubes) {
  require_weight(u, "u");
  require_same_domain(f.domain(), u.domain());
  return m_rho_sigma(f * u, rho, {sigma, 1.0}, cubes) / u;
}

WeightCharacteristic a1_ladder_exponent(const GridFunction& u, const RhoSpec& rho, const CubeFamily& cubes,
                                        const std::vector<double>& thetas, double cap) {
  if (thetas.empty()) throw ParameterError("empty theta ladder");
  const auto ladder = ap_ladder(u, 1.0, thetas, rho, cubes);
  for (const WeightCharacteristic& c : ladder)
    if (c.value < cap) return c;
  return ladder.back();
}

SBoundReport s_linf_audit(const GridFunction& f, const GridFunction& u, const RhoSpec& rho, double sigma,
                          const WeightCharacteristic& a1, const CubeFamily& cubes) {
  SBoundReport rep;
  rep.theta1 = a1.theta;
  rep.u_char = a1.value;
  rep.sigma_below_theta = sigma < a1.theta;
  const GridFunction sf = s_operator(f, u, rho, sigma, cubes);
  rep.sup_sf = sup_abs(sf);
  rep.sup_f = sup_abs(f);
  const double bound = rep.u_char * rep.sup_f * (1.0 + 1e-12);
  for (double x : sf.values())
    if (x > bound) ++rep.violations;
  return rep;
}

RdFResult rdf_iterate(const GridFunction& h, const GridFunction& u, const RhoSpec& rho, double sigma,
                      double K0, int depth, const CubeFamily& cubes) {
  if (!(K0 > 0.0)) throw ParameterError("K0 must be positive");
  if (depth < 1) throw ParameterError("depth must be at least 1");
  for (double x : h.values())
    if (x < 0.0) throw PreconditionError("Rubio de Francia input must be nonnegative");
  RdFResult r{h, K0, depth, {}, 0.0, 0.0};
  // term_k = S^k h / (2 K0)^k, built by rescaling each step since S is homogeneous
  GridFunction term = h;
  r.term_sup.push_back(sup_abs(term));
  for (int k = 1; k <= depth; ++k) {
    term = s_operator(term, u, rho, sigma, cubes).scaled(1.0 / (2.0 * K0));
    r.term_sup.push_back(sup_abs(term));
    if (k < depth)
      for (std::size_t c = 0; c < term.size(); ++c) r.value[c] += term[c];
  }
  r.tail_bound = 2.0 * K0 * r.term_sup[depth];
  const double prev = r.term_sup[depth - 1];
  r.growth_ratio = prev > 0.0 ? r.term_sup[depth] / prev : 0.0;
  if (r.growth_ratio >= 1.0) {
    std::ostringstream msg;
    msg << "Rubio de Francia terms do not decay (growth " << r.growth_ratio << "); increase K0";
    throw K0TooSmall(msg.str(), r.growth_ratio);
  }
  return r;
}

RdFAudit rdf_audit(const GridFunction& h, const RdFResult& r, const GridFunction& u, const RhoSpec& rho,
                   double sigma, const CubeFamily& cubes) {
  RdFAudit a;
  for (std::size_t c = 0; c < h.size(); ++c)
    if (h[c] > r.value[c]) ++a.h_violations;
  const GridFunction sr = s_operator(r.value, u, rho, sigma, cubes);
  for (std::size_t c = 0; c < sr.size(); ++c) {
    const double bound = 2.0 * r.K0 * r.value[c] + r.tail_bound;
    if (sr[c] > bound * (1.0 + 1e-12)) ++a.s_violations;
    if (bound > 0.0) a.worst_s_ratio = std::max(a.worst_s_ratio, sr[c] / bound);
  }
  a.a1_bound = 2.0 * r.K0 * 1.1;
  const GridFunction w = r.value * u;
  if (w.max() <= 0.0)
    a.a1_char = 0.0;
  else if (w.min() <= 0.0)
    a.a1_char = kInf;
  else
    a.a1_char = ap_characteristic(w, 1.0, sigma, rho, cubes).value;
  return a;
}

double p0_formula(double t, double eps) {
  if (!(t > 1.0) || !(eps > 0.0)) throw ParameterError("p0 needs t > 1 and eps > 0");
  return 1.0 + 2.0 * (t - 1.0) / eps;
}

RdFState estimate_K0(const GridFunction& u, const GridFunction& v, const RhoSpec& rho, double sigma,
                     double t, double eps, double q, const std::vector<GridFunction>& suite,
                     const CubeFamily& cubes) {
  if (suite.empty()) throw ParameterError("empty function suite");
  RdFState s;
  s.t = t;
  s.eps = eps;
  s.p0 = p0_formula(t, eps);
  s.q = q > 0.0 ? q : 2.0 * s.p0;
  if (s.q < 2.0 * s.p0) throw PreconditionError("q must be at least 2 p0");
  const WeightedMeasure mu(u * v);
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const GridFunction& f = suite[i];
    const double nf = lorentz_norm(f, mu, s.q, 1.0);
    if (nf <= 0.0) continue;
    const GridFunction sf = s_operator(f, u, rho, sigma, cubes);
    const double ratio = lorentz_norm(sf, mu, s.q, 1.0) / nf;
    if (ratio > s.measured) {
      s.measured = ratio;
      s.witness = i;
    }
    s.C0 = std::max(s.C0, lp_norm(sf, mu, s.p0) / lp_norm(f, mu, s.p0));
    s.C1 = std::max(s.C1, sup_abs(sf) / sup_abs(f));
  }
  s.K0 = s.safety * s.measured;
  s.K0_formula = 4.0 * s.p0 * (s.C0 + s.C1);
  return s;
}

DualityReport duality_audit(const GridFunction& F, const std::vector<GridFunction>& h_suite,
                            const WeightedMeasure& mu, double r) {
  if (!(r > 1.0) || std::isinf(r)) throw ParameterError("duality needs 1 < r < inf");
  DualityReport rep;
  rep.r = r;
  const double rp = r / (r - 1.0);
  const double nF = lorentz_norm(F, mu, r, kInf);
  for (std::size_t i = 0; i < h_suite.size(); ++i) {
    const GridFunction& h = h_suite[i];
    double pairing = 0.0;
    for (std::size_t c = 0; c < h.size(); ++c) pairing += std::fabs(F[c] * h[c]) * mu.cell_mass(c);
    const double rhs = nF * lorentz_norm(h, mu, rp, 1.0);
    if (pairing > rhs * (1.0 + 1e-12)) ++rep.violations;
    if (rhs > 0.0 && pairing / rhs > rep.worst_ratio) {
      rep.worst_ratio = pairing / rhs;
      rep.witness = i;
    }
  }
  return rep;
}

double SCZOKernel::operator()(const Point& x, const Point& y) const {
  Point z{};
  double r2 = 0.0;
  for (int a = 0; a < dim; ++a) {
    z[a] = x[a] - y[a];
    r2 += z[a] * z[a];
  }
  if (r2 == 0.0) return 0.0;
  const double r = std::sqrt(r2);
  double k = z[0] / std::pow(r, dim + 1);
  if (N != 0.0 && !rho.is_classical()) k *= std::pow(1.0 + r / rho(x), -N);
  return k;
}

std::string to_string(const SCZOKernel& k) {
  std::ostringstream s;
  s << "odd kernel dim=" << k.dim << " N=" << k.N << " delta=" << k.delta << " rho=" << k.rho.name();
  return s.str();
}

GridFunction sczo_apply(const GridFunction& f, const SCZOKernel& kernel) {
  const Domain& d = f.domain();
  if (kernel.dim != d.dim()) throw DomainMismatch("kernel and function dimensions differ");
  std::vector<std::size_t> support;
  for (std::size_t c = 0; c < f.size(); ++c)
    if (f[c] != 0.0) support.push_back(c);
  std::vector<Point> centers(d.cell_count());
  for (std::size_t c = 0; c < centers.size(); ++c) centers[c] = d.cell_center(c);
  const bool decays = kernel.N != 0.0 && !kernel.rho.is_classical();
  const int dim = d.dim();
  GridFunction out(d, 0.0);
  parallel_for(d.cell_count(), [&](std::size_t x) {
    const Point& px = centers[x];
    const double rx = decays ? kernel.rho(px) : 0.0;
    double s = 0.0;
    for (std::size_t y : support) {
      if (y == x) continue;
      const Point& py = centers[y];
      double r2 = 0.0;
      for (int a = 0; a < dim; ++a) r2 += (px[a] - py[a]) * (px[a] - py[a]);
      const double r = std::sqrt(r2);
      double k = (px[0] - py[0]) / std::pow(r, dim + 1);
      if (decays) k *= std::pow(1.0 + r / rx, -kernel.N);
      s += k * f[y];
    }
    out[x] = s * d.cell_volume();
  });
  return out;
}

KernelAudit audit_kernel_conditions(const SCZOKernel& kernel, const Domain& d, double N_audit,
                                    std::size_t samples, std::uint64_t seed) {
  if (kernel.dim != d.dim()) throw DomainMismatch("kernel and domain dimensions differ");
  KernelAudit rep;
  rep.N_audit = N_audit;
  const int dim = d.dim();
  const int n = d.n();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cell(0, n - 1);
  auto random_index = [&] {
    Index i{};
    for (int a = 0; a < dim; ++a) i[a] = cell(rng);
    return i;
  };
  for (std::size_t s = 0; s < samples; ++s) {
    const Index xi = random_index(), yi = random_index();
    if (xi == yi) continue;
    const Point x = d.cell_center(xi), y = d.cell_center(yi);
    const double r = distance(x, y, dim);
    double c = std::fabs(kernel(x, y)) * std::pow(r, dim);
    if (!kernel.rho.is_classical()) c *= std::pow(1.0 + r / kernel.rho(x), N_audit);
    ++rep.size_samples;
    if (c > rep.C_N) {
      rep.C_N = c;
      rep.size_witness = {x, y};
    }
  }
  for (std::size_t s = 0; s < samples; ++s) {
    const Index xi = random_index(), yi = random_index();
    if (xi == yi) continue;
    const Point x = d.cell_center(xi), y = d.cell_center(yi);
    const double r = distance(x, y, dim);
    // y0 within a box of half-width below r / (2 sqrt(dim)) cells around y
    const int reach = static_cast<int>(std::floor(r / (2.0 * std::sqrt(dim) * d.h())));
    if (reach < 1) continue;
    std::uniform_int_distribution<int> step(-reach, reach);
    Index zi = yi;
    for (int a = 0; a < dim; ++a) zi[a] = std::clamp(yi[a] + step(rng), 0, n - 1);
    if (zi == yi) continue;
    const Point y0 = d.cell_center(zi);
    const double r0 = distance(y, y0, dim);
    if (!(r > 2.0 * r0)) continue;
    ++rep.smooth_samples;
    const double c = std::fabs(kernel(x, y) - kernel(x, y0)) * std::pow(r, dim + kernel.delta) /
                     std::pow(r0, kernel.delta);
    if (c > rep.smooth_C) {
      rep.smooth_C = c;
      rep.smooth_x = x;
      rep.smooth_y = y;
      rep.smooth_y0 = y0;
    }
  }
  return rep;
}

CoifmanReport coifman_check(const SCZOKernel& kernel, const GridFunction& w, double p, double theta,
                            const std::vector<GridFunction>& suite, const CubeFamily& cubes) {
  if (!(p > 0.0) || std::isinf(p)) throw ParameterError("Coifman exponent must be in (0, inf)");
  require_weight(w, "w");
  CoifmanReport rep;
  rep.p = p;
  rep.theta = theta;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const GridFunction tf = sczo_apply(suite[i], kernel);
    const GridFunction mf = m_rho_sigma(suite[i], kernel.rho, {theta, 1.0}, cubes);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) {
      lhs += std::pow(std::fabs(tf[c]), p) * w[c];
      rhs += std::pow(mf[c], p) * w[c];
    }
    const double ratio = rhs > 0.0 ? lhs / rhs : 0.0;
    rep.per_instance.push_back(ratio);
    if (ratio > rep.ratio) {
      rep.ratio = ratio;
      rep.witness = i;
    }
  }
  return rep;
}

MixedTReport mixed_for_T(const GridFunction& f, const GridFunction& u, const GridFunction& v,
                         const SCZOKernel& kernel, double sigma, const CubeFamily& cubes,
                         const std::vector<double>& t_grid) {
  require_weight(u, "u");
  require_weight(v, "v");
  require_same_domain(f.domain(), u.domain());
  require_same_domain(f.domain(), v.domain());
  MixedTReport rep;
  const GridFunction uv = u * v;
  for (std::size_t c = 0; c < f.size(); ++c) rep.rhs += std::fabs(f[c]) * uv[c] * f.domain().cell_volume();
  if (rep.rhs <= 0.0) return rep;
  const WeightedMeasure mu(uv);
  const GridFunction fv = f * v;
  const GridFunction ft = sczo_apply(fv, kernel).abs() / v;
  const GridFunction fm = m_rho_sigma(fv, kernel.rho, {sigma, 1.0}, cubes) / v;
  rep.constant = weak_sup(ft, mu, t_grid) / rep.rhs;
  rep.m_constant = weak_sup(fm, mu, t_grid) / rep.rhs;
  const double wm = weak_sup(fm, mu);
  rep.comparison = wm > 0.0 ? weak_sup(ft, mu) / wm : 0.0;
  return rep;
}

}  // namespace mixedlab
