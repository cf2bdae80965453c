#include "mixedlab/rho.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>

namespace mixedlab {

ShenValue shen_rho(const GridFunction& potential, const Point& x) {
  const Domain& d = potential.domain();
  if (d.dim() != 3) throw ParameterError("Shen's critical radius is defined here for dim 3 only");
  std::vector<std::pair<double, double>> rings;  // (distance, V)
  rings.reserve(potential.size());
  bool any_positive = false;
  for (std::size_t c = 0; c < potential.size(); ++c) {
    const double v = potential[c];
    if (v < 0.0) throw InvalidWeight("potential must be nonnegative");
    if (v > 0.0) any_positive = true;
    rings.emplace_back(distance(x, d.cell_center(c), 3), v);
  }
  const double diam = std::sqrt(3.0) * d.side();
  if (!any_positive) return {d.side(), true};
  std::sort(rings.begin(), rings.end());
  const double vol = d.cell_volume();
  // On [d_k, d_{k+1}) the ball sum S_k is constant and F(r) = vol*S_k / r, so the
  // constraint holds there iff r >= vol*S_k; a feasible interval contributes its
  // right endpoint to the sup.
  double best = 0.0;
  double mass = 0.0;
  double lo = 0.0;
  std::size_t i = 0;
  while (lo < diam) {
    while (i < rings.size() && rings[i].first <= lo) mass += rings[i++].second;
    const double hi = i < rings.size() ? std::min(rings[i].first, diam) : diam;
    if (vol * mass < hi) best = hi;
    if (hi >= diam) break;
    lo = hi;
  }
  // F(diam) <= 1: the constraint never fails inside the box
  if (best >= diam && vol * mass <= diam) return {d.side(), true};
  return {best, false};
}

struct RhoSpec::ShenCache {
  std::mutex mu;
  std::map<Point, ShenValue> values;
};

RhoSpec RhoSpec::constant(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidRho("constant rho must be positive");
  RhoSpec r(Kind::Constant, "constant");
  r.constant_ = c;
  return r;
}

RhoSpec RhoSpec::classical() { return RhoSpec(Kind::Classical, "classical"); }

RhoSpec RhoSpec::analytic(std::function<double(const Point&)> fn, std::string name) {
  RhoSpec r(Kind::Analytic, std::move(name));
  r.fn_ = std::move(fn);
  return r;
}

RhoSpec RhoSpec::inverse_linear(double scale, Point origin) {
  return analytic(
      [scale, origin](const Point& x) {
        double s = 0.0;
        for (int a = 0; a < kMaxDim; ++a) s += (x[a] - origin[a]) * (x[a] - origin[a]);
        return scale / (1.0 + std::sqrt(s));
      },
      "inverse_linear");
}

RhoSpec RhoSpec::ramp(double floor) {
  return analytic([floor](const Point& x) { return std::max(x[0], floor); }, "ramp");
}

RhoSpec RhoSpec::shen(GridFunction potential) {
  if (potential.domain().dim() != 3) throw ParameterError("Shen rho requires a dim-3 potential");
  if (potential.max() <= 0.0) throw InvalidWeight("potential must not vanish identically");
  if (potential.min() < 0.0) throw InvalidWeight("potential must be nonnegative");
  RhoSpec r(Kind::Shen, "shen");
  r.potential_ = std::make_shared<const GridFunction>(std::move(potential));
  r.shen_cache_ = std::make_shared<ShenCache>();
  return r;
}

ShenValue RhoSpec::eval_flagged(const Point& x) const {
  switch (kind_) {
    case Kind::Constant: return {constant_, false};
    case Kind::Classical: return {std::numeric_limits<double>::infinity(), false};
    case Kind::Analytic: return {fn_(x), false};
    case Kind::Shen: {
      {
        std::lock_guard<std::mutex> lock(shen_cache_->mu);
        auto it = shen_cache_->values.find(x);
        if (it != shen_cache_->values.end()) return it->second;
      }
      const ShenValue v = shen_rho(*potential_, x);
      std::lock_guard<std::mutex> lock(shen_cache_->mu);
      shen_cache_->values.emplace(x, v);
      return v;
    }
  }
  return {};
}

double RhoSpec::operator()(const Point& x) const { return eval_flagged(x).radius; }

double RhoSpec::factor(const Point& center, double r) const {
  if (kind_ == Kind::Classical) return 1.0;
  if (kind_ == Kind::Constant) return 1.0 + r / constant_;
  return 1.0 + r / (*this)(center);
}

bool RhoSpec::subcritical(const Point& center, double r) const {
  if (kind_ == Kind::Classical) return true;
  return r <= (*this)(center);
}

ShenValue eval_rho(const RhoSpec& spec, const Point& x) {
  const ShenValue v = spec.eval_flagged(x);
  if (!(v.radius > 0.0) || std::isnan(v.radius))
    throw InvalidRho("critical radius function is not positive at a sample point");
  return v;
}

AdmissibilityReport audit_admissibility(const RhoSpec& spec, const Domain& domain,
                                        int pair_sample_size, std::uint64_t seed) {
  if (pair_sample_size < 1) throw ParameterError("admissibility audit needs at least one pair");
  AdmissibilityReport rep;
  rep.ladder = {1.0, 2.0, 4.0, 8.0, 16.0};
  rep.pairs = pair_sample_size;
  if (spec.is_classical()) {
    rep.C0_per_N0.assign(rep.ladder.size(), 1.0);
    rep.N0 = 1.0;
    rep.decay_rate = 1.0 / (rep.N0 + 1.0);
    return rep;
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> cell(0, domain.cell_count() - 1);
  std::map<std::size_t, double> cache;
  auto rho_at = [&](std::size_t c) {
    auto it = cache.find(c);
    if (it != cache.end()) return it->second;
    const ShenValue v = eval_rho(spec, domain.cell_center(c));
    rep.capped = rep.capped || v.capped;
    cache.emplace(c, v.radius);
    return v.radius;
  };
  struct Sample {
    std::size_t x, y;
    double rx, ry, dist;
  };
  std::vector<Sample> samples;
  samples.reserve(pair_sample_size);
  for (int i = 0; i < pair_sample_size; ++i) {
    const std::size_t a = cell(rng), b = cell(rng);
    samples.push_back({a, b, rho_at(a), rho_at(b),
                       distance(domain.cell_center(a), domain.cell_center(b), domain.dim())});
  }
  double best = std::numeric_limits<double>::infinity();
  for (double n0 : rep.ladder) {
    double c0 = 1.0;
    PointPair worst{domain.cell_center(samples[0].x), domain.cell_center(samples[0].y)};
    for (const Sample& s : samples) {
      // both orders of the pair
      for (int o = 0; o < 2; ++o) {
        const double rx = o ? s.ry : s.rx, ry = o ? s.rx : s.ry;
        const double base = 1.0 + s.dist / rx;
        const double lower = rx * std::pow(base, -n0) / ry;
        const double upper = ry / (rx * std::pow(base, n0 / (n0 + 1.0)));
        const double need = std::max(lower, upper);
        if (need > c0) {
          c0 = need;
          worst = o ? PointPair{domain.cell_center(s.y), domain.cell_center(s.x)}
                    : PointPair{domain.cell_center(s.x), domain.cell_center(s.y)};
        }
      }
    }
    rep.C0_per_N0.push_back(c0);
    if (c0 < best) {
      best = c0;
      rep.C0 = c0;
      rep.N0 = n0;
      rep.worst_pair = worst;
    }
  }
  rep.decay_rate = 1.0 / (rep.N0 + 1.0);
  return rep;
}

CoveringReport critical_covering(const RhoSpec& spec, const Domain& domain,
                                 const std::vector<double>& sigmas) {
  CoveringReport rep;
  rep.sigmas = sigmas;
  const int dim = domain.dim();
  const int n = domain.n();
  const double h = domain.h();
  const double sqrt_d = std::sqrt(static_cast<double>(dim));
  // cell index range whose centers lie within half-width w of x along an axis
  auto axis_range = [&](double x, double w, int& lo, int& hi) {
    lo = std::max(0, static_cast<int>(std::ceil((x - w) / h - 0.5)));
    hi = std::min(n - 1, static_cast<int>(std::floor((x + w) / h - 0.5)));
  };
  auto visit_cube = [&](const Point& x, double half, auto&& fn) {
    int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int a = 0; a < dim; ++a) {
      axis_range(x[a], half, lo[a], hi[a]);
      if (lo[a] > hi[a]) return;
    }
    for (int k = lo[2]; k <= hi[2]; ++k)
      for (int j = lo[1]; j <= hi[1]; ++j)
        for (int i = lo[0]; i <= hi[0]; ++i) fn(domain.flat(Index{i, j, k}));
  };

  std::vector<std::uint8_t> covered(domain.cell_count(), 0);
  for (std::size_t c = 0; c < domain.cell_count(); ++c) {
    if (covered[c]) continue;
    const Point x = domain.cell_center(c);
    const ShenValue r = eval_rho(spec, x);
    rep.capped = rep.capped || r.capped;
    rep.centers.push_back(x);
    rep.radii.push_back(r.radius);
    covered[c] = 1;
    const double half = std::isinf(r.radius) ? 2.0 * domain.side() : r.radius / sqrt_d;
    visit_cube(x, half, [&](std::size_t cc) { covered[cc] = 1; });
  }
  rep.covers_box = std::all_of(covered.begin(), covered.end(), [](std::uint8_t v) { return v; });

  std::vector<int> count(domain.cell_count());
  for (double s : sigmas) {
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t j = 0; j < rep.centers.size(); ++j) {
      const double half =
          std::isinf(rep.radii[j]) ? 2.0 * domain.side() : s * rep.radii[j] / sqrt_d;
      visit_cube(rep.centers[j], half, [&](std::size_t cc) { ++count[cc]; });
    }
    rep.overlap.push_back(*std::max_element(count.begin(), count.end()));
  }

  // least squares on (log sigma, log N)
  const std::size_t m = sigmas.size();
  if (m >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double lx = std::log(sigmas[i]), ly = std::log(static_cast<double>(rep.overlap[i]));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    const double denom = m * sxx - sx * sx;
    rep.N1 = denom > 0 ? (m * sxy - sx * sy) / denom : 0.0;
    const double intercept = (sy - rep.N1 * sx) / m;
    rep.C = 0.0;
    rep.residual = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double ni = rep.overlap[i];
      rep.C = std::max(rep.C, ni / std::pow(sigmas[i], rep.N1));
      const double fit = std::exp(intercept + rep.N1 * std::log(sigmas[i]));
      rep.residual = std::max(rep.residual, std::fabs(fit - ni) / ni);
    }
  }
  return rep;
}

}  // namespace mixedlab
