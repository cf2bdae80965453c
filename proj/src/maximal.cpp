#include "mixedlab/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mixedlab {

namespace {

constexpr double kUnset = -std::numeric_limits<double>::infinity();

void require_covered(const std::vector<double>& m) {
  for (double v : m)
    if (v == kUnset) throw CoverageError("cube family does not cover every cell");
}

// Interval sweep for the dim-1 family of all cell-aligned intervals:
// M[x] = max over a <= x of max over b >= x of val([a, b]).
std::vector<double> interval_sup(int lo, int hi, const std::function<double(const Cube&)>& val,
                                 std::size_t out_size) {
  const int len = hi - lo;
  const std::size_t chunks = std::min<std::size_t>(thread_count(), static_cast<std::size_t>(len));
  std::vector<std::vector<double>> local(chunks, std::vector<double>(out_size, kUnset));
  parallel_for(chunks, [&](std::size_t c) {
    auto& m = local[c];
    for (int a = lo + static_cast<int>(c); a < hi; a += static_cast<int>(chunks)) {
      double running = kUnset;
      for (int b = hi - 1; b >= a; --b) {
        running = std::max(running, val(Cube{Index{a, 0, 0}, b - a + 1}));
        m[b] = std::max(m[b], running);
      }
    }
  });
  std::vector<double> out(out_size, kUnset);
  for (const auto& m : local)
    for (std::size_t i = 0; i < out_size; ++i) out[i] = std::max(out[i], m[i]);
  return out;
}

std::vector<double> list_sup(const Domain& d, const std::vector<Cube>& cubes,
                             const std::function<double(const Cube&)>& val) {
  std::vector<double> vals(cubes.size());
  parallel_for(cubes.size(), [&](std::size_t i) { vals[i] = val(cubes[i]); });
  std::vector<double> out(d.cell_count(), kUnset);
  for (std::size_t i = 0; i < cubes.size(); ++i)
    for_each_cell(d, cubes[i], [&](std::size_t c) { out[c] = std::max(out[c], vals[i]); });
  return out;
}

// (1 + r/rho)^(-sigma) avg(|f|^q)^(1/q) over a prefix table of |f|^q
std::function<double(const Cube&)> rho_sigma_value(const CubeSums& sums, const Domain& d,
                                                   const RhoSpec& rho, const MaximalParams& p) {
  return [&sums, &d, &rho, p](const Cube& q) {
    double avg = sums.average(q);
    if (p.q != 1.0) avg = std::pow(avg, 1.0 / p.q);
    if (p.sigma == 0.0 || rho.is_classical()) return avg;
    return avg * std::pow(rho.factor(q.center(d), q.radius(d)), -p.sigma);
  };
}

GridFunction power_abs(const GridFunction& f, double q) {
  GridFunction a = f.abs();
  return q == 1.0 ? a : a.pow(q);
}

}  // namespace

std::vector<double> family_sup(const CubeFamily& cubes, const std::function<double(const Cube&)>& val) {
  const Domain& d = cubes.domain();
  std::vector<double> out = cubes.policy() == CubePolicy::AllCellAligned
                                ? interval_sup(0, d.n(), val, d.cell_count())
                                : list_sup(d, cubes.materialize(), val);
  require_covered(out);
  return out;
}

GridFunction m_rho_sigma(const GridFunction& f, const RhoSpec& rho, const MaximalParams& params,
                         const CubeFamily& cubes) {
  require_same_domain(f.domain(), cubes.domain());
  if (!(params.sigma >= 0.0)) throw ParameterError("sigma must be nonnegative");
  if (!(params.q >= 1.0)) throw ParameterError("q must be at least 1");
  const CubeSums sums(power_abs(f, params.q));
  return GridFunction(f.domain(), family_sup(cubes, rho_sigma_value(sums, f.domain(), rho, params)));
}

GridFunction m_classical(const GridFunction& f, const CubeFamily& cubes) {
  return m_rho_sigma(f, RhoSpec::classical(), {}, cubes);
}

std::vector<double> dyadic_max_local(const DyadicPyramid& pyr) {
  const int dim = pyr.dim();
  const int side = pyr.side();
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) total *= static_cast<std::size_t>(side);
  std::vector<double> out(total, kUnset);
  for (int lvl = 0; lvl < pyr.levels(); ++lvl) {
    for (std::size_t i = 0; i < total; ++i) {
      std::size_t r = i;
      Index local{};
      for (int a = 0; a < dim; ++a) {
        local[a] = static_cast<int>(r % side);
        r /= side;
      }
      out[i] = std::max(out[i], pyr.average(lvl, pyr.locate(lvl, local)));
    }
  }
  return out;
}

GridFunction m_dyadic(const GridFunction& f, const Cube& R) {
  const Domain& d = f.domain();
  const DyadicPyramid pyr(f.abs(), R);
  const std::vector<double> local = dyadic_max_local(pyr);
  GridFunction out(d, 0.0);
  std::size_t i = 0;
  for_each_cell(d, R, [&](std::size_t c) { out[c] = local[i++]; });
  return out;
}

std::vector<Cube> localized_family(const Domain& d, const Cube& R) {
  require_inside(d, R);
  const int dim = d.dim();
  std::vector<Cube> out;
  if (dim == 1) {
    for (int s = 1; s <= R.side; ++s)
      for (int a = R.anchor[0]; a + s <= R.anchor[0] + R.side; ++a) out.push_back(Cube{Index{a, 0, 0}, s});
    return out;
  }
  for (int s = 1; s <= R.side; s *= 2) {
    const int stride = dyadic_sides_stride(s);
    const int count = (R.side - s) / stride + 1;
    Index m{};
    for (;;) {
      Cube q{R.anchor, s};
      for (int a = 0; a < dim; ++a) q.anchor[a] += m[a] * stride;
      out.push_back(q);
      int a = 0;
      while (a < dim && ++m[a] == count) m[a++] = 0;
      if (a == dim) break;
    }
  }
  return out;
}

GridFunction m_localized(const GridFunction& f, const Cube& R) {
  const Domain& d = f.domain();
  const CubeSums sums(f.abs());
  auto val = [&](const Cube& q) { return sums.average(q); };
  std::vector<double> m = d.dim() == 1
                              ? interval_sup(R.anchor[0], R.anchor[0] + R.side, val, d.cell_count())
                              : list_sup(d, localized_family(d, R), val);
  for (double& v : m)
    if (v == kUnset) v = 0.0;
  return GridFunction(d, std::move(m));
}

LocGlobSplit loc_glob_split(const GridFunction& f, const RhoSpec& rho, double sigma,
                            const CubeFamily& cubes) {
  require_same_domain(f.domain(), cubes.domain());
  if (!(sigma >= 0.0)) throw ParameterError("sigma must be nonnegative");
  const Domain& d = f.domain();
  const CubeSums sums(f.abs());
  auto full = family_sup(cubes, rho_sigma_value(sums, d, rho, {sigma, 1.0}));
  // cubes outside the piece contribute 0, so every cell stays covered
  auto loc = family_sup(cubes, [&](const Cube& q) {
    return rho.subcritical(q.center(d), q.radius(d)) ? sums.average(q) : 0.0;
  });
  auto glob = family_sup(cubes, [&](const Cube& q) {
    const Point c = q.center(d);
    const double r = q.radius(d);
    if (rho.subcritical(c, r)) return 0.0;
    return sums.average(q) * std::pow(rho(c) / r, sigma);
  });
  LocGlobSplit out{GridFunction(d, full), GridFunction(d, loc), GridFunction(d, glob)};
  const double low = std::pow(2.0, -sigma);
  for (std::size_t c = 0; c < full.size(); ++c) {
    const double sum = loc[c] + glob[c];
    if (full[c] > sum * (1.0 + 1e-12)) ++out.upper_violations;
    if (full[c] < low * std::max(loc[c], glob[c]) * (1.0 - 1e-12)) ++out.lower_violations;
    if (sum > 0.0) out.worst_upper = std::max(out.worst_upper, full[c] / sum);
  }
  return out;
}

std::vector<Index> shifted_grid_offsets(const Domain& d) {
  const int dim = d.dim();
  const int n = d.n();
  int total = 1;
  for (int a = 0; a < dim; ++a) total *= 3;
  std::vector<Index> out;
  for (int t = 0; t < total; ++t) {
    Index o{};
    int r = t;
    for (int a = 0; a < dim; ++a) {
      o[a] = (r % 3) * n / 3;
      r /= 3;
    }
    out.push_back(o);
  }
  return out;
}

namespace {
int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }
}  // namespace

Cube minimal_grid_parent(const Cube& q, const Index& offset, const Domain& d) {
  const int dim = d.dim();
  const int n = d.n();
  for (int s = 1; s <= 2 * n; s *= 2) {
    Cube p{Index{}, s};
    bool fits = s >= q.side;
    for (int a = 0; a < dim && fits; ++a) {
      // above the box scale a shifted axis moves its boundary off the offset, so
      // the offset point is not a boundary at every scale
      const int o = s > n && offset[a] != 0 ? offset[a] + n : offset[a];
      p.anchor[a] = o + floor_div(q.anchor[a] - o, s) * s;
      fits = q.anchor[a] + q.side <= p.anchor[a] + s;
    }
    if (fits) return p;
  }
  throw PreconditionError("cube does not fit the shifted grid at twice the box scale");
}

ShiftedGridReport shifted_grid_domination_audit(const GridFunction& f, const Cube& q) {
  const Domain& d = f.domain();
  const int dim = d.dim();
  if (dim > 2) throw ParameterError("shifted-grid audit supports dim 1 and 2");
  require_inside(d, q);
  ShiftedGridReport rep;
  rep.q = q;
  rep.lambda_best = std::numeric_limits<double>::infinity();
  const GridFunction mq = m_localized(f, q);
  std::vector<double> dyadic_sum(d.cell_count(), 0.0);
  const double qc2 = 2.0 * q.anchor[0] + q.side;  // twice the center, in cells
  const double qc2y = 2.0 * q.anchor[1] + q.side;
  for (const Index& off : shifted_grid_offsets(d)) {
    const Cube p = minimal_grid_parent(q, off, d);
    rep.parents.push_back(p);
    rep.escapes_box.push_back(!p.inside(d));
    // dilation about the center of q that reaches the far faces of p
    double lam = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double c2 = a == 0 ? qc2 : qc2y;
      lam = std::max({lam, std::fabs(2.0 * p.anchor[a] - c2), std::fabs(2.0 * (p.anchor[a] + p.side) - c2)});
    }
    lam /= q.side;
    rep.lambda = std::max(rep.lambda, lam);
    rep.lambda_best = std::min(rep.lambda_best, lam);
    // f 1_Q in the coordinates of p, zero wherever p leaves q
    const DyadicPyramid pyr(dim, p.side, [&](const Index& local) {
      Index g{};
      for (int a = 0; a < dim; ++a) g[a] = p.anchor[a] + local[a];
      return q.contains_cell(g, dim) ? std::fabs(f[d.flat(g)]) : 0.0;
    });
    const std::vector<double> md = dyadic_max_local(pyr);
    for_each_cell(d, q, [&](std::size_t c) {
      const Index g = d.unflat(c);
      std::size_t li = 0;
      for (int a = dim - 1; a >= 0; --a) li = li * p.side + (g[a] - p.anchor[a]);
      dyadic_sum[c] += md[li];
    });
  }
  const double scale = std::pow(3.0, dim);
  for_each_cell(d, q, [&](std::size_t c) {
    const double rhs = scale * dyadic_sum[c];
    if (mq[c] > rhs) ++rep.violations;
    if (rhs > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, mq[c] / rhs);
  });
  return rep;
}

}  // namespace mixedlab
