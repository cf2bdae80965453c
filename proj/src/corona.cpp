#include "mixedlab/corona.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>

namespace mixedlab {

double int_power(double a, int k) { return std::pow(a, static_cast<double>(k)); }

int band_index(double x, double a) {
  if (!(x > 0.0)) throw ParameterError("band index needs a positive value");
  int k = static_cast<int>(std::ceil(std::log(x) / std::log(a))) - 1;
  while (int_power(a, k + 1) < x) ++k;
  while (int_power(a, k) >= x) --k;
  return k;
}

namespace {

// The m with a^m <= x < a^{m+1}.
int floor_log(double x, double a) {
  int m = static_cast<int>(std::floor(std::log(x) / std::log(a)));
  while (int_power(a, m) > x) --m;
  while (int_power(a, m + 1) <= x) ++m;
  return m;
}

Cube pyramid_cube(const Cube& R, const DyadicPyramid& pyr, int level, std::size_t idx) {
  const Index off = pyr.cube_offset(level, idx);
  Cube q{R.anchor, R.side >> level};
  for (int a = 0; a < pyr.dim(); ++a) q.anchor[a] += off[a];
  return q;
}

void require_nonnegative(const GridFunction& g) {
  for (double x : g.values())
    if (x < 0.0) throw PreconditionError("the decomposed function must be nonnegative");
}

Cube dyadic_parent(const Cube& q, const Cube& R, int dim) {
  Cube p{R.anchor, 2 * q.side};
  for (int a = 0; a < dim; ++a) p.anchor[a] += (q.anchor[a] - R.anchor[a]) / p.side * p.side;
  return p;
}

double cube_sum(const GridFunction& f, const Cube& q) {
  double s = 0.0;
  for_each_cell(f.domain(), q, [&](std::size_t c) { s += f[c]; });
  return s;
}

}  // namespace

std::vector<std::pair<int, std::size_t>> cz_on_pyramid(const DyadicPyramid& pyr, double lambda) {
  if (pyr.average(0, 0) > lambda)
    throw PreconditionError("average over the cube exceeds the decomposition level");
  std::vector<std::pair<int, std::size_t>> out;
  const int dim = pyr.dim();
  const int last = pyr.levels() - 1;
  // depth-first bisection; children visited in child order
  std::vector<std::pair<int, std::size_t>> stack{{0, 0}};
  while (!stack.empty()) {
    const auto [lvl, idx] = stack.back();
    stack.pop_back();
    if (lvl == last) continue;
    const Index off = pyr.cube_offset(lvl, idx);
    const int half = (pyr.side() >> lvl) / 2;
    std::vector<std::pair<int, std::size_t>> recurse;
    for (int ch = 0; ch < (1 << dim); ++ch) {
      Index c = off;
      for (int a = 0; a < dim; ++a) c[a] += ((ch >> a) & 1) * half;
      const std::size_t ci = pyr.locate(lvl + 1, c);
      if (pyr.average(lvl + 1, ci) > lambda)
        out.emplace_back(lvl + 1, ci);
      else
        recurse.emplace_back(lvl + 1, ci);
    }
    for (auto it = recurse.rbegin(); it != recurse.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::vector<Cube> cz_on_cube(const GridFunction& g, const Cube& R, double lambda) {
  require_nonnegative(g);
  const DyadicPyramid pyr(g, R);
  std::vector<Cube> out;
  for (const auto& [lvl, idx] : cz_on_pyramid(pyr, lambda)) out.push_back(pyramid_cube(R, pyr, lvl, idx));
  return out;
}

LevelDecomposition level_decomposition(const GridFunction& g, const Cube& R, double a) {
  const Domain& d = g.domain();
  if (!(a > std::pow(2.0, d.dim()))) throw ParameterError("the level base must exceed 2^dim");
  require_nonnegative(g);
  LevelDecomposition out;
  out.R = R;
  out.a = a;
  const DyadicPyramid pyr(g, R);
  const double avg = pyr.average(0, 0);
  if (avg <= 0.0) return out;
  out.empty = false;
  out.k0 = band_index(avg, a) + 1;
  for (int k = out.k0;; ++k) {
    const auto found = cz_on_pyramid(pyr, int_power(a, k));
    if (found.empty()) break;
    std::vector<Cube> cubes;
    CellSet omega(d.cell_count(), 0);
    for (const auto& [lvl, idx] : found) {
      cubes.push_back(pyramid_cube(R, pyr, lvl, idx));
      for_each_cell(d, cubes.back(), [&](std::size_t c) { omega[c] = 1; });
    }
    out.cubes.push_back(std::move(cubes));
    out.omega.push_back(std::move(omega));
  }
  return out;
}

int ClassifiedCubes::max_ell() const {
  int m = -1;
  for (const PrimaryCube& p : primary) m = std::max(m, p.ell);
  return m;
}

ClassifiedCubes classify(const LevelDecomposition& decomp, const GridFunction& v) {
  require_weight(v, "v");
  const Domain& d = v.domain();
  ClassifiedCubes out;
  out.R = decomp.R;
  out.a = decomp.a;
  out.k0 = decomp.k0;
  if (decomp.empty) return out;
  const double a = decomp.a;
  const DyadicPyramid vp(v, decomp.R);
  const int top = vp.levels() - 1;
  auto meets_band = [&](const Cube& q, int k) {
    const double lo = int_power(a, k), hi = int_power(a, k + 1);
    bool hit = false;
    for_each_cell(d, q, [&](std::size_t c) { hit = hit || (v[c] > lo && v[c] <= hi); });
    return hit;
  };
  for (int i = 0; i < decomp.levels(); ++i) {
    const int k = decomp.k0 + i;
    for (const Cube& q : decomp.cubes[i]) {
      PrimaryCube p;
      p.cube = q;
      p.k = k;
      Index local{};
      for (int ax = 0; ax < d.dim(); ++ax) local[ax] = q.anchor[ax] - decomp.R.anchor[ax];
      const int lvl = top - std::countr_zero(static_cast<unsigned>(q.side));
      p.avg_v = vp.average(lvl, vp.locate(lvl, local));
      if (p.avg_v < int_power(a, k)) {
        p.ell = -1;
        const std::size_t host = out.primary.size();
        for (const Cube& s : cz_on_cube(v, q, int_power(a, k)))
          out.secondary.push_back({s, k, host, meets_band(s, k)});
      } else {
        p.ell = floor_log(p.avg_v, a) - k;
        p.gamma = meets_band(q, k);
      }
      out.primary.push_back(p);
    }
  }
  return out;
}

int PrincipalForest::generations() const {
  int g = 0;
  for (int x : generation) g = std::max(g, x + 1);
  return g;
}

PrincipalForest principal_select(const ClassifiedCubes& cls, const GridFunction& u, int branch,
                                 double delta, double eps) {
  require_weight(u, "u");
  if (branch < -1) throw ParameterError("branch must be -1 or a nonnegative band");
  if (branch == -1 && !(delta > 0.0 && delta < eps))
    throw ParameterError("the -1 branch needs 0 < delta < eps");
  const Domain& d = u.domain();
  const int dim = d.dim();
  PrincipalForest out{branch, delta, {}, {}, {}, {}, {}, GridFunction(d, 0.0)};
  if (branch >= 0) {
    for (const PrimaryCube& p : cls.primary)
      if (p.ell == branch && p.gamma) out.elements.push_back({p.cube, p.k, p.cube});
  } else {
    for (const SecondaryCube& s : cls.secondary)
      if (s.gamma) out.elements.push_back({s.cube, s.k, cls.primary[s.primary].cube});
  }
  const auto& el = out.elements;
  const std::size_t m = el.size();
  const CubeSums us(u);
  std::vector<double> avg(m);
  std::map<Cube, std::vector<std::size_t>> by_cube;
  for (std::size_t i = 0; i < m; ++i) {
    avg[i] = us.average(el[i].cube);
    by_cube[el[i].cube].push_back(i);
  }
  auto threshold = [&](std::size_t q, std::size_t p) {
    const double f = branch >= 0 ? 2.0 : std::pow(cls.a, (el[q].k - el[p].k) * delta);
    return f * avg[p];
  };
  // calls fn(cube) for every strict dyadic ancestor of q inside R, smallest first
  auto for_each_ancestor = [&](const Cube& q, auto&& fn) {
    for (Cube c = q; c.side < cls.R.side;) {
      c = dyadic_parent(c, cls.R, dim);
      if (!fn(c)) return;
    }
  };

  std::vector<int> gen(m, -1);
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < m; ++i) {
    bool maximal = true;
    for_each_ancestor(el[i].cube, [&](const Cube& c) {
      if (by_cube.count(c)) maximal = false;
      return maximal;
    });
    if (maximal) {
      gen[i] = 0;
      current.push_back(i);
    }
  }
  for (int g = 0; !current.empty(); ++g) {
    std::vector<char> in_current(m, 0);
    for (std::size_t p : current) in_current[p] = 1;
    std::set<std::size_t> next;
    for (std::size_t q = 0; q < m; ++q) {
      double pathmax = -std::numeric_limits<double>::infinity();
      for_each_ancestor(el[q].cube, [&](const Cube& c) {
        auto it = by_cube.find(c);
        if (it == by_cube.end()) return true;
        for (std::size_t p : it->second) {
          if (!in_current[p]) continue;
          const double thr = threshold(q, p);
          if (avg[q] > thr && pathmax <= thr) next.insert(q);
        }
        for (std::size_t p : it->second) pathmax = std::max(pathmax, avg[p]);
        return true;
      });
    }
    current.clear();
    for (std::size_t q : next)
      if (gen[q] < 0) {
        gen[q] = g + 1;
        current.push_back(q);
      }
  }
  for (std::size_t i = 0; i < m; ++i)
    if (gen[i] >= 0) {
      out.principal.push_back(i);
      out.generation.push_back(gen[i]);
    }

  // smallest principal containing each element, itself first
  auto smallest_principal_at = [&](const Cube& c) -> std::ptrdiff_t {
    auto it = by_cube.find(c);
    if (it == by_cube.end()) return -1;
    for (std::size_t p : it->second)
      if (gen[p] >= 0) return static_cast<std::ptrdiff_t>(p);
    return -1;
  };
  out.assignment.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::ptrdiff_t found = gen[i] >= 0 ? static_cast<std::ptrdiff_t>(i) : smallest_principal_at(el[i].cube);
    if (found < 0)
      for_each_ancestor(el[i].cube, [&](const Cube& c) {
        found = smallest_principal_at(c);
        return found < 0;
      });
    if (found < 0) throw PreconditionError("element without a principal ancestor");
    out.assignment[i] = static_cast<std::size_t>(found);
  }
  for (std::size_t p : out.principal) {
    std::ptrdiff_t found = -1;
    for_each_ancestor(el[p].cube, [&](const Cube& c) {
      found = smallest_principal_at(c);
      return found < 0;
    });
    out.parent.push_back(found);
  }

  for (std::size_t p : out.principal) {
    const Cube& support = el[p].host;
    const double value = branch >= 0 ? avg[p]
                                     : cube_sum(u, el[p].cube) /
                                           static_cast<double>(support.cell_count(dim));
    for_each_cell(d, support, [&](std::size_t c) { out.h[c] += value; });
  }
  return out;
}

ClaimReport claim_audits(const std::vector<PrincipalForest>& forests, const ClassifiedCubes& cls,
                         const LevelDecomposition& decomp, const GridFunction& u, double theta,
                         const RhoSpec& rho) {
  const Domain& d = u.domain();
  ClaimReport rep;
  rep.theta = theta;
  rep.u_char = ap_characteristic(u, 1.0, theta, rho, CubeFamily(d, CubePolicy::DyadicGridOf, cls.R)).value;
  rep.h1_bound_factor = std::pow(2.0, 1.0 + theta) * rep.u_char;
  for (const PrincipalForest& f : forests) {
    if (f.branch >= 0) {
      for_each_cell(d, cls.R, [&](std::size_t c) {
        const double bound = rep.h1_bound_factor * u[c];
        if (f.h[c] > bound * (1.0 + 1e-12)) ++rep.h1_violations;
        rep.h1_worst = std::max(rep.h1_worst, f.h[c] / bound);
      });
      continue;
    }
    for_each_cell(d, cls.R, [&](std::size_t c) { rep.h2_over_u = std::max(rep.h2_over_u, f.h[c] / u[c]); });
    // per primary host: sum over its principal secondary cubes of u(P)/u(host)
    std::map<std::pair<Cube, int>, std::size_t> primary_of;
    for (std::size_t i = 0; i < cls.primary.size(); ++i) primary_of[{cls.primary[i].cube, cls.primary[i].k}] = i;
    std::vector<double> host_sum(cls.primary.size(), 0.0);
    for (std::size_t p : f.principal) {
      const ForestElement& e = f.elements[p];
      const std::size_t host = primary_of.at({e.host, e.k});
      host_sum[host] += cube_sum(u, e.cube) / cube_sum(u, e.host);
    }
    // level-by-level owner of each cell
    std::vector<std::vector<std::ptrdiff_t>> owner(decomp.levels(), std::vector<std::ptrdiff_t>(d.cell_count(), -1));
    for (std::size_t i = 0; i < cls.primary.size(); ++i) {
      const int lvl = cls.primary[i].k - decomp.k0;
      for_each_cell(d, cls.primary[i].cube, [&](std::size_t c) { owner[lvl][c] = static_cast<std::ptrdiff_t>(i); });
    }
    const CubeSums us(u);
    for_each_cell(d, cls.R, [&](std::size_t c) {
      double anchor_avg = -1.0;
      double segment = 0.0;
      for (int lvl = 0; lvl < decomp.levels(); ++lvl) {
        const std::ptrdiff_t o = owner[lvl][c];
        if (o < 0) continue;
        const double avg = us.average(cls.primary[o].cube);
        if (anchor_avg < 0.0 || avg > 2.0 * anchor_avg) {
          rep.double_sum = std::max(rep.double_sum, segment);
          anchor_avg = avg;
          segment = 0.0;
        }
        segment += host_sum[o];
      }
      rep.double_sum = std::max(rep.double_sum, segment);
    });
  }
  return rep;
}

std::map<int, CellSet> e_sets(const GridFunction& g, const GridFunction& v, const Cube& R, double a) {
  const Domain& d = g.domain();
  const GridFunction md = m_dyadic(g, R);
  std::map<int, CellSet> out;
  for_each_cell(d, R, [&](std::size_t c) {
    if (!(md[c] > v[c])) return;
    auto& set = out[band_index(v[c], a)];
    if (set.empty()) set.assign(d.cell_count(), 0);
    set[c] = 1;
  });
  return out;
}

LemmaReport lemma_audits(const ClassifiedCubes& cls, const GridFunction& u, const GridFunction& v,
                         const GridFunction& g) {
  const Domain& d = u.domain();
  const int dim = d.dim();
  LemmaReport rep;
  const auto E = e_sets(g, v, cls.R, cls.a);
  std::map<int, double> per_ell;
  for (const PrimaryCube& p : cls.primary) {
    if (p.ell < 0 || !p.gamma) continue;
    double num = 0.0;
    auto it = E.find(p.k);
    if (it != E.end())
      for_each_cell(d, p.cube, [&](std::size_t c) {
        if (it->second[c]) num += u[c];
      });
    const double r = num / cube_sum(u, p.cube);
    auto [pos, inserted] = per_ell.emplace(p.ell, r);
    if (!inserted) pos->second = std::max(pos->second, r);
  }
  for (const auto& [ell, r] : per_ell) {
    rep.ells.push_back(ell);
    rep.max_ratio.push_back(r);
  }
  // log r = log c1 - c2 ell, on the bands with a positive ratio
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < rep.ells.size(); ++i)
    if (rep.max_ratio[i] > 0.0) pts.emplace_back(rep.ells[i], std::log(rep.max_ratio[i]));
  if (pts.size() >= 3) {
    rep.exponential_conclusive = true;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double k = static_cast<double>(pts.size());
    const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    const double icpt = (sy - slope * sx) / k;
    rep.c2 = -slope;
    double ss = 0.0;
    for (const auto& [x, y] : pts) {
      rep.c1 = std::max(rep.c1, std::exp(y + rep.c2 * x));
      ss += (y - icpt - slope * x) * (y - icpt - slope * x);
    }
    rep.fit_residual = std::sqrt(ss / k);
  }

  // sparsity over Gamma = Gamma_{ell>=0} and Gamma_{-1}, every level
  std::vector<Cube> gamma;
  for (const PrimaryCube& p : cls.primary)
    if (p.ell >= 0 && p.gamma) gamma.push_back(p.cube);
  for (const SecondaryCube& s : cls.secondary)
    if (s.gamma) gamma.push_back(s.cube);
  rep.sparsity_vacuous = gamma.empty();
  std::map<Cube, double> packing;
  for (const Cube& q : gamma) packing[q] = 0.0;
  for (const Cube& q : gamma) {
    const double vol = static_cast<double>(q.cell_count(dim));
    for (Cube c = q;;) {
      auto it = packing.find(c);
      if (it != packing.end()) it->second += vol;
      if (c.side >= cls.R.side) break;
      c = dyadic_parent(c, cls.R, dim);
    }
  }
  CellSet mark(d.cell_count(), 0);
  for (const auto& [q, packed] : packing) {
    const double vol = static_cast<double>(q.cell_count(dim));
    rep.sparsity_packing = std::max(rep.sparsity_packing, packed / vol);
    std::size_t covered = 0;
    for (const Cube& c : gamma)
      if (q.contains(c, dim)) for_each_cell(d, c, [&](std::size_t i) { covered += !mark[i]; mark[i] = 1; });
    for_each_cell(d, q, [&](std::size_t i) { mark[i] = 0; });
    rep.sparsity_union = std::max(rep.sparsity_union, covered / vol);
  }
  return rep;
}

DyadicMixedReport mixed_verify_dyadic(const GridFunction& f, const GridFunction& u,
                                      const GridFunction& v, const Cube& R, double a, double t,
                                      double u_char, double factor_theta) {
  require_weight(u, "u");
  require_weight(v, "v");
  require_same_domain(f.domain(), u.domain());
  require_same_domain(f.domain(), v.domain());
  if (!(t > 0.0)) throw ParameterError("level t must be positive");
  const Domain& d = f.domain();
  const double vol = d.cell_volume();
  DyadicMixedReport rep;
  rep.t = t;
  GridFunction g(d, 0.0);
  for_each_cell(d, R, [&](std::size_t c) {
    g[c] = std::fabs(f[c]) * v[c] / t;
    rep.rhs += std::fabs(f[c]) * u[c] * v[c] * vol;
  });
  const auto E = e_sets(g, v, R, a);
  const LevelDecomposition dec = level_decomposition(g, R, a);
  rep.k0 = dec.k0;
  std::map<int, LevelLedgerRow> rows;
  for (const auto& [k, set] : E) {
    double m = 0.0;
    for_each_cell(d, R, [&](std::size_t c) {
      if (set[c]) m += u[c] * v[c] * vol;
    });
    rows[k].k = k;
    rows[k].uv_E = m;
    rep.lhs += m;
    if (dec.empty || k < dec.k0)
      rep.tail += m;
    else
      rep.head += m;
  }
  rep.tail_bound = a * a / (a - 1.0) * u_char * factor_theta * rep.rhs / t;
  if (!dec.empty) {
    const ClassifiedCubes cls = classify(dec, v);
    for (const PrimaryCube& p : cls.primary) {
      if (p.ell < 0 || !p.gamma) continue;
      auto it = E.find(p.k);
      double ue = 0.0;
      if (it != E.end())
        for_each_cell(d, p.cube, [&](std::size_t c) {
          if (it->second[c]) ue += u[c] * vol;
        });
      const double term = int_power(a, p.k + 1) * ue;
      rows[p.k].k = p.k;
      rows[p.k].I += term;
      rep.I += term;
    }
    for (const SecondaryCube& s : cls.secondary) {
      if (!s.gamma) continue;
      const double term = int_power(a, s.k + 1) * cube_sum(u, s.cube) * vol;
      rows[s.k].k = s.k;
      rows[s.k].II += term;
      rep.II += term;
    }
  }
  for (const auto& [k, row] : rows) rep.ledger.push_back(row);
  rep.ratio = rep.rhs > 0.0 ? t * rep.lhs / rep.rhs : 0.0;
  return rep;
}

double dyadic_mixed_constant(const GridFunction& f, const GridFunction& u, const GridFunction& v,
                             const Cube& R) {
  require_weight(u, "u");
  require_weight(v, "v");
  const Domain& d = f.domain();
  GridFunction fv(d, 0.0);
  double rhs = 0.0;
  for_each_cell(d, R, [&](std::size_t c) {
    fv[c] = std::fabs(f[c]) * v[c];
    rhs += std::fabs(f[c]) * u[c] * v[c] * d.cell_volume();
  });
  if (rhs <= 0.0) return 0.0;
  const GridFunction md = m_dyadic(fv, R);
  const GridFunction F = md / v;  // zero outside R
  return weak_sup(F, WeightedMeasure(u * v)) / rhs;
}

double sigma_recipe(double N1, double theta, double decay_rate) {
  if (!(decay_rate > 0.0)) throw ParameterError("decay rate must be positive");
  return (N1 + theta + 1.0) / decay_rate + 1.0;
}

GlobalMixedReport mixed_verify_global(const GridFunction& f, const GridFunction& u,
                                      const GridFunction& v, const RhoSpec& rho, double sigma,
                                      const CubeFamily& cubes, const std::vector<double>& t_grid,
                                      bool with_split) {
  require_weight(u, "u");
  require_weight(v, "v");
  require_same_domain(f.domain(), u.domain());
  require_same_domain(f.domain(), v.domain());
  const Domain& d = f.domain();
  GlobalMixedReport rep;
  rep.sigma = sigma;
  const GridFunction fv = f.abs() * v;
  const GridFunction uv = u * v;
  for (std::size_t c = 0; c < f.size(); ++c) rep.rhs += std::fabs(f[c]) * uv[c] * d.cell_volume();
  if (rep.rhs <= 0.0) return rep;
  const WeightedMeasure mu(uv);
  if (!with_split) {
    rep.constant = weak_sup(m_rho_sigma(fv, rho, {sigma, 1.0}, cubes) / v, mu, t_grid) / rep.rhs;
    rep.covering_cubes = 0;
    return rep;
  }
  const LocGlobSplit split = loc_glob_split(fv, rho, sigma, cubes);
  rep.constant = weak_sup(split.full / v, mu, t_grid) / rep.rhs;
  auto half_level = [&](const GridFunction& F) {
    if (t_grid.empty()) return 2.0 * weak_sup(F, mu);
    double best = 0.0;
    for (double t : t_grid) best = std::max(best, t * distribution(F, mu, t / 2.0));
    return best;
  };
  rep.loc_constant = half_level(split.loc / v) / rep.rhs;
  rep.glob_constant = half_level(split.glob / v) / rep.rhs;
  if (!rho.is_classical() && rho.kind() != RhoSpec::Kind::Shen)
    rep.covering_cubes = critical_covering(rho, d).centers.size();
  else
    rep.covering_cubes = 1;
  return rep;
}

CoronaRun run_corona(const GridFunction& f, const GridFunction& u, const GridFunction& v,
                     const Cube& R, const RhoSpec& rho, const CoronaOptions& opt) {
  const Domain& d = f.domain();
  CoronaRun run;
  const double a = opt.a.value_or(std::pow(2.0, d.dim() + 1));
  GridFunction g(d, 0.0);
  for_each_cell(d, R, [&](std::size_t c) { g[c] = std::fabs(f[c]) * v[c]; });
  run.decomp = level_decomposition(g, R, a);
  run.classified = classify(run.decomp, v);
  run.v_eps = ainf_epsilon_form(v, 0.0, RhoSpec::classical(), CubeFamily(d, CubePolicy::DyadicGridOf, R));
  run.delta = opt.delta.value_or(run.v_eps.eps / 2.0);
  for (int ell = 0; ell <= run.classified.max_ell(); ++ell)
    run.forests.push_back(principal_select(run.classified, u, ell));
  run.forests.push_back(principal_select(run.classified, u, -1, run.delta, run.v_eps.eps));
  run.claims = claim_audits(run.forests, run.classified, run.decomp, u, opt.theta, rho);
  run.lemmas = lemma_audits(run.classified, u, v, g);
  const double fac = std::pow(rho.factor(R.center(d), R.radius(d)), opt.theta);
  run.mixed = mixed_verify_dyadic(f, u, v, R, a, 1.0, run.claims.u_char, fac);
  return run;
}

}  // namespace mixedlab
