#include "mixedlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mixedlab/corona.hpp"
#include "mixedlab/lorentz.hpp"
#include "mixedlab/maximal.hpp"

namespace mixedlab {

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& what) {
  throw ConfigError(path + ": " + what);
}

const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) config_error(path, "expected an object");
  if (!j.contains(key)) config_error(path + "." + key, "missing");
  return j.at(key);
}

double number(const json& j, const std::string& key, const std::string& path, std::optional<double> fallback = {}) {
  if (!j.is_object()) config_error(path, "expected an object");
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    config_error(path + "." + key, "missing");
  }
  const json& v = j.at(key);
  if (v.is_string() && (v == "inf" || v == "infinity")) return kInf;
  if (!v.is_number()) config_error(path + "." + key, "expected a number");
  return v.get<double>();
}

std::string text(const json& j, const std::string& key, const std::string& path,
                 std::optional<std::string> fallback = {}) {
  if (!j.is_object()) config_error(path, "expected an object");
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    config_error(path + "." + key, "missing");
  }
  if (!j.at(key).is_string()) config_error(path + "." + key, "expected a string");
  return j.at(key).get<std::string>();
}

Point point(const json& j, const std::string& key, const std::string& path, Point fallback) {
  if (!j.contains(key)) return fallback;
  const json& a = j.at(key);
  if (!a.is_array() || a.size() > kMaxDim) config_error(path + "." + key, "expected an array of coordinates");
  Point p{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) config_error(path + "." + key + "[" + std::to_string(i) + "]", "expected a number");
    p[i] = a[i].get<double>();
  }
  return p;
}

Point box_center(const Domain& d) {
  Point c{};
  for (int a = 0; a < d.dim(); ++a) c[a] = d.side() / 2.0;
  return c;
}

}  // namespace

Domain parse_domain(const json& j, const std::string& path) {
  const double dim = number(j, "dim", path);
  const double side = number(j, "side", path, 1.0);
  const double level = number(j, "level", path);
  if (dim < 1 || dim > kMaxDim || dim != std::floor(dim)) config_error(path + ".dim", "must be 1, 2 or 3");
  if (!(side > 0.0) || std::isinf(side)) config_error(path + ".side", "must be positive");
  if (level < 1 || level > 14 || level != std::floor(level)) config_error(path + ".level", "must be an integer in [1, 14]");
  return Domain(static_cast<int>(dim), side, static_cast<int>(level));
}

RhoSpec parse_rho(const json& j, const Domain& d, const std::string& path) {
  const std::string kind = text(j, "kind", path);
  try {
    if (kind == "classical") return RhoSpec::classical();
    if (kind == "constant") return RhoSpec::constant(number(j, "value", path));
    if (kind == "inverse_linear")
      return RhoSpec::inverse_linear(number(j, "scale", path, 1.0), point(j, "origin", path, Point{}));
    if (kind == "ramp") return RhoSpec::ramp(number(j, "floor", path));
    if (kind == "shen") {
      const json& pot = field(j, "potential", path);
      if (pot.is_object() && pot.contains("file")) return RhoSpec::shen(read_grid_function(text(pot, "file", path + ".potential")));
      return RhoSpec::shen(GridFunction(d, number(pot, "value", path + ".potential")));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    config_error(path, e.what());
  }
  config_error(path + ".kind", "unknown rho kind '" + kind + "'");
}

WeightGenerator parse_weight(const json& j, const Domain& d, const std::string& path) {
  const std::string kind = text(j, "kind", path);
  if (kind == "constant") {
    const double c = number(j, "c", path, 1.0);
    if (!(c > 0.0)) config_error(path + ".c", "must be positive");
    return constant_weight(c);
  }
  if (kind == "power")
    return power_weight(point(j, "center", path, Point{}), number(j, "alpha", path), number(j, "floor", path, 1.0));
  if (kind == "two_band") {
    const double lo = number(j, "low", path), hi = number(j, "high", path);
    if (!(lo > 0.0) || !(hi > 0.0)) config_error(path, "band values must be positive");
    return two_band_weight(lo, hi, number(j, "period", path));
  }
  if (kind == "rho_adapted")
    return rho_adapted_weight(parse_rho(field(j, "rho", path), d, path + ".rho"), point(j, "center", path, box_center(d)),
                              number(j, "beta", path));
  if (kind == "product")
    return product_weight(parse_weight(field(j, "u", path), d, path + ".u"),
                          parse_weight(field(j, "v", path), d, path + ".v"), number(j, "p", path));
  config_error(path + ".kind", "unknown weight kind '" + kind + "'");
}

SCZOKernel parse_kernel(const json& j, const Domain& d, const std::string& path) {
  SCZOKernel k;
  k.dim = d.dim();
  if (j.is_null()) return k;
  const std::string profile = text(j, "profile", path, "odd");
  if (profile != "odd") config_error(path + ".profile", "only the odd profile is available");
  k.N = number(j, "N", path, 0.0);
  k.delta = number(j, "delta", path, 1.0);
  if (!(k.delta > 0.0 && k.delta <= 1.0)) config_error(path + ".delta", "must lie in (0, 1]");
  if (k.N < 0.0) config_error(path + ".N", "must be nonnegative");
  if (j.contains("rho")) k.rho = parse_rho(j.at("rho"), d, path + ".rho");
  return k;
}

std::vector<GeneratedFunction> generate_functions(const json& spec, int dim, double side, std::uint64_t seed) {
  const std::string path = "f_suite";
  const int count = static_cast<int>(number(spec, "count", path, 10.0));
  if (count < 1) config_error(path + ".count", "must be positive");
  std::vector<std::string> kinds = {"spike", "indicator", "random", "oscillatory"};
  if (spec.contains("kinds")) {
    kinds.clear();
    for (const json& k : spec.at("kinds")) {
      if (!k.is_string()) config_error(path + ".kinds", "expected strings");
      kinds.push_back(k.get<std::string>());
    }
    if (kinds.empty()) config_error(path + ".kinds", "empty");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<GeneratedFunction> out;
  for (int i = 0; i < count; ++i) {
    const std::string& kind = kinds[i % kinds.size()];
    GeneratedFunction g;
    g.kind = kind;
    if (kind == "spike") {
      // height on one cube of side L/32
      std::uniform_int_distribution<int> pick(0, 31);
      std::vector<int> m(dim);
      for (int& x : m) x = pick(rng);
      const double height = 1.0 + 9.0 * unit(rng);
      g.params = {{"cell", m}, {"height", height}, {"cells_per_axis", 32}};
      g.make = [m, height, side](const Domain& d) {
        return GridFunction::from_function(d, [&](const Point& x) {
          for (std::size_t a = 0; a < m.size(); ++a)
            if (static_cast<int>(std::floor(x[a] * 32.0 / side)) != m[a]) return 0.0;
          return height;
        });
      };
    } else if (kind == "indicator") {
      // box with corners on the L/64 lattice
      std::uniform_int_distribution<int> pick(0, 64);
      std::vector<double> lo(dim), hi(dim);
      for (int a = 0; a < dim; ++a) {
        int p = pick(rng), q = pick(rng);
        while (q == p) q = pick(rng);
        lo[a] = std::min(p, q) * side / 64.0;
        hi[a] = std::max(p, q) * side / 64.0;
      }
      g.params = {{"lo", lo}, {"hi", hi}};
      g.make = [lo, hi](const Domain& d) {
        return GridFunction::from_function(d, [&](const Point& x) {
          for (std::size_t a = 0; a < lo.size(); ++a)
            if (x[a] < lo[a] || x[a] >= hi[a]) return 0.0;
          return 1.0;
        });
      };
    } else if (kind == "random") {
      // nonnegative, piecewise constant on a 16^dim lattice
      const int k = 16;
      std::size_t cells = 1;
      for (int a = 0; a < dim; ++a) cells *= k;
      std::vector<double> vals(cells);
      for (double& v : vals) v = unit(rng);
      g.params = {{"cells_per_axis", k}, {"values", vals}};
      g.make = [vals, k, side, dim](const Domain& d) {
        return GridFunction::from_function(d, [&](const Point& x) {
          std::size_t idx = 0;
          for (int a = dim - 1; a >= 0; --a)
            idx = idx * k + static_cast<std::size_t>(std::min(k - 1, static_cast<int>(std::floor(x[a] * k / side))));
          return vals[idx];
        });
      };
    } else if (kind == "oscillatory") {
      std::uniform_int_distribution<int> freq(1, 4);
      const int kf = freq(rng);
      const double phase = 2.0 * M_PI * unit(rng);
      g.params = {{"frequency", kf}, {"phase", phase}};
      g.make = [kf, phase, side](const Domain& d) {
        return GridFunction::from_function(d, [&](const Point& x) { return std::sin(2.0 * M_PI * kf * x[0] / side + phase); });
      };
    } else {
      config_error(path + ".kinds", "unknown function kind '" + kind + "'");
    }
    out.push_back(std::move(g));
  }
  return out;
}

json standard_weight_pairs(int dim, double side) {
  std::vector<double> c(dim, side / 2.0), corner(dim, 0.0), third(dim, side / 3.0);
  const json one = {{"kind", "constant"}, {"c", 1.0}};
  const json rho_lin = {{"kind", "inverse_linear"}, {"scale", side / 4.0}, {"origin", c}};
  auto power = [&](const std::vector<double>& at, double alpha) {
    return json{{"kind", "power"}, {"center", at}, {"alpha", alpha}, {"floor", 1.0}};
  };
  auto band = [&](double low, double high, double period) {
    return json{{"kind", "two_band"}, {"low", low}, {"high", high}, {"period", period}};
  };
  auto adapted = [&](double beta) { return json{{"kind", "rho_adapted"}, {"rho", rho_lin}, {"center", c}, {"beta", beta}}; };
  const double a1 = -0.5 * dim;  // |x|^a is A_1 for -dim < a <= 0
  const json pairs = json::array({
      {{"u", one}, {"v", one}},
      {{"u", one}, {"v", power(c, 0.5)}},
      {{"u", one}, {"v", power(corner, 1.0)}},
      {{"u", one}, {"v", band(1.0, 4.0, side / 8.0)}},
      {{"u", power(c, a1)}, {"v", one}},
      {{"u", power(c, a1)}, {"v", power(third, 0.5)}},
      {{"u", power(corner, a1 / 2.0)}, {"v", power(c, 1.0)}},
      {{"u", power(third, a1)}, {"v", band(1.0, 8.0, side / 16.0)}},
      {{"u", band(1.0, 2.0, side / 4.0)}, {"v", one}},
      {{"u", band(1.0, 3.0, side / 8.0)}, {"v", power(c, 0.5)}},
      {{"u", band(0.5, 1.0, side / 2.0)}, {"v", band(1.0, 4.0, side / 32.0)}},
      {{"u", adapted(-0.5)}, {"v", one}},
      {{"u", adapted(-0.25)}, {"v", power(c, 0.5)}},
      {{"u", one}, {"v", adapted(1.0)}},
      {{"u", adapted(-0.5)}, {"v", adapted(0.5)}},
      {{"u", power(c, a1 / 2.0)}, {"v", power(c, -0.25 * dim)}},
      {{"u", one}, {"v", power(c, -0.5 * dim)}},
      {{"u", power(corner, a1)}, {"v", power(corner, 0.5)}},
      {{"u", band(1.0, 2.0, side / 16.0)}, {"v", adapted(0.5)}},
      {{"u", power(c, a1)}, {"v", band(0.25, 1.0, side / 4.0)}},
  });
  return pairs;
}

namespace {

CubeFamily family_of(const json& cfg, const Domain& d) {
  const std::string def = d.dim() == 1 ? "all" : "dyadic";
  const std::string policy = cfg.is_object() && cfg.contains("cubes") ? text(cfg, "cubes", "config") : def;
  try {
    const CubePolicy p = parse_cube_policy(policy);
    if (p == CubePolicy::DyadicGridOf) return CubeFamily(d, p, whole_box(d));
    if (p == CubePolicy::AllCellAligned && d.dim() != 1) config_error("cubes", "'all' is available in dim 1 only");
    return CubeFamily(d, p);
  } catch (const ParameterError& e) {
    config_error("cubes", e.what());
  }
}

// Halves exponents and band contrast; false when nothing can be widened.
bool widen(json& w) {
  const std::string kind = w.value("kind", "");
  if (kind == "power") {
    w["alpha"] = w["alpha"].get<double>() / 2.0;
    return true;
  }
  if (kind == "rho_adapted") {
    w["beta"] = w["beta"].get<double>() / 2.0;
    return true;
  }
  if (kind == "two_band") {
    const double lo = w["low"].get<double>(), hi = w["high"].get<double>();
    if (lo == hi) return false;
    w["high"] = std::sqrt(lo * hi);
    w["low"] = std::min(lo, std::sqrt(lo * hi));
    return true;
  }
  if (kind == "product") return widen(w["u"]) | widen(w["v"]);
  return false;
}

bool meets_class(const json& spec, const GridFunction& w, const RhoSpec& rho, const CubeFamily& cubes,
                 const std::string& path) {
  if (!spec.contains("class")) return true;
  const std::string cls = text(spec, "class", path);
  double p = 1.0;
  if (cls == "A1")
    p = 1.0;
  else if (cls == "Ap")
    p = number(spec, "p", path);
  else if (cls == "Ainf")
    p = kInf;
  else
    config_error(path + ".class", "unknown class '" + cls + "'");
  for (const auto& c : ap_ladder(w, p, default_theta_ladder(), rho, cubes))
    if (std::isfinite(c.value) && c.value < 1e3) return true;
  return false;
}

}  // namespace

Suite generate_suite(const json& config) {
  const Domain d = parse_domain(field(config, "domain", "config"));
  const RhoSpec rho = config.contains("rho") ? parse_rho(config.at("rho"), d) : RhoSpec::classical();
  const auto seed = static_cast<std::uint64_t>(number(config, "seed", "config", 1.0));
  const CubeFamily cubes = family_of(config, d);
  Suite s;
  json pairs = config.contains("weights") ? config.at("weights") : json("standard");
  if (pairs.is_string()) {
    if (pairs != "standard") config_error("weights", "expected an array or \"standard\"");
    pairs = standard_weight_pairs(d.dim(), d.side());
  }
  if (!pairs.is_array()) config_error("weights", "expected an array");
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string path = "weights[" + std::to_string(i) + "]";
    WeightPair wp;
    for (const char* role : {"u", "v"}) {
      json spec = field(pairs[i], role, path);
      const std::string wpath = path + "." + role;
      int tries = 0;
      while (true) {
        WeightGenerator gen = parse_weight(spec, d, wpath);
        const GridFunction w = gen(d);
        if (!w.is_weight()) config_error(wpath, "generated weight is not positive and finite");
        if (meets_class(spec, w, rho, cubes, wpath)) {
          (std::string(role) == "u" ? wp.u : wp.v) = gen;
          (std::string(role) == "u" ? wp.u_spec : wp.v_spec) = spec;
          break;
        }
        if (++tries > 100 || !widen(spec))
          throw Error(wpath + ": declared weight class not met after " + std::to_string(tries) + " widenings");
        ++s.retries;
      }
    }
    s.weights.push_back(std::move(wp));
  }
  const json fspec = config.contains("f_suite") ? config.at("f_suite") : json::object();
  s.functions = generate_functions(fspec, d.dim(), d.side(), seed);
  return s;
}

std::vector<double> t_grid_for(const GridFunction& F, std::size_t count) {
  double lo = kInf, hi = 0.0;
  for (double x : F.values()) {
    const double a = std::fabs(x);
    if (a > 0.0) lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  std::vector<double> out;
  if (hi <= 0.0 || count == 0) return out;
  if (count == 1 || lo == hi) return {lo};
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1)));
  return out;
}

bool Report::pass() const {
  return std::all_of(invariants.begin(), invariants.end(), [](const Invariant& i) { return i.pass; });
}

json Report::to_json() const {
  json inv = json::array();
  for (const Invariant& i : invariants) inv.push_back({{"name", i.name}, {"pass", i.pass}, {"detail", i.detail}});
  return {{"experiment", experiment}, {"config", config}, {"ladder", ladder},
          {"instances", instances},   {"invariants", inv}, {"pass", pass()}};
}

namespace {

struct Context {
  json cfg;
  json params;
  Domain d;
  RhoSpec rho;
  Suite suite;
  std::vector<double> t_grid;

  explicit Context(const json& config)
      : cfg(config),
        params(config.value("params", json::object())),
        d(parse_domain(field(config, "domain", "config"))),
        rho(config.contains("rho") ? parse_rho(config.at("rho"), d) : RhoSpec::classical()),
        suite(generate_suite(config)) {
    if (config.contains("t_grid")) {
      const json& t = config.at("t_grid");
      if (!t.is_array()) config_error("t_grid", "expected an array of levels");
      for (const json& x : t) {
        if (!x.is_number() || !(x.get<double>() > 0.0)) config_error("t_grid", "levels must be positive numbers");
        t_grid.push_back(x.get<double>());
      }
    }
  }
  double param(const std::string& key, double fallback) const { return number(params, key, "params", fallback); }
  double tol(const std::string& key, double fallback) const {
    return config_has("tolerances") ? number(cfg.at("tolerances"), key, "tolerances", fallback) : fallback;
  }
  bool config_has(const std::string& key) const { return cfg.contains(key); }
  CubeFamily cubes(const Domain& dom) const { return family_of(cfg, dom); }
  GridFunction f(std::size_t i, const Domain& dom) const { return suite.functions[i].make(dom); }
};

void check(Report& r, const std::string& name, bool ok, const std::string& detail) {
  r.invariants.push_back({name, ok, detail});
}

std::string fmt(double x) {
  std::ostringstream s;
  s.precision(6);
  s << x;
  return s.str();
}

double rel_change(double coarse, double fine) {
  if (coarse == fine) return 0.0;
  return std::fabs(fine - coarse) / std::max(std::fabs(coarse), 1e-300);
}

Report rho_audit(const json& config) {
  const Context c(config);
  Report r;
  const auto adm = audit_admissibility(c.rho, c.d, static_cast<int>(c.param("pairs", 200)),
                                       static_cast<std::uint64_t>(c.param("seed", config.value("seed", 1))));
  json inst = {{"C0", adm.C0}, {"N0", adm.N0}, {"decay_rate", adm.decay_rate}, {"max_violation", adm.max_violation}};
  r.ladder = {{"N0", adm.N0}, {"decay_rate", adm.decay_rate}};
  check(r, "admissibility_finite", std::isfinite(adm.C0), "C0 = " + fmt(adm.C0) + ", N0 = " + fmt(adm.N0));
  if (!c.rho.is_classical() && c.rho.kind() != RhoSpec::Kind::Constant) {
    const auto cov = critical_covering(c.rho, c.d);
    inst["covering_cubes"] = cov.centers.size();
    inst["N1"] = cov.N1;
    inst["C"] = cov.C;
    inst["residual"] = cov.residual;
    inst["overlap"] = cov.overlap;
    r.ladder["N1"] = cov.N1;
    const double tol = c.tol("covering_residual", 0.1);
    check(r, "covering_residual", cov.covers_box && cov.residual <= tol,
          "residual " + fmt(cov.residual) + " (tolerance " + fmt(tol) + ")");
  }
  r.instances.push_back(inst);
  return r;
}

Report weights_char(const json& config) {
  const Context c(config);
  Report r;
  const double p = c.param("p", 2.0);
  const CubeFamily cubes = c.cubes(c.d);
  bool ok = true;
  for (std::size_t i = 0; i < c.suite.weights.size(); ++i) {
    const GridFunction u = c.suite.weights[i].u(c.d), v = c.suite.weights[i].v(c.d);
    const auto a1 = a1_ladder_exponent(u, c.rho, cubes);
    const auto ap = ap_ladder(v, p, default_theta_ladder(), c.rho, cubes);
    const auto eps = ainf_epsilon_form(v, 0.0, c.rho, cubes);
    double vbest = kInf, vtheta = 0.0;
    for (const auto& x : ap)
      if (x.value < 1e3) {
        vbest = x.value;
        vtheta = x.theta;
        break;
      }
    ok = ok && a1.value < 1e3 && std::isfinite(vbest);
    r.instances.push_back({{"pair", i}, {"u_A1", a1.value}, {"u_theta", a1.theta}, {"v_Ap", vbest},
                           {"v_theta", vtheta}, {"v_eps", eps.eps}, {"v_eps_C", eps.C}});
  }
  check(r, "finite_characteristics", ok, "u in A_1 and v in A_p for some theta of the ladder");
  return r;
}

Report maximal_eval(const json& config) {
  const Context c(config);
  Report r;
  const double sigma = c.param("sigma", 1.0);
  r.ladder = {{"sigma", sigma}};
  const CubeFamily cubes = c.cubes(c.d);
  std::size_t split_bad = 0, weak_bad = 0;
  for (std::size_t i = 0; i < c.suite.functions.size(); ++i) {
    const GridFunction f = c.f(i, c.d).abs();
    const auto split = loc_glob_split(f, c.rho, sigma, cubes);
    const GridFunction md = m_dyadic(f, whole_box(c.d));
    const double total = integrate(f, whole_box(c.d));
    const double weak = total > 0.0 ? weak_sup(md, WeightedMeasure(c.d)) / total : 0.0;
    split_bad += split.upper_violations + split.lower_violations;
    if (weak > 1.0 + 1e-12) ++weak_bad;
    r.instances.push_back({{"f", i}, {"kind", c.suite.functions[i].kind}, {"sup_M", split.full.max()},
                           {"worst_upper", split.worst_upper}, {"dyadic_weak11", weak}});
  }
  check(r, "loc_glob_split", split_bad == 0, std::to_string(split_bad) + " violating cells");
  check(r, "dyadic_weak11_le_1", weak_bad == 0, std::to_string(weak_bad) + " violating functions");
  return r;
}

Report corona_run(const json& config) {
  const Context c(config);
  Report r;
  CoronaOptions opt;
  opt.theta = c.param("theta", 0.0);
  if (c.params.contains("a")) opt.a = c.param("a", 0.0);
  if (c.params.contains("delta")) opt.delta = c.param("delta", 0.0);
  r.ladder = {{"theta", opt.theta}};
  const Cube R = whole_box(c.d);
  std::size_t h1_bad = 0, head_bad = 0, tail_bad = 0;
  for (std::size_t i = 0; i < c.suite.weights.size(); ++i) {
    const GridFunction u = c.suite.weights[i].u(c.d), v = c.suite.weights[i].v(c.d);
    for (std::size_t j = 0; j < c.suite.functions.size(); ++j) {
      const CoronaRun run = run_corona(c.f(j, c.d), u, v, R, c.rho, opt);
      h1_bad += run.claims.h1_violations;
      if (run.mixed.head > (run.mixed.I + run.mixed.II) * (1.0 + 1e-12)) ++head_bad;
      if (run.mixed.tail > run.mixed.tail_bound * (1.0 + 1e-12)) ++tail_bad;
      int generations = 0;
      for (const auto& f : run.forests) generations = std::max(generations, f.generations());
      r.instances.push_back({{"pair", i},
                             {"f", j},
                             {"levels", run.decomp.levels()},
                             {"max_ell", run.classified.max_ell()},
                             {"generations", generations},
                             {"u_char", run.claims.u_char},
                             {"h1_worst", run.claims.h1_worst},
                             {"h2_over_u", run.claims.h2_over_u},
                             {"double_sum", run.claims.double_sum},
                             {"v_eps", run.v_eps.eps},
                             {"delta", run.delta},
                             {"sparsity_packing", run.lemmas.sparsity_packing},
                             {"mixed_ratio", run.mixed.ratio},
                             {"head", run.mixed.head},
                             {"I", run.mixed.I},
                             {"II", run.mixed.II},
                             {"tail", run.mixed.tail},
                             {"tail_bound", run.mixed.tail_bound}});
    }
  }
  check(r, "h1_bound", h1_bad == 0, std::to_string(h1_bad) + " violating cells");
  check(r, "head_le_I_plus_II", head_bad == 0, std::to_string(head_bad) + " violating instances");
  check(r, "tail_bound", tail_bad == 0, std::to_string(tail_bad) + " violating instances");
  return r;
}

Report mixed_m(const json& config) {
  const Context c(config);
  Report r;
  const double sigma = c.param("sigma", 1.0);
  const double tol = c.tol("stability", 0.25);
  r.ladder = {{"sigma", sigma}};
  const Domain fine = c.d.refined();
  const CubeFamily cc = c.cubes(c.d), cf = c.cubes(fine);
  std::size_t unstable = 0, infinite = 0;
  for (std::size_t i = 0; i < c.suite.weights.size(); ++i) {
    const auto& w = c.suite.weights[i];
    const GridFunction u0 = w.u(c.d), v0 = w.v(c.d), u1 = w.u(fine), v1 = w.v(fine);
    for (std::size_t j = 0; j < c.suite.functions.size(); ++j) {
      const auto a = mixed_verify_global(c.f(j, c.d), u0, v0, c.rho, sigma, cc, c.t_grid);
      const auto b = mixed_verify_global(c.f(j, fine), u1, v1, c.rho, sigma, cf, c.t_grid);
      const double ch = rel_change(a.constant, b.constant);
      if (!std::isfinite(a.constant) || !std::isfinite(b.constant)) ++infinite;
      if (ch > tol) ++unstable;
      r.instances.push_back({{"pair", i}, {"f", j}, {"constant", a.constant}, {"constant_fine", b.constant},
                             {"rel_change", ch}, {"loc", a.loc_constant}, {"glob", a.glob_constant}});
    }
  }
  check(r, "finite", infinite == 0, std::to_string(infinite) + " infinite constants");
  check(r, "refinement_stable", unstable == 0, std::to_string(unstable) + " instances change by more than " + fmt(tol));
  return r;
}

Report mixed_t(const json& config) {
  const Context c(config);
  Report r;
  const double sigma = c.param("sigma", 1.0);
  const double tol = c.tol("stability", 0.25);
  const Domain fine = c.d.refined();
  const SCZOKernel k0 = parse_kernel(c.params.value("kernel", json()), c.d, "params.kernel");
  SCZOKernel k1 = k0;
  r.ladder = {{"sigma", sigma}, {"kernel", to_string(k0)}};
  const CubeFamily cc = c.cubes(c.d), cf = c.cubes(fine);
  std::size_t unstable = 0, infinite = 0;
  for (std::size_t i = 0; i < c.suite.weights.size(); ++i) {
    const auto& w = c.suite.weights[i];
    const GridFunction u0 = w.u(c.d), v0 = w.v(c.d), u1 = w.u(fine), v1 = w.v(fine);
    for (std::size_t j = 0; j < c.suite.functions.size(); ++j) {
      const auto a = mixed_for_T(c.f(j, c.d), u0, v0, k0, sigma, cc, c.t_grid);
      const auto b = mixed_for_T(c.f(j, fine), u1, v1, k1, sigma, cf, c.t_grid);
      const double ch = rel_change(a.constant, b.constant);
      if (!std::isfinite(a.constant) || !std::isfinite(b.constant)) ++infinite;
      if (ch > tol) ++unstable;
      r.instances.push_back({{"pair", i}, {"f", j}, {"constant", a.constant}, {"constant_fine", b.constant},
                             {"rel_change", ch}, {"m_constant", a.m_constant}, {"comparison", a.comparison}});
    }
  }
  check(r, "finite", infinite == 0, std::to_string(infinite) + " infinite constants");
  check(r, "refinement_stable", unstable == 0, std::to_string(unstable) + " instances change by more than " + fmt(tol));
  return r;
}

Report coifman(const json& config) {
  const Context c(config);
  Report r;
  const double p = c.param("p", 1.0), theta = c.param("theta", 1.0);
  const double tol = c.tol("stability", 0.25);
  const Domain fine = c.d.refined();
  const SCZOKernel k = parse_kernel(c.params.value("kernel", json()), c.d, "params.kernel");
  r.ladder = {{"theta", theta}, {"p", p}, {"kernel", to_string(k)}};
  const CubeFamily cc = c.cubes(c.d), cf = c.cubes(fine);
  std::vector<GridFunction> s0, s1;
  for (std::size_t j = 0; j < c.suite.functions.size(); ++j) {
    s0.push_back(c.f(j, c.d));
    s1.push_back(c.f(j, fine));
  }
  std::size_t unstable = 0, infinite = 0;
  for (std::size_t i = 0; i < c.suite.weights.size(); ++i) {
    const auto& w = c.suite.weights[i];
    const auto a = coifman_check(k, w.u(c.d) * w.v(c.d), p, theta, s0, cc);
    const auto b = coifman_check(k, w.u(fine) * w.v(fine), p, theta, s1, cf);
    const double ch = rel_change(a.ratio, b.ratio);
    if (!std::isfinite(a.ratio) || !std::isfinite(b.ratio)) ++infinite;
    if (ch > tol) ++unstable;
    r.instances.push_back({{"pair", i}, {"ratio", a.ratio}, {"ratio_fine", b.ratio}, {"rel_change", ch}, {"witness", a.witness}});
  }
  check(r, "finite", infinite == 0, std::to_string(infinite) + " infinite ratios");
  check(r, "refinement_stable", unstable == 0, std::to_string(unstable) + " pairs change by more than " + fmt(tol));
  return r;
}

Report rdf(const json& config) {
  const Context c(config);
  Report r;
  const double sigma = c.param("sigma", 1.0);
  const int depth = static_cast<int>(c.param("depth", 12));
  const double t = c.param("t", 2.0), eps = c.param("eps", 1.0);
  const CubeFamily cubes = c.cubes(c.d);
  std::vector<GridFunction> suite;
  for (std::size_t j = 0; j < c.suite.functions.size(); ++j) suite.push_back(c.f(j, c.d).abs());
  std::size_t h_bad = 0, s_bad = 0, a1_bad = 0, diverged = 0;
  json ladder = json::array();
  for (std::size_t i = 0; i < c.suite.weights.size(); ++i) {
    const GridFunction u = c.suite.weights[i].u(c.d), v = c.suite.weights[i].v(c.d);
    const RdFState st = estimate_K0(u, v, c.rho, sigma, t, eps, 0.0, suite, cubes);
    ladder.push_back({{"pair", i}, {"p0", st.p0}, {"q", st.q}, {"K0", st.K0}, {"K0_formula", st.K0_formula}});
    for (std::size_t j = 0; j < suite.size(); ++j) {
      json inst = {{"pair", i}, {"f", j}, {"K0", st.K0}};
      try {
        const RdFResult res = rdf_iterate(suite[j], u, c.rho, sigma, st.K0, depth, cubes);
        const RdFAudit a = rdf_audit(suite[j], res, u, c.rho, sigma, cubes);
        h_bad += a.h_violations;
        s_bad += a.s_violations;
        if (a.a1_char > a.a1_bound) ++a1_bad;
        inst["tail_bound"] = res.tail_bound;
        inst["growth"] = res.growth_ratio;
        inst["worst_s_ratio"] = a.worst_s_ratio;
        inst["a1_char"] = a.a1_char;
        inst["a1_bound"] = a.a1_bound;
      } catch (const K0TooSmall& e) {
        ++diverged;
        inst["growth"] = e.growth_ratio;
      }
      r.instances.push_back(inst);
    }
  }
  r.ladder = {{"sigma", sigma}, {"depth", depth}, {"K0", ladder}};
  check(r, "h_le_Rh", h_bad == 0, std::to_string(h_bad) + " violating cells");
  check(r, "S_Rh_bound", s_bad == 0, std::to_string(s_bad) + " violating cells");
  check(r, "A1_characteristic", a1_bad == 0, std::to_string(a1_bad) + " instances above 2 K0 * 1.1");
  check(r, "series_decays", diverged == 0, std::to_string(diverged) + " instances with K0 too small");
  return r;
}

Report lorentz(const json& config) {
  const Context c(config);
  Report r;
  const double p = c.param("p", 2.0), q = c.param("q", 1.0);
  std::size_t bad = 0;
  for (std::size_t i = 0; i < c.suite.weights.size(); ++i) {
    const WeightedMeasure mu(c.suite.weights[i].u(c.d) * c.suite.weights[i].v(c.d));
    for (std::size_t j = 0; j < c.suite.functions.size(); ++j) {
      const GridFunction f = c.f(j, c.d);
      const double n = lorentz_norm(f, mu, p, q);
      // layer cake: ||f||_{p,p}^p = int |f|^p dmu
      double direct = 0.0;
      for (std::size_t x = 0; x < f.size(); ++x) direct += std::pow(std::fabs(f[x]), p) * mu.cell_mass(x);
      const double lc = std::pow(lorentz_norm(f, mu, p, p), p);
      if (std::fabs(lc - direct) > 1e-10 * std::max(direct, 1e-300)) ++bad;
      r.instances.push_back({{"pair", i}, {"f", j}, {"norm", n}, {"weak", weak_sup(f, mu)}});
    }
  }
  check(r, "layer_cake", bad == 0, std::to_string(bad) + " mismatches");
  return r;
}

Report interpolation(const json& config) {
  const Context c(config);
  Report r;
  const double p0 = c.param("p0", 1.5);
  const double p = c.param("p", 2.0 * p0);
  const CubeFamily cubes = c.cubes(c.d);
  const Operator T = [&cubes](const GridFunction& f) { return m_classical(f, cubes); };
  const WeightedMeasure mu(c.d);
  std::vector<GridFunction> suite;
  for (std::size_t j = 0; j < c.suite.functions.size(); ++j) suite.push_back(c.f(j, c.d));
  const auto rep = interpolation_audit(T, p0, std::nullopt, std::nullopt, p, mu, suite);
  const auto neg = interpolation_audit(T, p0, rep.C0 / 2.0, rep.C1, p, mu, suite);
  r.ladder = {{"p0", p0}, {"p", p}, {"C0", rep.C0}, {"C1", rep.C1}, {"constant", rep.constant}};
  r.instances.push_back({{"worst_ratio", rep.worst_ratio}, {"violations", rep.conclusion_violations},
                         {"negative_control_violations", neg.conclusion_violations + neg.hypothesis_violations}});
  check(r, "conclusion", rep.conclusion_violations == 0, std::to_string(rep.conclusion_violations) + " violations");
  check(r, "negative_control", neg.conclusion_violations + neg.hypothesis_violations > 0,
        "halved C0 reports " + std::to_string(neg.conclusion_violations + neg.hypothesis_violations) + " violations");
  return r;
}

}  // namespace

const std::vector<std::pair<std::string, Experiment>>& experiment_registry() {
  static const std::vector<std::pair<std::string, Experiment>> reg = {
      {"rho-audit", rho_audit},     {"weights-char", weights_char}, {"maximal-eval", maximal_eval},
      {"corona-run", corona_run},   {"mixed-M", mixed_m},           {"mixed-T", mixed_t},
      {"coifman", coifman},         {"rdf", rdf},                   {"lorentz", lorentz},
      {"interpolation", interpolation},
  };
  return reg;
}

Report run_experiment(const json& config) {
  const std::string name = text(config, "experiment", "config");
  for (const auto& [id, fn] : experiment_registry())
    if (id == name) {
      Report r = fn(config);
      r.experiment = name;
      r.config = config;
      return r;
    }
  config_error("experiment", "unknown experiment '" + name + "'");
}

void write_report(const Report& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  auto atomic_write = [](const fs::path& path, const std::string& body) {
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw Error("cannot write " + tmp.string());
      out << body;
    }
    fs::rename(tmp, path);
  };
  atomic_write(fs::path(dir) / (r.experiment + ".json"), r.to_json().dump(2) + "\n");
  std::ostringstream csv;
  csv.precision(17);
  csv << "instance,name,value\n";
  for (std::size_t i = 0; i < r.instances.size(); ++i)
    for (const auto& [k, v] : r.instances[i].items())
      if (v.is_number()) csv << i << ',' << k << ',' << v.get<double>() << '\n';
  atomic_write(fs::path(dir) / (r.experiment + ".csv"), csv.str());
}

}  // namespace mixedlab
