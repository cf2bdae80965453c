// mixedlab: command line front end for the library and the experiment registry.
// Exit codes: 0 all invariants hold, 1 an invariant failed, 2 usage or config error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mixedlab/corona.hpp"
#include "mixedlab/error.hpp"
#include "mixedlab/extrapolation.hpp"
#include "mixedlab/harness.hpp"
#include "mixedlab/lorentz.hpp"
#include "mixedlab/maximal.hpp"
#include "mixedlab/rho.hpp"
#include "mixedlab/weights.hpp"

using namespace mixedlab;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainOpts {
  int dim = 1;
  double side = 1.0;
  int level = 8;
};

void add_domain(CLI::App* app, DomainOpts& d) {
  app->add_option("--dim", d.dim, "dimension for inline specs")->capture_default_str();
  app->add_option("--side", d.side, "box side for inline specs")->capture_default_str();
  app->add_option("--level", d.level, "cells per axis = 2^level")->capture_default_str();
}

json parse_inline(const std::string& text, const std::string& what) {
  try {
    if (!text.empty() && text.front() != '{' && std::filesystem::exists(text)) {
      std::ifstream in(text);
      return json::parse(in);
    }
    return json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(what + ": " + e.what());
  }
}

// A function argument is a grid function file (with its .json header) or an
// inline weight spec such as {"kind":"power","alpha":-0.5}.
GridFunction load_fn(const std::string& arg, const Domain& d, const std::string& what) {
  if (!arg.empty() && arg.front() == '{') return parse_weight(parse_inline(arg, what), d, what)(d);
  GridFunction f = read_grid_function(arg);
  if (!(f.domain() == d)) throw DomainMismatch(what + ": file domain differs from the working domain");
  return f;
}

// Working domain: the first file argument's header, else the command line.
Domain pick_domain(const std::vector<std::string>& fn_args, const DomainOpts& o) {
  for (const auto& a : fn_args)
    if (!a.empty() && a.front() != '{') return read_grid_function(a).domain();
  return Domain(o.dim, o.side, o.level);
}

RhoSpec load_rho(const std::string& arg, const Domain& d) {
  if (arg.empty()) return RhoSpec::classical();
  return parse_rho(parse_inline(arg, "rho"), d);
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "inf") {
      out.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw UsageError("not a number list: " + s);
    }
  }
  if (out.empty()) throw UsageError("empty number list");
  return out;
}

double parse_number(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  try {
    return std::stod(s);
  } catch (const std::exception&) {
    throw UsageError("not a number: " + s);
  }
}

json cube_json(const Cube& q, const Domain& d) {
  json a = json::array();
  for (int i = 0; i < d.dim(); ++i) a.push_back(q.anchor[i]);
  return {{"anchor", a}, {"side", q.side}};
}

json point_json(const Point& p, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(p[i]);
  return a;
}

Cube parse_cube(const std::string& s, const Domain& d) {
  if (s == "auto") return whole_box(d);
  const auto v = parse_list(s);
  if (static_cast<int>(v.size()) != d.dim() + 1) throw UsageError("--R expects anchor indices then side, or auto");
  Cube q;
  for (int i = 0; i < d.dim(); ++i) q.anchor[i] = static_cast<int>(v[i]);
  q.side = static_cast<int>(v.back());
  if (!q.inside(d)) throw UsageError("--R lies outside the box");
  return q;
}

// JSON to stdout, and to <out>/<name>.json when --out is given.
int emit(const json& j, const std::string& out, const std::string& name, bool pass) {
  std::cout << j.dump(2) << "\n";
  if (!out.empty()) {
    std::filesystem::create_directories(out);
    std::ofstream os(std::filesystem::path(out) / (name + ".json"));
    os << j.dump(2) << "\n";
  }
  return pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixedlab: critical radius weights, maximal operators and mixed weak-type estimates"};
  app.require_subcommand(1);
  std::string out;
  app.add_option("--out", out, "directory for reports");
  int code = 0;

  // rho
  auto* rho = app.add_subcommand("rho", "critical radius functions");
  rho->require_subcommand(1);
  DomainOpts rho_dom;
  std::string rho_spec;
  int pairs = 10000;
  std::uint64_t seed = 7;
  auto* rho_audit = rho->add_subcommand("audit", "sampled admissibility certificate (C0, N0)");
  rho_audit->add_option("--spec", rho_spec, "rho spec JSON")->required();
  rho_audit->add_option("--pairs", pairs)->capture_default_str();
  rho_audit->add_option("--seed", seed)->capture_default_str();
  add_domain(rho_audit, rho_dom);
  rho_audit->callback([&] {
    const Domain d(rho_dom.dim, rho_dom.side, rho_dom.level);
    const AdmissibilityReport r = audit_admissibility(load_rho(rho_spec, d), d, pairs, seed);
    json j = {{"C0", r.C0}, {"N0", r.N0}, {"max_violation", r.max_violation}, {"decay_rate", r.decay_rate},
              {"pairs", r.pairs}, {"capped", r.capped}, {"N0_ladder", r.ladder}, {"C0_per_N0", r.C0_per_N0},
              {"worst_pair", {{"x", point_json(r.worst_pair.x, d.dim())}, {"y", point_json(r.worst_pair.y, d.dim())}}}};
    code = emit(j, out, "rho-audit", std::isfinite(r.C0));
  });
  std::string sigmas = "1,2,4";
  auto* rho_cover = rho->add_subcommand("cover", "greedy critical-cube covering and overlap law");
  rho_cover->add_option("--spec", rho_spec, "rho spec JSON")->required();
  rho_cover->add_option("--sigma", sigmas, "dilation ladder")->capture_default_str();
  add_domain(rho_cover, rho_dom);
  rho_cover->callback([&] {
    const Domain d(rho_dom.dim, rho_dom.side, rho_dom.level);
    const CoveringReport r = critical_covering(load_rho(rho_spec, d), d, parse_list(sigmas));
    json j = {{"cubes", r.centers.size()}, {"sigmas", r.sigmas}, {"overlap", r.overlap}, {"N1", r.N1},
              {"C", r.C}, {"residual", r.residual}, {"capped", r.capped}, {"covers_box", r.covers_box}};
    code = emit(j, out, "rho-cover", r.covers_box);
  });

  // weights
  auto* weights = app.add_subcommand("weights", "weight characteristics");
  weights->require_subcommand(1);
  DomainOpts w_dom;
  std::string w_fn, w_rho, w_cubes = "dyadic", w_p = "2", thetas = "0,1,2";
  auto* wchar = weights->add_subcommand("char", "A_p^{rho,theta} characteristic with witness cube");
  wchar->add_option("--w", w_fn, "weight file or inline spec")->required();
  wchar->add_option("--p", w_p, "exponent, 1..inf")->capture_default_str();
  wchar->add_option("--theta", thetas)->capture_default_str();
  wchar->add_option("--rho", w_rho, "rho spec JSON (default classical)");
  wchar->add_option("--cubes", w_cubes, "all|dyadic|dyadic-grid")->capture_default_str();
  add_domain(wchar, w_dom);
  wchar->callback([&] {
    const Domain d = pick_domain({w_fn}, w_dom);
    const GridFunction w = load_fn(w_fn, d, "w");
    const CubeFamily fam(d, parse_cube_policy(w_cubes));
    const auto ladder = ap_ladder(w, parse_number(w_p), parse_list(thetas), load_rho(w_rho, d), fam);
    json rows = json::array();
    bool finite = false;
    for (const auto& c : ladder) {
      rows.push_back({{"theta", c.theta}, {"value", c.value}, {"witness", cube_json(c.witness, d)}});
      finite = finite || std::isfinite(c.value);
    }
    code = emit({{"p", parse_number(w_p)}, {"cubes", w_cubes}, {"ladder", rows}}, out, "weights-char", finite);
  });

  // maximal
  auto* maximal = app.add_subcommand("maximal", "maximal operators");
  maximal->require_subcommand(1);
  DomainOpts m_dom;
  std::string m_fn, m_rho, m_cubes = "all", m_out;
  double m_sigma = 0.0, m_q = 1.0;
  auto* meval = maximal->add_subcommand("eval", "evaluate M^{rho,sigma}");
  meval->add_option("--f", m_fn, "function file or inline spec")->required();
  meval->add_option("--rho", m_rho, "rho spec JSON (default classical)");
  meval->add_option("--sigma", m_sigma)->capture_default_str();
  meval->add_option("--q", m_q)->capture_default_str();
  meval->add_option("--cubes", m_cubes, "all|dyadic|dyadic-grid")->capture_default_str();
  meval->add_option("--output", m_out, "write M f as a grid function file");
  add_domain(meval, m_dom);
  meval->callback([&] {
    const Domain d = pick_domain({m_fn}, m_dom);
    const GridFunction f = load_fn(m_fn, d, "f");
    const GridFunction m = m_rho_sigma(f, load_rho(m_rho, d), {m_sigma, m_q}, CubeFamily(d, parse_cube_policy(m_cubes)));
    std::size_t arg = 0;
    for (std::size_t c = 1; c < m.size(); ++c)
      if (m[c] > m[arg]) arg = c;
    if (!m_out.empty()) write_grid_function(m, m_out);
    json j = {{"max", m[arg]}, {"argmax", arg}, {"argmax_center", point_json(d.cell_center(d.unflat(arg)), d.dim())},
              {"sup_f", f.abs().max()}};
    code = emit(j, out, "maximal-eval", m[arg] + 1e-12 >= f.abs().max() || m_sigma > 0.0);
  });

  // corona
  auto* corona = app.add_subcommand("corona", "level decomposition, principal forests and the dyadic mixed check");
  corona->require_subcommand(1);
  DomainOpts c_dom;
  std::string c_f, c_u = "{\"kind\":\"constant\"}", c_v = "{\"kind\":\"constant\"}", c_rho, c_R = "auto", c_a = "auto",
              c_delta = "auto", c_format = "json";
  double c_theta = 0.0;
  auto corona_opts = [&](CLI::App* sc) {
    sc->add_option("--f", c_f, "function file or inline spec")->required();
    sc->add_option("--u", c_u, "weight u (default 1)");
    sc->add_option("--v", c_v, "weight v (default 1)");
    sc->add_option("--rho", c_rho, "rho spec JSON (default classical)");
    sc->add_option("--R", c_R, "root cube: auto or anchor indices then side")->capture_default_str();
    sc->add_option("--a", c_a, "level base, auto = 2^(dim+1)")->capture_default_str();
    sc->add_option("--delta", c_delta, "-1 branch exponent, auto = eps/2")->capture_default_str();
    sc->add_option("--theta", c_theta)->capture_default_str();
    add_domain(sc, c_dom);
  };
  auto run_it = [&](Domain& d) {
    d = pick_domain({c_f, c_u, c_v}, c_dom);
    CoronaOptions opt;
    opt.theta = c_theta;
    if (c_a != "auto") opt.a = parse_number(c_a);
    if (c_delta != "auto") opt.delta = parse_number(c_delta);
    return run_corona(load_fn(c_f, d, "f"), load_fn(c_u, d, "u"), load_fn(c_v, d, "v"), parse_cube(c_R, d),
                      load_rho(c_rho, d), opt);
  };
  auto* crun = corona->add_subcommand("run", "full corona pipeline with claim and lemma audits");
  corona_opts(crun);
  crun->callback([&] {
    Domain d(1, 1.0, 1);
    const CoronaRun r = run_it(d);
    json ledger = json::array();
    for (const auto& row : r.mixed.ledger) ledger.push_back({{"k", row.k}, {"uv_E", row.uv_E}, {"I", row.I}, {"II", row.II}});
    const bool ok = r.claims.h1_violations == 0 && r.mixed.head <= (r.mixed.I + r.mixed.II) * (1 + 1e-12) &&
                    r.mixed.tail <= r.mixed.tail_bound * (1 + 1e-12);
    json j = {{"levels", r.decomp.levels()},
              {"k0", r.mixed.k0},
              {"max_ell", r.classified.max_ell()},
              {"primary", r.classified.primary.size()},
              {"secondary", r.classified.secondary.size()},
              {"v_eps", r.v_eps.eps},
              {"delta", r.delta},
              {"u_char", r.claims.u_char},
              {"h1_worst", r.claims.h1_worst},
              {"h1_violations", r.claims.h1_violations},
              {"h2_over_u", r.claims.h2_over_u},
              {"mixed", {{"lhs", r.mixed.lhs}, {"rhs", r.mixed.rhs}, {"ratio", r.mixed.ratio}, {"head", r.mixed.head},
                         {"I", r.mixed.I}, {"II", r.mixed.II}, {"tail", r.mixed.tail}, {"tail_bound", r.mixed.tail_bound}}},
              {"ledger", ledger}};
    if (!out.empty()) {
      std::filesystem::create_directories(out);
      std::ofstream csv(std::filesystem::path(out) / "corona-ledger.csv");
      csv.precision(17);
      csv << "k,uv_E,I,II\n";
      for (const auto& row : r.mixed.ledger) csv << row.k << "," << row.uv_E << "," << row.I << "," << row.II << "\n";
    }
    code = emit(j, out, "corona-run", ok);
  });
  auto* cdump = corona->add_subcommand("dump-forest", "principal forests with labels");
  corona_opts(cdump);
  cdump->add_option("--format", c_format, "json")->check(CLI::IsMember({"json"}));
  cdump->callback([&] {
    Domain d(1, 1.0, 1);
    const CoronaRun r = run_it(d);
    json forests = json::array();
    for (const PrincipalForest& F : r.forests) {
      json elems = json::array();
      for (std::size_t e = 0; e < F.elements.size(); ++e)
        elems.push_back({{"cube", cube_json(F.elements[e].cube, d)}, {"k", F.elements[e].k},
                         {"host", cube_json(F.elements[e].host, d)}, {"principal", F.assignment[e]}});
      forests.push_back({{"branch", F.branch}, {"delta", F.delta}, {"elements", elems}, {"principal", F.principal},
                         {"generation", F.generation}, {"parent", F.parent}});
    }
    code = emit({{"forests", forests}}, out, "corona-forest", true);
  });

  // extrapolation
  auto* extrap = app.add_subcommand("extrap", "Rubio de Francia iteration and the singular kernel");
  extrap->require_subcommand(1);
  DomainOpts e_dom;
  std::string e_h, e_u = "{\"kind\":\"constant\"}", e_v = "{\"kind\":\"constant\"}", e_f, e_rho, e_K0 = "auto",
              e_cubes = "all", e_kernel = "{}";
  double e_sigma = 1.0;
  int depth = 12;
  auto* rdf = extrap->add_subcommand("rdf", "R h = sum S^k h / (2 K0)^k with its audit");
  rdf->set_help_flag("--help", "Print this help message and exit");
  rdf->add_option("--h", e_h, "nonnegative function file or inline spec")->required();
  rdf->add_option("--u", e_u, "weight u (default 1)");
  rdf->add_option("--rho", e_rho, "rho spec JSON (default classical)");
  rdf->add_option("--sigma", e_sigma)->capture_default_str();
  rdf->add_option("--K0", e_K0, "number, or auto")->capture_default_str();
  rdf->add_option("--depth", depth)->capture_default_str();
  rdf->add_option("--cubes", e_cubes)->capture_default_str();
  add_domain(rdf, e_dom);
  rdf->callback([&] {
    const Domain d = pick_domain({e_h, e_u}, e_dom);
    const GridFunction h = load_fn(e_h, d, "h"), u = load_fn(e_u, d, "u");
    const RhoSpec rho = load_rho(e_rho, d);
    const CubeFamily fam(d, parse_cube_policy(e_cubes));
    double K0 = 0.0;
    if (e_K0 == "auto") {
      // power iteration for the sup-norm growth of S, with the usual 1.5 safety
      GridFunction g = h;
      double growth = 0.0;
      for (int i = 0; i < 8 && g.max() > 0.0; ++i) {
        GridFunction s = s_operator(g, u, rho, e_sigma, fam);
        growth = std::max(growth, s.max() / g.max());
        g = s.scaled(1.0 / s.max());
      }
      K0 = 1.5 * std::max(growth, 1.0);
    } else {
      K0 = parse_number(e_K0);
    }
    const RdFResult r = rdf_iterate(h, u, rho, e_sigma, K0, depth, fam);
    const RdFAudit a = rdf_audit(h, r, u, rho, e_sigma, fam);
    json j = {{"K0", r.K0}, {"depth", r.depth}, {"term_sup", r.term_sup}, {"tail_bound", r.tail_bound},
              {"growth_ratio", r.growth_ratio}, {"h_violations", a.h_violations}, {"s_violations", a.s_violations},
              {"worst_s_ratio", a.worst_s_ratio}, {"a1_char", a.a1_char}, {"a1_bound", a.a1_bound}};
    code = emit(j, out, "extrap-rdf", a.h_violations == 0 && a.s_violations == 0);
  });
  auto* mixt = extrap->add_subcommand("mixed-T", "mixed weak-type constant of the singular operator");
  mixt->add_option("--kernel", e_kernel, "kernel spec JSON {profile, N, delta, rho}")->capture_default_str();
  mixt->add_option("--f", e_f, "function file or inline spec")->required();
  mixt->add_option("--u", e_u, "weight u (default 1)");
  mixt->add_option("--v", e_v, "weight v (default 1)");
  mixt->add_option("--sigma", e_sigma)->capture_default_str();
  mixt->add_option("--cubes", e_cubes)->capture_default_str();
  add_domain(mixt, e_dom);
  mixt->callback([&] {
    const Domain d = pick_domain({e_f, e_u, e_v}, e_dom);
    const SCZOKernel k = parse_kernel(parse_inline(e_kernel, "kernel"), d);
    const MixedTReport r = mixed_for_T(load_fn(e_f, d, "f"), load_fn(e_u, d, "u"), load_fn(e_v, d, "v"), k, e_sigma,
                                       CubeFamily(d, parse_cube_policy(e_cubes)));
    json j = {{"kernel", to_string(k)}, {"rhs", r.rhs}, {"constant", r.constant}, {"m_constant", r.m_constant},
              {"comparison", r.comparison}};
    code = emit(j, out, "extrap-mixed-T", std::isfinite(r.constant));
  });

  // lorentz
  auto* lorentz = app.add_subcommand("lorentz", "Lorentz quasi-norms");
  lorentz->require_subcommand(1);
  DomainOpts l_dom;
  std::string l_f, l_mu, l_p = "2", l_q = "1";
  auto* lnorm = lorentz->add_subcommand("norm", "||f||_{L^{p,q}(mu)}");
  lnorm->add_option("--f", l_f, "function file or inline spec")->required();
  lnorm->add_option("--mu", l_mu, "density of mu (default Lebesgue)");
  lnorm->add_option("--p", l_p)->capture_default_str();
  lnorm->add_option("--q", l_q, "number or inf")->capture_default_str();
  add_domain(lnorm, l_dom);
  lnorm->callback([&] {
    std::vector<std::string> args = {l_f};
    if (!l_mu.empty()) args.push_back(l_mu);
    const Domain d = pick_domain(args, l_dom);
    const GridFunction f = load_fn(l_f, d, "f");
    const WeightedMeasure mu = l_mu.empty() ? WeightedMeasure(d) : WeightedMeasure(load_fn(l_mu, d, "mu"));
    const double n = lorentz_norm(f, mu, parse_number(l_p), parse_number(l_q));
    const double q = parse_number(l_q);
    code = emit({{"p", parse_number(l_p)}, {"q", std::isinf(q) ? json("inf") : json(q)}, {"norm", n}, {"weak", weak_sup(f, mu)}}, out, "lorentz-norm",
                std::isfinite(n));
  });

  // batch
  std::string config_path;
  auto* run = app.add_subcommand("run", "run a registered experiment from a JSON config");
  run->add_option("config", config_path, "config file")->required()->check(CLI::ExistingFile);
  run->callback([&] {
    std::ifstream in(config_path);
    json cfg;
    try {
      cfg = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    const Report r = run_experiment(cfg);
    if (!out.empty()) write_report(r, out);
    std::cout << r.to_json().dump(2) << "\n";
    for (const Invariant& inv : r.invariants)
      std::cerr << (inv.pass ? "PASS " : "FAIL ") << inv.name << ": " << inv.detail << "\n";
    code = r.pass() ? 0 : 1;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int c = app.exit(e);
    return c == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return 2;
  } catch (const K0TooSmall& e) {
    std::cerr << "K0 too small: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return code;
}
