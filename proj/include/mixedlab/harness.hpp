#pragma once

// Experiment configuration, seeded suite generation, the experiment registry
// and report emission (JSON report plus a CSV constants table).

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mixedlab/extrapolation.hpp"
#include "mixedlab/grid.hpp"
#include "mixedlab/rho.hpp"
#include "mixedlab/weights.hpp"

namespace mixedlab {

using json = nlohmann::json;

Domain parse_domain(const json& j, const std::string& path = "domain");
// A Shen spec with a constant potential needs the domain the potential lives on.
RhoSpec parse_rho(const json& j, const Domain& d, const std::string& path = "rho");
WeightGenerator parse_weight(const json& j, const Domain& d, const std::string& path = "weight");
SCZOKernel parse_kernel(const json& j, const Domain& d, const std::string& path = "kernel");

using FunctionGenerator = std::function<GridFunction(const Domain&)>;

struct GeneratedFunction {
  std::string kind;
  json params;  // everything needed to rebuild it
  FunctionGenerator make;
};

struct WeightPair {
  json u_spec;
  json v_spec;
  WeightGenerator u;
  WeightGenerator v;
};

struct Suite {
  std::vector<WeightPair> weights;
  std::vector<GeneratedFunction> functions;
  std::size_t retries = 0;  // widening steps taken to meet declared weight classes
};

// Functions are resolution independent: every generated f is a fixed function on
// the box, sampled at cell centers, so refinement compares like with like.
std::vector<GeneratedFunction> generate_functions(const json& spec, int dim, double side, std::uint64_t seed);

// Weight specs may declare {"class": "A1" | "Ap" | "Ainf", "p": ...}; a spec whose
// measured characteristic is not finite on the ladder is widened (exponents halved,
// band contrast reduced) up to 100 times before giving up.
Suite generate_suite(const json& config);

// 20 pairs (u, v): constants, power weights, two-band weights and rho-adapted weights.
json standard_weight_pairs(int dim, double side);

struct Invariant {
  std::string name;
  bool pass = true;
  std::string detail;
};

struct Report {
  std::string experiment;
  json config;
  json ladder = json::object();  // theta, sigma, delta, eps, K0 ... as used
  json instances = json::array();
  std::vector<Invariant> invariants;
  bool pass() const;
  json to_json() const;
};

using Experiment = std::function<Report(const json& config)>;

const std::vector<std::pair<std::string, Experiment>>& experiment_registry();
Report run_experiment(const json& config);

// Writes <dir>/<experiment>.json and <dir>/<experiment>.csv atomically (write, rename).
void write_report(const Report& r, const std::string& dir);

// Geometric t-grid between the smallest positive and the largest value of |F|.
std::vector<double> t_grid_for(const GridFunction& F, std::size_t count);

}  // namespace mixedlab
