#pragma once

// Maximal operators: rho-adapted M^{rho,sigma} and its power-mean variant, the
// localized and dyadic operators on a cube, the local/global split and the
// 3^dim shifted-grid domination audit.

#include <functional>
#include <vector>

#include "mixedlab/grid.hpp"
#include "mixedlab/rho.hpp"

namespace mixedlab {

struct MaximalParams {
  double sigma = 0.0;
  double q = 1.0;
};

// Per cell, the largest value of val(Q) over family cubes Q containing it.
// Throws CoverageError if some cell lies in no cube of the family.
std::vector<double> family_sup(const CubeFamily& cubes, const std::function<double(const Cube&)>& val);

// sup over Q containing x of (1 + r_Q/rho(x_Q))^(-sigma) avg(|f|^q, Q)^(1/q).
GridFunction m_rho_sigma(const GridFunction& f, const RhoSpec& rho, const MaximalParams& params,
                         const CubeFamily& cubes);

// Classical operator over the family (sigma = 0, q = 1, no factor).
GridFunction m_classical(const GridFunction& f, const CubeFamily& cubes);

// Per local cell (row-major in R, axis 0 fastest) the largest dyadic average.
std::vector<double> dyadic_max_local(const DyadicPyramid& pyr);

// M_R^D f on R, zero outside R. R must have a power-of-two side.
GridFunction m_dyadic(const GridFunction& f, const Cube& R);

// Cubes inside R used by the localized operator: every interval in dim 1, the
// dyadic-sides stride lattice anchored at R otherwise.
std::vector<Cube> localized_family(const Domain& d, const Cube& R);

// M_R f on R, zero outside R.
GridFunction m_localized(const GridFunction& f, const Cube& R);

struct LocGlobSplit {
  GridFunction full;
  GridFunction loc;   // subcritical cubes, no factor
  GridFunction glob;  // other cubes, factor (rho/r)^sigma
  std::size_t upper_violations = 0;  // cells with full > loc + glob
  std::size_t lower_violations = 0;  // cells with full < 2^-sigma max(loc, glob)
  double worst_upper = 0.0;          // max of full / (loc + glob)
};

LocGlobSplit loc_glob_split(const GridFunction& f, const RhoSpec& rho, double sigma,
                            const CubeFamily& cubes);

// Cell offsets of the 3^dim shifted dyadic grids: floor(i n / 3) per axis, i in {0,1,2}.
std::vector<Index> shifted_grid_offsets(const Domain& d);

// Grid i has boundaries at offset_a + m s on axis a for cube sides s <= n; at side
// 2n a nonzero offset moves to offset_a + n (mod 2n), keeping the grid nested.
// Returns the smallest cube of that grid containing q; it may reach outside the box.
Cube minimal_grid_parent(const Cube& q, const Index& offset, const Domain& d);

struct ShiftedGridReport {
  Cube q;
  std::vector<Cube> parents;
  std::vector<bool> escapes_box;
  double lambda = 0.0;       // max over grids of the dilation of Q about its center reaching Q_i
  double lambda_best = 0.0;  // min over grids of the same
  std::size_t violations = 0;
  double worst_ratio = 0.0;  // max over cells of M_Q f / (3^dim sum_i M^D_{Q_i}(f 1_Q))
};

ShiftedGridReport shifted_grid_domination_audit(const GridFunction& f, const Cube& q);

}  // namespace mixedlab
