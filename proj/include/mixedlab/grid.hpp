#pragma once

// Discretized box [0, L)^dim with n = 2^J cells per axis, cell-aligned cubes,
// piecewise-constant grid functions and the cube families every sup is taken over.

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixedlab/error.hpp"

namespace mixedlab {

inline constexpr int kMaxDim = 3;

using Index = std::array<int, kMaxDim>;
using Point = std::array<double, kMaxDim>;

class Domain {
 public:
  Domain(int dim, double side, int level);

  int dim() const { return dim_; }
  double side() const { return side_; }
  int level() const { return level_; }
  int n() const { return n_; }
  double h() const { return h_; }
  std::size_t cell_count() const { return cells_; }
  double cell_volume() const { return cell_volume_; }

  std::size_t flat(const Index& idx) const {
    std::size_t f = 0;
    for (int a = dim_ - 1; a >= 0; --a) f = f * static_cast<std::size_t>(n_) + idx[a];
    return f;
  }
  Index unflat(std::size_t f) const {
    Index idx{};
    for (int a = 0; a < dim_; ++a) {
      idx[a] = static_cast<int>(f % n_);
      f /= n_;
    }
    return idx;
  }
  Point cell_center(const Index& idx) const {
    Point p{};
    for (int a = 0; a < dim_; ++a) p[a] = (idx[a] + 0.5) * h_;
    return p;
  }
  Point cell_center(std::size_t f) const { return cell_center(unflat(f)); }

  Domain refined() const { return Domain(dim_, side_, level_ + 1); }

  bool operator==(const Domain& o) const {
    return dim_ == o.dim_ && side_ == o.side_ && level_ == o.level_;
  }

 private:
  int dim_;
  double side_;
  int level_;
  int n_;
  double h_;
  std::size_t cells_;
  double cell_volume_;
};

double distance(const Point& x, const Point& y, int dim);

// Axis-aligned cube made of side x ... x side cells starting at `anchor`.
// Its radius follows r_Q = sqrt(dim) * l(Q) / 2.
struct Cube {
  Index anchor{};
  int side = 1;

  std::size_t cell_count(int dim) const;
  Point center(const Domain& d) const;
  double radius(const Domain& d) const;
  double volume(const Domain& d) const;
  bool inside(const Domain& d) const;
  bool contains_cell(const Index& idx, int dim) const;
  bool contains(const Cube& other, int dim) const;
  bool intersects(const Cube& other, int dim) const;
  // Dyadic child number `which` (bit a selects the upper half along axis a).
  Cube child(int which, int dim) const;

  auto operator<=>(const Cube&) const = default;
};

std::string to_string(const Cube& q, int dim);

// Calls fn(flat_index) for every cell of q, in row-major order.
template <class Fn>
void for_each_cell(const Domain& d, const Cube& q, Fn&& fn) {
  const int n = d.n();
  switch (d.dim()) {
    case 1:
      for (int i = 0; i < q.side; ++i) fn(static_cast<std::size_t>(q.anchor[0] + i));
      break;
    case 2:
      for (int j = 0; j < q.side; ++j) {
        const std::size_t row = static_cast<std::size_t>(q.anchor[1] + j) * n;
        for (int i = 0; i < q.side; ++i) fn(row + q.anchor[0] + i);
      }
      break;
    default:
      for (int k = 0; k < q.side; ++k)
        for (int j = 0; j < q.side; ++j) {
          const std::size_t row =
              (static_cast<std::size_t>(q.anchor[2] + k) * n + (q.anchor[1] + j)) * n;
          for (int i = 0; i < q.side; ++i) fn(row + q.anchor[0] + i);
        }
  }
}

Cube whole_box(const Domain& d);

class GridFunction {
 public:
  GridFunction(Domain domain, double fill = 0.0);
  GridFunction(Domain domain, std::vector<double> values);

  static GridFunction from_function(const Domain& d, const std::function<double(const Point&)>& fn);

  const Domain& domain() const { return domain_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double max() const;
  double min() const;
  bool is_weight() const;  // every value finite and > 0

  GridFunction abs() const;
  GridFunction pow(double e) const;
  GridFunction log() const;
  GridFunction scaled(double c) const;
  GridFunction map(const std::function<double(double)>& fn) const;

 private:
  Domain domain_;
  std::vector<double> values_;
};

GridFunction operator*(const GridFunction& a, const GridFunction& b);
GridFunction operator/(const GridFunction& a, const GridFunction& b);
GridFunction operator+(const GridFunction& a, const GridFunction& b);

void require_same_domain(const Domain& a, const Domain& b);
void require_weight(const GridFunction& w, const char* what);
void require_inside(const Domain& d, const Cube& q);

// Mask over the cells of a domain.
using CellSet = std::vector<std::uint8_t>;

// h^dim times the sum of the cell values of f over q.
double integrate(const GridFunction& f, const Cube& q);
double average(const GridFunction& f, const Cube& q);
double weighted_measure(const GridFunction& w, const CellSet& s);
double weighted_measure(const GridFunction& w, std::span<const std::size_t> cells);

enum class CubePolicy { AllCellAligned, DyadicSides, DyadicGridOf };

std::string to_string(CubePolicy p);
CubePolicy parse_cube_policy(const std::string& s);

// A deterministic family of cubes, ordered by side then anchor. Families are
// enumerated lazily; materialize() returns the explicit list.
class CubeFamily {
 public:
  CubeFamily(Domain domain, CubePolicy policy, std::optional<Cube> root = std::nullopt);

  CubePolicy policy() const { return policy_; }
  const Domain& domain() const { return domain_; }
  const std::optional<Cube>& root() const { return root_; }

  template <class Fn>
  void for_each(Fn&& fn) const;

  std::vector<Cube> materialize() const;
  std::size_t size() const;

 private:
  Domain domain_;
  CubePolicy policy_;
  std::optional<Cube> root_;
};

CubeFamily enumerate_cubes(const Domain& d, CubePolicy policy, std::optional<Cube> root = std::nullopt);

// Anchor stride used by the DYADIC_SIDES lattice for cubes of a given side.
inline int dyadic_sides_stride(int side) { return side > 1 ? side / 2 : 1; }

bool is_power_of_two(int s);

template <class Fn>
void CubeFamily::for_each(Fn&& fn) const {
  const int dim = domain_.dim();
  const int n = domain_.n();
  auto lattice = [&](int side, int stride, const Index& lo, int extent) {
    // anchors lo + m*stride with anchor + side <= lo + extent on every axis
    const int count = (extent - side) / stride + 1;
    Index a{};
    Index m{};
    std::size_t total = 1;
    for (int ax = 0; ax < dim; ++ax) total *= static_cast<std::size_t>(count);
    // iterate with axis 0 as the most significant key
    for (std::size_t t = 0; t < total; ++t) {
      std::size_t r = t;
      for (int ax = dim - 1; ax >= 0; --ax) {
        m[ax] = static_cast<int>(r % count);
        r /= count;
      }
      for (int ax = 0; ax < dim; ++ax) a[ax] = lo[ax] + m[ax] * stride;
      fn(Cube{a, side});
    }
  };
  switch (policy_) {
    case CubePolicy::AllCellAligned:
      for (int s = 1; s <= n; ++s)
        for (int i = 0; i + s <= n; ++i) fn(Cube{Index{i, 0, 0}, s});
      break;
    case CubePolicy::DyadicSides:
      for (int s = 1; s <= n; s *= 2) lattice(s, dyadic_sides_stride(s), Index{}, n);
      break;
    case CubePolicy::DyadicGridOf: {
      const Cube& r = *root_;
      for (int s = 1; s <= r.side; s *= 2) lattice(s, s, r.anchor, r.side);
      break;
    }
  }
}

// Prefix-sum table: O(2^dim) cube sums after O(n^dim) setup.
class CubeSums {
 public:
  CubeSums(const Domain& d, std::span<const double> values);
  explicit CubeSums(const GridFunction& f) : CubeSums(f.domain(), f.values()) {}
  // Sum of cell values (not scaled by h^dim).
  double sum(const Cube& q) const;
  double average(const Cube& q) const;

 private:
  int dim_;
  int stride_;
  std::vector<double> table_;
};

// Min/max over arbitrary cubes via per-scale square tables (sparse table).
class CubeExtrema {
 public:
  explicit CubeExtrema(const GridFunction& f);
  double min(const Cube& q) const;
  double max(const Cube& q) const;

 private:
  double query(const Cube& q, bool want_min) const;
  int dim_;
  int n_;
  std::vector<std::vector<double>> mins_;
  std::vector<std::vector<double>> maxs_;
};

// Sums over the dyadic subcubes of a power-of-two cube, built bottom-up by
// adding children in a fixed order. Level m holds (2^m)^dim cubes of side s/2^m.
class DyadicPyramid {
 public:
  DyadicPyramid(int dim, int side, const std::function<double(const Index&)>& local_value);
  DyadicPyramid(const GridFunction& f, const Cube& root);

  int dim() const { return dim_; }
  int side() const { return side_; }
  int levels() const { return static_cast<int>(sums_.size()); }
  int cells_per_axis(int level) const { return 1 << level; }
  // Local (in-root) cell offsets -> index of the containing cube at `level`.
  std::size_t locate(int level, const Index& local) const;
  Index cube_offset(int level, std::size_t idx) const;  // anchor offset in cells
  double sum(int level, std::size_t idx) const { return sums_[level][idx]; }
  // average = sum / cell count; cell counts are powers of two so this is exact scaling
  double average(int level, std::size_t idx) const;
  std::size_t count(int level) const { return sums_[level].size(); }

 private:
  void build(const std::function<double(const Index&)>& local_value);
  int dim_;
  int side_;
  std::vector<std::vector<double>> sums_;
};

// Serialization: CSV (one value per line, row-major) or flat little-endian
// binary doubles, with a JSON header {dim, side, level} in <path>.json.
void write_grid_function(const GridFunction& f, const std::string& path);
GridFunction read_grid_function(const std::string& path);

// Number of worker threads: MIXEDLAB_THREADS, else hardware concurrency.
int thread_count();
// Runs fn(i) for i in [0, count) across thread_count() threads.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace mixedlab
