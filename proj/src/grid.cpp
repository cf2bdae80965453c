#include "mixedlab/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace mixedlab {

Domain::Domain(int dim, double side, int level) : dim_(dim), side_(side), level_(level) {
  if (dim < 1 || dim > kMaxDim) throw ParameterError("domain dim must be 1, 2 or 3");
  if (!(side > 0.0) || !std::isfinite(side)) throw ParameterError("domain side must be positive");
  if (level < 1 || level > 24) throw ParameterError("domain level must be in [1, 24]");
  n_ = 1 << level;
  h_ = side / n_;
  cells_ = 1;
  cell_volume_ = 1.0;
  for (int a = 0; a < dim; ++a) {
    cells_ *= static_cast<std::size_t>(n_);
    cell_volume_ *= h_;
  }
  if (dim * level > 30) throw ParameterError("domain too large");
}

double distance(const Point& x, const Point& y, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += (x[a] - y[a]) * (x[a] - y[a]);
  return std::sqrt(s);
}

std::size_t Cube::cell_count(int dim) const {
  std::size_t c = 1;
  for (int a = 0; a < dim; ++a) c *= static_cast<std::size_t>(side);
  return c;
}

Point Cube::center(const Domain& d) const {
  Point p{};
  for (int a = 0; a < d.dim(); ++a) p[a] = (anchor[a] + 0.5 * side) * d.h();
  return p;
}

double Cube::radius(const Domain& d) const {
  return std::sqrt(static_cast<double>(d.dim())) * (side * d.h()) / 2.0;
}

double Cube::volume(const Domain& d) const {
  return static_cast<double>(cell_count(d.dim())) * d.cell_volume();
}

bool Cube::inside(const Domain& d) const {
  if (side < 1) return false;
  for (int a = 0; a < d.dim(); ++a)
    if (anchor[a] < 0 || anchor[a] + side > d.n()) return false;
  return true;
}

bool Cube::contains_cell(const Index& idx, int dim) const {
  for (int a = 0; a < dim; ++a)
    if (idx[a] < anchor[a] || idx[a] >= anchor[a] + side) return false;
  return true;
}

bool Cube::contains(const Cube& o, int dim) const {
  for (int a = 0; a < dim; ++a)
    if (o.anchor[a] < anchor[a] || o.anchor[a] + o.side > anchor[a] + side) return false;
  return true;
}

bool Cube::intersects(const Cube& o, int dim) const {
  for (int a = 0; a < dim; ++a)
    if (o.anchor[a] >= anchor[a] + side || anchor[a] >= o.anchor[a] + o.side) return false;
  return true;
}

Cube Cube::child(int which, int dim) const {
  Cube c{anchor, side / 2};
  for (int a = 0; a < dim; ++a)
    if (which & (1 << a)) c.anchor[a] += c.side;
  return c;
}

std::string to_string(const Cube& q, int dim) {
  std::ostringstream os;
  os << "[";
  for (int a = 0; a < dim; ++a) os << (a ? "," : "") << q.anchor[a];
  os << "]+" << q.side;
  return os.str();
}

Cube whole_box(const Domain& d) { return Cube{Index{}, d.n()}; }

GridFunction::GridFunction(Domain domain, double fill)
    : domain_(domain), values_(domain.cell_count(), fill) {}

GridFunction::GridFunction(Domain domain, std::vector<double> values)
    : domain_(domain), values_(std::move(values)) {
  if (values_.size() != domain_.cell_count())
    throw DomainMismatch("grid function has " + std::to_string(values_.size()) +
                         " values, domain has " + std::to_string(domain_.cell_count()) + " cells");
  for (double v : values_)
    if (!std::isfinite(v)) throw ParameterError("grid function values must be finite");
}

GridFunction GridFunction::from_function(const Domain& d,
                                         const std::function<double(const Point&)>& fn) {
  GridFunction g(d);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = fn(d.cell_center(i));
  return g;
}

double GridFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }
double GridFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }

bool GridFunction::is_weight() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v) && v > 0.0; });
}

GridFunction GridFunction::map(const std::function<double(double)>& fn) const {
  GridFunction g(domain_);
  for (std::size_t i = 0; i < size(); ++i) g[i] = fn(values_[i]);
  return g;
}

GridFunction GridFunction::abs() const { return map([](double v) { return std::fabs(v); }); }
GridFunction GridFunction::pow(double e) const {
  return map([e](double v) { return std::pow(v, e); });
}
GridFunction GridFunction::log() const { return map([](double v) { return std::log(v); }); }
GridFunction GridFunction::scaled(double c) const { return map([c](double v) { return c * v; }); }

void require_same_domain(const Domain& a, const Domain& b) {
  if (!(a == b)) throw DomainMismatch("grid functions live on different domains");
}

void require_weight(const GridFunction& w, const char* what) {
  if (!w.is_weight()) throw InvalidWeight(std::string(what) + " must be positive on every cell");
}

void require_inside(const Domain& d, const Cube& q) {
  if (!q.inside(d)) throw DomainMismatch("cube " + to_string(q, d.dim()) + " is outside the box");
}

namespace {
template <class Op>
GridFunction zip(const GridFunction& a, const GridFunction& b, Op op) {
  require_same_domain(a.domain(), b.domain());
  GridFunction g(a.domain());
  for (std::size_t i = 0; i < a.size(); ++i) g[i] = op(a[i], b[i]);
  return g;
}
}  // namespace

GridFunction operator*(const GridFunction& a, const GridFunction& b) {
  return zip(a, b, [](double x, double y) { return x * y; });
}
GridFunction operator/(const GridFunction& a, const GridFunction& b) {
  return zip(a, b, [](double x, double y) { return x / y; });
}
GridFunction operator+(const GridFunction& a, const GridFunction& b) {
  return zip(a, b, [](double x, double y) { return x + y; });
}

double integrate(const GridFunction& f, const Cube& q) {
  const Domain& d = f.domain();
  require_inside(d, q);
  double s = 0.0;
  for_each_cell(d, q, [&](std::size_t c) { s += f[c]; });
  return d.cell_volume() * s;
}

double average(const GridFunction& f, const Cube& q) {
  return integrate(f, q) / q.volume(f.domain());
}

double weighted_measure(const GridFunction& w, const CellSet& s) {
  if (s.size() != w.size()) throw DomainMismatch("cell set size does not match the domain");
  double t = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i]) t += w[i];
  return w.domain().cell_volume() * t;
}

double weighted_measure(const GridFunction& w, std::span<const std::size_t> cells) {
  double t = 0.0;
  for (std::size_t c : cells) {
    if (c >= w.size()) throw DomainMismatch("cell index outside the domain");
    t += w[c];
  }
  return w.domain().cell_volume() * t;
}

std::string to_string(CubePolicy p) {
  switch (p) {
    case CubePolicy::AllCellAligned: return "all";
    case CubePolicy::DyadicSides: return "dyadic";
    case CubePolicy::DyadicGridOf: return "dyadic-grid";
  }
  return "?";
}

CubePolicy parse_cube_policy(const std::string& s) {
  if (s == "all") return CubePolicy::AllCellAligned;
  if (s == "dyadic") return CubePolicy::DyadicSides;
  if (s == "dyadic-grid") return CubePolicy::DyadicGridOf;
  throw ParameterError("unknown cube policy '" + s + "' (expected all|dyadic|dyadic-grid)");
}

bool is_power_of_two(int s) { return s > 0 && std::has_single_bit(static_cast<unsigned>(s)); }

CubeFamily::CubeFamily(Domain domain, CubePolicy policy, std::optional<Cube> root)
    : domain_(domain), policy_(policy), root_(root) {
  if (policy == CubePolicy::AllCellAligned && domain.dim() != 1)
    throw ParameterError("ALL_CELL_ALIGNED cube family is only available in dim 1");
  if (policy == CubePolicy::DyadicGridOf) {
    if (!root) throw ParameterError("DYADIC_GRID_OF requires a root cube");
    require_inside(domain, *root);
    if (!is_power_of_two(root->side))
      throw ParameterError("DYADIC_GRID_OF root side must be a power of two");
  }
}

std::vector<Cube> CubeFamily::materialize() const {
  std::vector<Cube> out;
  out.reserve(size());
  for_each([&](const Cube& q) { out.push_back(q); });
  return out;
}

std::size_t CubeFamily::size() const {
  const int dim = domain_.dim();
  const int n = domain_.n();
  auto powd = [dim](std::size_t c) {
    std::size_t r = 1;
    for (int a = 0; a < dim; ++a) r *= c;
    return r;
  };
  std::size_t total = 0;
  switch (policy_) {
    case CubePolicy::AllCellAligned:
      return static_cast<std::size_t>(n) * (n + 1) / 2;
    case CubePolicy::DyadicSides:
      for (int s = 1; s <= n; s *= 2) total += powd((n - s) / dyadic_sides_stride(s) + 1);
      return total;
    case CubePolicy::DyadicGridOf:
      for (int s = 1; s <= root_->side; s *= 2) total += powd(root_->side / s);
      return total;
  }
  return total;
}

CubeFamily enumerate_cubes(const Domain& d, CubePolicy policy, std::optional<Cube> root) {
  return CubeFamily(d, policy, root);
}

CubeSums::CubeSums(const Domain& d, std::span<const double> values)
    : dim_(d.dim()), stride_(d.n() + 1) {
  const int n = d.n();
  std::size_t total = 1;
  for (int a = 0; a < dim_; ++a) total *= static_cast<std::size_t>(stride_);
  table_.assign(total, 0.0);
  auto tidx = [&](int i, int j, int k) {
    return (static_cast<std::size_t>(k) * stride_ + j) * stride_ + i;
  };
  const int nj = dim_ >= 2 ? n : 1;
  const int nk = dim_ >= 3 ? n : 1;
  for (int k = 0; k < nk; ++k)
    for (int j = 0; j < nj; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t src = (static_cast<std::size_t>(k) * n + j) * n + i;
        const int jj = dim_ >= 2 ? j + 1 : 0;
        const int kk = dim_ >= 3 ? k + 1 : 0;
        table_[tidx(i + 1, jj, kk)] = values[src];
      }
  // cumulative sums along each axis
  for (int ax = 0; ax < dim_; ++ax) {
    for (std::size_t t = 0; t < total; ++t) {
      std::size_t r = t;
      int c[3] = {0, 0, 0};
      for (int a = 0; a < dim_; ++a) {
        c[a] = static_cast<int>(r % stride_);
        r /= stride_;
      }
      if (c[ax] == 0) continue;
      std::size_t step = 1;
      for (int a = 0; a < ax; ++a) step *= stride_;
      table_[t] += table_[t - step];
    }
  }
}

double CubeSums::sum(const Cube& q) const {
  double s = 0.0;
  for (int corner = 0; corner < (1 << dim_); ++corner) {
    std::size_t t = 0;
    int sign = 1;
    for (int a = dim_ - 1; a >= 0; --a) {
      const bool hi = corner & (1 << a);
      const int c = hi ? q.anchor[a] + q.side : q.anchor[a];
      if (!hi) sign = -sign;
      t = t * stride_ + c;
    }
    s += sign * table_[t];
  }
  return s;
}

double CubeSums::average(const Cube& q) const {
  return sum(q) / static_cast<double>(q.cell_count(dim_));
}

CubeExtrema::CubeExtrema(const GridFunction& f) : dim_(f.domain().dim()), n_(f.domain().n()) {
  const std::size_t total = f.size();
  mins_.emplace_back(f.values().begin(), f.values().end());
  maxs_.emplace_back(f.values().begin(), f.values().end());
  const Domain& d = f.domain();
  for (int half = 1; 2 * half <= n_; half *= 2) {
    const auto& pm = mins_.back();
    const auto& pM = maxs_.back();
    std::vector<double> m(total), M(total);
    for (std::size_t c = 0; c < total; ++c) {
      const Index idx = d.unflat(c);
      double lo = pm[c], hi = pM[c];
      for (int corner = 1; corner < (1 << dim_); ++corner) {
        Index o = idx;
        bool ok = true;
        for (int a = 0; a < dim_; ++a)
          if (corner & (1 << a)) {
            o[a] += half;
            if (o[a] >= n_) ok = false;
          }
        if (!ok) continue;
        const std::size_t oc = d.flat(o);
        lo = std::min(lo, pm[oc]);
        hi = std::max(hi, pM[oc]);
      }
      m[c] = lo;
      M[c] = hi;
    }
    mins_.push_back(std::move(m));
    maxs_.push_back(std::move(M));
  }
}

double CubeExtrema::query(const Cube& q, bool want_min) const {
  int lvl = std::bit_width(static_cast<unsigned>(q.side)) - 1;
  const int w = 1 << lvl;
  const auto& t = want_min ? mins_[lvl] : maxs_[lvl];
  double r = want_min ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
  for (int corner = 0; corner < (1 << dim_); ++corner) {
    std::size_t f = 0;
    for (int a = dim_ - 1; a >= 0; --a) {
      const int c = (corner & (1 << a)) ? q.anchor[a] + q.side - w : q.anchor[a];
      f = f * n_ + c;
    }
    r = want_min ? std::min(r, t[f]) : std::max(r, t[f]);
  }
  return r;
}

double CubeExtrema::min(const Cube& q) const { return query(q, true); }
double CubeExtrema::max(const Cube& q) const { return query(q, false); }

DyadicPyramid::DyadicPyramid(int dim, int side, const std::function<double(const Index&)>& lv)
    : dim_(dim), side_(side) {
  if (!is_power_of_two(side)) throw ParameterError("dyadic pyramid needs a power-of-two side");
  build(lv);
}

DyadicPyramid::DyadicPyramid(const GridFunction& f, const Cube& root)
    : dim_(f.domain().dim()), side_(root.side) {
  require_inside(f.domain(), root);
  if (!is_power_of_two(root.side)) throw ParameterError("dyadic cube side must be a power of two");
  const Domain& d = f.domain();
  build([&](const Index& local) {
    Index g{};
    for (int a = 0; a < dim_; ++a) g[a] = root.anchor[a] + local[a];
    return f[d.flat(g)];
  });
}

void DyadicPyramid::build(const std::function<double(const Index&)>& lv) {
  const int top = std::bit_width(static_cast<unsigned>(side_)) - 1;
  sums_.resize(top + 1);
  auto powd = [&](std::size_t c) {
    std::size_t r = 1;
    for (int a = 0; a < dim_; ++a) r *= c;
    return r;
  };
  auto& finest = sums_[top];
  finest.resize(powd(side_));
  for (std::size_t i = 0; i < finest.size(); ++i) finest[i] = lv(cube_offset(top, i));
  for (int lvl = top - 1; lvl >= 0; --lvl) {
    const int per = 1 << lvl;
    auto& cur = sums_[lvl];
    const auto& fine = sums_[lvl + 1];
    cur.assign(powd(per), 0.0);
    for (std::size_t i = 0; i < cur.size(); ++i) {
      std::size_t r = i;
      Index pos{};
      for (int a = 0; a < dim_; ++a) {
        pos[a] = static_cast<int>(r % per);
        r /= per;
      }
      double s = 0.0;
      for (int ch = 0; ch < (1 << dim_); ++ch) {
        std::size_t fi = 0;
        for (int a = dim_ - 1; a >= 0; --a)
          fi = fi * (2 * per) + (2 * pos[a] + ((ch >> a) & 1));
        s += fine[fi];
      }
      cur[i] = s;
    }
  }
}

std::size_t DyadicPyramid::locate(int level, const Index& local) const {
  const int per = 1 << level;
  const int sub = side_ / per;
  std::size_t f = 0;
  for (int a = dim_ - 1; a >= 0; --a) f = f * per + local[a] / sub;
  return f;
}

Index DyadicPyramid::cube_offset(int level, std::size_t idx) const {
  const int per = 1 << level;
  const int sub = side_ / per;
  Index o{};
  for (int a = 0; a < dim_; ++a) {
    o[a] = static_cast<int>(idx % per) * sub;
    idx /= per;
  }
  return o;
}

double DyadicPyramid::average(int level, std::size_t idx) const {
  double cells = 1.0;
  const int sub = side_ >> level;
  for (int a = 0; a < dim_; ++a) cells *= sub;
  return sums_[level][idx] / cells;
}

namespace {
bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}
}  // namespace

void write_grid_function(const GridFunction& f, const std::string& path) {
  const Domain& d = f.domain();
  nlohmann::json header = {{"dim", d.dim()}, {"side", d.side()}, {"level", d.level()}};
  {
    std::ofstream hs(path + ".json");
    if (!hs) throw Error("cannot write " + path + ".json");
    hs << header.dump(2) << "\n";
  }
  if (ends_with(path, ".bin")) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write " + path);
    os.write(reinterpret_cast<const char*>(f.values().data()),
             static_cast<std::streamsize>(f.size() * sizeof(double)));
  } else {
    std::ofstream os(path);
    if (!os) throw Error("cannot write " + path);
    os.precision(17);
    for (double v : f.values()) os << v << "\n";
  }
}

GridFunction read_grid_function(const std::string& path) {
  std::ifstream hs(path + ".json");
  if (!hs) throw Error("missing header " + path + ".json");
  nlohmann::json header = nlohmann::json::parse(hs);
  Domain d(header.at("dim").get<int>(), header.at("side").get<double>(),
           header.at("level").get<int>());
  std::vector<double> values;
  if (ends_with(path, ".bin")) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot read " + path);
    values.resize(d.cell_count());
    is.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!is) throw DomainMismatch("binary file shorter than the domain");
  } else {
    std::ifstream is(path);
    if (!is) throw Error("cannot read " + path);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      values.push_back(std::stod(line));
    }
  }
  return GridFunction(d, std::move(values));
}

int thread_count() {
  if (const char* env = std::getenv("MIXEDLAB_THREADS")) {
    const int t = std::atoi(env);
    if (t > 0) return t;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(thread_count(), std::max<std::size_t>(count, 1));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += threads) fn(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace mixedlab
