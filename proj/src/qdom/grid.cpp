#include "qdom/grid.hpp"

#include "qdom/error.hpp"
#include "qdom/pairwise.hpp"
#include "qdom/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qdom {

std::array<int, 3> Grid::unindex(std::size_t idx) const {
  int i = (int)(idx % cells[0]);
  std::size_t r = idx / cells[0];
  int j = (int)(r % cells[1]);
  int k = (int)(r / cells[1]);
  return {i, j, k};
}

Point Grid::node(std::size_t idx) const {
  auto c = unindex(idx);
  Point p{0, 0, 0};
  for (int a = 0; a < n; ++a) p[a] = origin[a] + (c[a] + 0.5) * h;
  return p;
}

int Grid::cells_to_edge(std::size_t idx) const {
  auto c = unindex(idx);
  int d = 1 << 30;
  for (int a = 0; a < n; ++a) d = std::min({d, c[a] + 1, cells[a] - c[a]});
  return d;
}

int Grid::max_cells() const {
  int m = 0;
  for (int a = 0; a < n; ++a) m = std::max(m, cells[a]);
  return m;
}

bool Grid::operator==(const Grid& o) const {
  return n == o.n && cells == o.cells && origin == o.origin && h == o.h;
}

Grid make_grid(int n, const Point& origin, const Point& extent, const std::array<int, 3>& cells) {
  if (n != 2 && n != 3) fail(ErrorCode::Grid, "grid dimension must be 2 or 3");
  Grid g;
  g.n = n;
  g.origin = {0, 0, 0};
  g.extent = {0, 0, 0};
  g.cells = {1, 1, 1};
  for (int a = 0; a < n; ++a) {
    if (cells[a] < 16) fail(ErrorCode::Grid, "grid needs at least 16 cells per axis, got " + std::to_string(cells[a]));
    if (!(extent[a] > 0.0)) fail(ErrorCode::Grid, "grid extent must be positive");
    g.origin[a] = origin[a];
    g.extent[a] = extent[a];
    g.cells[a] = cells[a];
  }
  g.h = extent[0] / cells[0];
  for (int a = 1; a < n; ++a) {
    double ha = extent[a] / cells[a];
    if (std::fabs(ha - g.h) > 1e-12 * g.h) fail(ErrorCode::Grid, "grid spacing must be uniform across axes");
  }
  return g;
}

void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) fail(ErrorCode::Grid, std::string(what) + ": grid mismatch");
}

double ScalarField::max_abs() const {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

std::size_t Mask::count() const {
  std::size_t c = 0;
  for (auto b : f) c += b;
  return c;
}

double integrate(const ScalarField& f, const Mask* over) {
  if (over) require_same_grid(f.grid, over->grid, "integrate");
  double s = over ? pairwise_sum(0, f.size(), [&](std::size_t i) { return over->f[i] ? f.v[i] : 0.0; })
                  : pairwise_sum(0, f.size(), [&](std::size_t i) { return f.v[i]; });
  return s * f.grid.cell_volume();
}

double integrate_product(const ScalarField& a, const ScalarField& b, const Mask* over) {
  require_same_grid(a.grid, b.grid, "integrate_product");
  if (over) require_same_grid(a.grid, over->grid, "integrate_product");
  double s = pairwise_sum(0, a.size(), [&](std::size_t i) {
    return (!over || over->f[i]) ? a.v[i] * b.v[i] : 0.0;
  });
  return s * a.grid.cell_volume();
}

ScalarField helmholtz_apply(const ScalarField& f, double k) {
  const Grid& g = f.grid;
  ScalarField out(g);
  double ih2 = 1.0 / (g.h * g.h);
  double diag = k * k - 2.0 * g.n * ih2;
  std::size_t stride[3] = {1, (std::size_t)g.cells[0], (std::size_t)g.cells[0] * g.cells[1]};
  for (int kk = 0; kk < g.cells[2]; ++kk)
    for (int j = 0; j < g.cells[1]; ++j)
      for (int i = 0; i < g.cells[0]; ++i) {
        std::size_t idx = g.index(i, j, kk);
        int c[3] = {i, j, kk};
        double s = 0.0;
        for (int a = 0; a < g.n; ++a) {
          if (c[a] > 0) s += f.v[idx - stride[a]];
          if (c[a] < g.cells[a] - 1) s += f.v[idx + stride[a]];
        }
        out.v[idx] = diag * f.v[idx] + ih2 * s;
      }
  return out;
}

double gradient_norm2(const ScalarField& f) {
  const Grid& g = f.grid;
  std::size_t stride[3] = {1, (std::size_t)g.cells[0], (std::size_t)g.cells[0] * g.cells[1]};
  double s = pairwise_sum(0, f.size(), [&](std::size_t idx) {
    auto c = g.unindex(idx);
    double acc = 0.0;
    for (int a = 0; a < g.n; ++a) {
      double fwd = c[a] < g.cells[a] - 1 ? f.v[idx + stride[a]] : 0.0;
      double d = fwd - f.v[idx];
      acc += d * d;
      if (c[a] == 0) acc += f.v[idx] * f.v[idx];
    }
    return acc;
  });
  return s * g.cell_volume() / (g.h * g.h);
}

GridMeasure deposit_measure(const Grid& g, const std::vector<Atom>& atoms, double radius) {
  if (radius < 2.0 * g.h * (1.0 - 1e-12))
    fail(ErrorCode::Placement, "mollifier radius must be at least 2h");
  GridMeasure mu;
  mu.density = ScalarField(g);
  mu.atoms = atoms;
  mu.radius = radius;
  for (const auto& at : atoms) {
    if (at.mass < 0.0) fail(ErrorCode::Placement, "atom mass must be nonnegative");
    for (int a = 0; a < g.n; ++a) {
      double lo = at.point[a] - g.origin[a];
      double hi = g.origin[a] + g.extent[a] - at.point[a];
      if (lo < radius + 2.0 * g.h || hi < radius + 2.0 * g.h)
        fail(ErrorCode::Placement, "atom too close to the box boundary");
    }
    if (at.mass == 0.0) continue;
    Mask b = ball_mask(g, at.point, radius);
    std::size_t cnt = b.count();
    double dens = at.mass / ((double)cnt * g.cell_volume());
    for (std::size_t i = 0; i < g.size(); ++i)
      if (b.f[i]) mu.density.v[i] += dens;
  }
  double total = 0.0;
  for (const auto& at : atoms) total += at.mass;
  mu.total_mass = total;
  return mu;
}

GridMeasure measure_from_density(const ScalarField& density) {
  GridMeasure mu;
  for (double d : density.v)
    if (d < 0.0) fail(ErrorCode::Placement, "measure density must be nonnegative");
  mu.density = density;
  mu.total_mass = integrate(density);
  return mu;
}

GridMeasure zero_measure(const Grid& g) {
  GridMeasure mu;
  mu.density = ScalarField(g);
  return mu;
}

GridMeasure add_measures(const GridMeasure& a, const GridMeasure& b) {
  require_same_grid(a.density.grid, b.density.grid, "add_measures");
  GridMeasure s = a;
  for (std::size_t i = 0; i < s.density.size(); ++i) s.density.v[i] += b.density.v[i];
  s.atoms.insert(s.atoms.end(), b.atoms.begin(), b.atoms.end());
  s.total_mass = a.total_mass + b.total_mass;
  s.radius = std::max(a.radius, b.radius);
  return s;
}

Mask threshold(const ScalarField& f, double tol) {
  Mask m(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) m.f[i] = f.v[i] > tol;
  return m;
}

Mask threshold_below(const ScalarField& f, double tol) {
  Mask m(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) m.f[i] = f.v[i] < -tol;
  return m;
}

Mask ball_mask(const Grid& g, const Point& center, double radius) {
  Mask m(g);
  double r2 = radius * radius;
  for (std::size_t i = 0; i < g.size(); ++i) {
    Point p = g.node(i);
    double d2 = 0.0;
    for (int a = 0; a < g.n; ++a) d2 += (p[a] - center[a]) * (p[a] - center[a]);
    m.f[i] = d2 < r2;
  }
  return m;
}

Mask box_mask(const Grid& g, const Point& lo, const Point& hi) {
  Mask m(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Point p = g.node(i);
    bool in = true;
    for (int a = 0; a < g.n; ++a) in = in && p[a] > lo[a] && p[a] < hi[a];
    m.f[i] = in;
  }
  return m;
}

Mask support(const ScalarField& f) {
  Mask m(f.grid);
  for (std::size_t i = 0; i < f.size(); ++i) m.f[i] = f.v[i] != 0.0;
  return m;
}

Mask dilate(const Mask& m, int cells) {
  const Grid& g = m.grid;
  Mask cur = m;
  std::size_t stride[3] = {1, (std::size_t)g.cells[0], (std::size_t)g.cells[0] * g.cells[1]};
  // separable max-norm dilation, one axis at a time
  for (int a = 0; a < g.n; ++a) {
    Mask next(g);
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      if (!cur.f[idx]) continue;
      int c = g.unindex(idx)[a];
      int lo = std::max(0, c - cells), hi = std::min(g.cells[a] - 1, c + cells);
      std::size_t base = idx - (std::size_t)c * stride[a];
      for (int t = lo; t <= hi; ++t) next.f[base + (std::size_t)t * stride[a]] = 1;
    }
    cur = std::move(next);
  }
  return cur;
}

Mask erode(const Mask& m, int cells) { return complement(dilate(complement(m), cells)); }

Mask complement(const Mask& m) {
  Mask c(m.grid);
  for (std::size_t i = 0; i < m.f.size(); ++i) c.f[i] = !m.f[i];
  return c;
}

Mask mask_and(const Mask& a, const Mask& b) {
  require_same_grid(a.grid, b.grid, "mask_and");
  Mask c(a.grid);
  for (std::size_t i = 0; i < a.f.size(); ++i) c.f[i] = a.f[i] && b.f[i];
  return c;
}

Mask mask_or(const Mask& a, const Mask& b) {
  require_same_grid(a.grid, b.grid, "mask_or");
  Mask c(a.grid);
  for (std::size_t i = 0; i < a.f.size(); ++i) c.f[i] = a.f[i] || b.f[i];
  return c;
}

Mask mask_minus(const Mask& a, const Mask& b) {
  require_same_grid(a.grid, b.grid, "mask_minus");
  Mask c(a.grid);
  for (std::size_t i = 0; i < a.f.size(); ++i) c.f[i] = a.f[i] && !b.f[i];
  return c;
}

Mask boundary_collar(const Mask& m, int cells) {
  // nodes of m adjacent to the complement, and vice versa, then widened
  Mask inner = mask_minus(m, erode(m, 1));
  Mask outer = mask_minus(dilate(m, 1), m);
  Mask edge = mask_or(inner, outer);
  return cells > 1 ? dilate(edge, cells - 1) : edge;
}

Mask box_margin(const Grid& g, int cells) {
  Mask m(g);
  for (std::size_t i = 0; i < g.size(); ++i) m.f[i] = g.cells_to_edge(i) <= cells;
  return m;
}

std::size_t count_xor(const Mask& a, const Mask& b) {
  require_same_grid(a.grid, b.grid, "count_xor");
  std::size_t c = 0;
  for (std::size_t i = 0; i < a.f.size(); ++i) c += (a.f[i] != b.f[i]);
  return c;
}

Mask reflect_x0(const Mask& m, double c) {
  const Grid& g = m.grid;
  Mask r(g);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!m.f[idx]) continue;
    auto cc = g.unindex(idx);
    double x = g.origin[0] + (cc[0] + 0.5) * g.h;
    long i2 = std::lround((2.0 * c - x - g.origin[0]) / g.h - 0.5);
    if (i2 < 0 || i2 >= g.cells[0]) continue;
    r.f[g.index((int)i2, cc[1], cc[2])] = 1;
  }
  return r;
}

double box_min_eigenvalue(const Grid& g) {
  double lam = 0.0;
  for (int a = 0; a < g.n; ++a) {
    double s = std::sin(std::numbers::pi / (2.0 * (g.cells[a] + 1)));
    lam += 4.0 / (g.h * g.h) * s * s;
  }
  return lam;
}

} // namespace qdom
