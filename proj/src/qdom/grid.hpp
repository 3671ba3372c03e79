#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace qdom {

using Point = std::array<double, 3>;

/// Uniform cell-centred grid on an axis-aligned box, n in {2, 3}.
/// Node i sits at origin + (i + 1/2) h along each axis; values outside the box are zero.
struct Grid {
  int n = 2;
  Point origin{0, 0, 0};
  Point extent{0, 0, 0};
  std::array<int, 3> cells{1, 1, 1};
  double h = 0.0;

  std::size_t size() const { return (std::size_t)cells[0] * cells[1] * cells[2]; }
  std::size_t index(int i, int j, int k = 0) const {
    return (std::size_t)i + (std::size_t)cells[0] * ((std::size_t)j + (std::size_t)cells[1] * k);
  }
  std::array<int, 3> unindex(std::size_t idx) const;
  Point node(std::size_t idx) const;
  double cell_volume() const { return n == 2 ? h * h : h * h * h; }
  /// Max-norm distance in cells from node to the outside of the box (1 for nodes on the edge layer).
  int cells_to_edge(std::size_t idx) const;
  int max_cells() const;
  bool operator==(const Grid& o) const;
};

/// Validated constructor: uniform spacing across axes and at least 16 cells per axis.
Grid make_grid(int n, const Point& origin, const Point& extent, const std::array<int, 3>& cells);

/// Throws ErrorCode::Grid if the grids differ.
void require_same_grid(const Grid& a, const Grid& b, const char* what);

struct ScalarField {
  Grid grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), v(g.size(), fill) {}
  double& operator[](std::size_t i) { return v[i]; }
  double operator[](std::size_t i) const { return v[i]; }
  std::size_t size() const { return v.size(); }
  double max_abs() const;
};

struct Mask {
  Grid grid;
  std::vector<std::uint8_t> f;

  Mask() = default;
  explicit Mask(const Grid& g, bool fill = false) : grid(g), f(g.size(), fill ? 1 : 0) {}
  bool operator[](std::size_t i) const { return f[i] != 0; }
  void set(std::size_t i, bool b) { f[i] = b ? 1 : 0; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }
  double volume() const { return (double)count() * grid.cell_volume(); }
};

struct Atom {
  Point point{0, 0, 0};
  double mass = 0.0;
};

/// Mollified measure: nonnegative nodal density plus the atoms it came from.
struct GridMeasure {
  ScalarField density;
  std::vector<Atom> atoms;
  double radius = 0.0;
  double total_mass = 0.0;
};

/// Composite midpoint rule h^n * sum f over flagged nodes (all nodes when over == nullptr).
double integrate(const ScalarField& f, const Mask* over = nullptr);
double integrate_product(const ScalarField& a, const ScalarField& b, const Mask* over = nullptr);

/// (Delta_h + k^2) f with the (2n+1)-point Laplacian and zero exterior.
ScalarField helmholtz_apply(const ScalarField& f, double k);

/// Squared L2 norm of the forward-difference gradient over every edge, including
/// edges to the zero exterior; equals <f, -Delta_h f>.
double gradient_norm2(const ScalarField& f);

/// Deposits each atom uniformly on the grid nodes inside a ball of the given radius,
/// normalised so the discrete mass equals the atom mass exactly.
GridMeasure deposit_measure(const Grid& g, const std::vector<Atom>& atoms, double radius);
/// Measure with an arbitrary nonnegative density and no atoms.
GridMeasure measure_from_density(const ScalarField& density);
GridMeasure zero_measure(const Grid& g);
GridMeasure add_measures(const GridMeasure& a, const GridMeasure& b);

// Mask utilities.
Mask threshold(const ScalarField& f, double tol);                 // {f > tol}
Mask threshold_below(const ScalarField& f, double tol);           // {f < -tol}
Mask ball_mask(const Grid& g, const Point& center, double radius); // {|x - c| < r}
Mask box_mask(const Grid& g, const Point& lo, const Point& hi);    // open box
Mask support(const ScalarField& f);                                // {f != 0}
Mask dilate(const Mask& m, int cells);                             // max-norm dilation
Mask erode(const Mask& m, int cells);
Mask complement(const Mask& m);
Mask mask_and(const Mask& a, const Mask& b);
Mask mask_or(const Mask& a, const Mask& b);
Mask mask_minus(const Mask& a, const Mask& b);
/// Nodes within `cells` of the mask boundary, on either side.
Mask boundary_collar(const Mask& m, int cells);
/// Nodes within `cells` of the outside of the box.
Mask box_margin(const Grid& g, int cells);
std::size_t count_xor(const Mask& a, const Mask& b);
/// Mirror image of the mask under x0 -> 2*c - x0.
Mask reflect_x0(const Mask& m, double c);

/// Smallest discrete Dirichlet eigenvalue of -Delta_h on the full box (closed form).
double box_min_eigenvalue(const Grid& g);

} // namespace qdom
