#pragma once

#include "qdom/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace inst {

// Two atoms of mass pi at +-d e1, k = 0.5, mollified over radius 0.25.
struct TwoAtoms {
  qdom::Grid grid;
  qdom::GridMeasure plus;
  qdom::GridMeasure minus;
  double k = 0.5;
  double d = 0.0;
};

inline TwoAtoms two_atoms(double d, double h) {
  TwoAtoms t;
  t.d = d;
  double hx = std::max(d + 2.0, 3.5), hy = 2.5;
  int cx = (int)std::lround(2 * hx / h), cy = (int)std::lround(2 * hy / h);
  t.grid = qdom::make_grid(2, {-hx, -hy, 0}, {cx * h, cy * h, 0}, {cx, cy, 1});
  t.plus = qdom::deposit_measure(t.grid, {{{d, 0, 0}, std::numbers::pi}}, 0.25);
  t.minus = qdom::deposit_measure(t.grid, {{{-d, 0, 0}, std::numbers::pi}}, 0.25);
  return t;
}

inline constexpr double far_d = 3.0;
inline constexpr double near_d = 1.1;
inline constexpr double overlap_d = 0.8;

// every cell of a xor b lies within `cells` of the boundary of a
inline bool within_collar(const qdom::Mask& a, const qdom::Mask& b, int cells) {
  qdom::Mask c = qdom::boundary_collar(a, cells);
  for (std::size_t i = 0; i < a.f.size(); ++i)
    if (a.f[i] != b.f[i] && !c.f[i]) return false;
  return true;
}

} // namespace inst
