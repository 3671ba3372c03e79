#include "qdom/balayage.hpp"

#include "qdom/error.hpp"
#include "qdom/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qdom {

namespace {

double self_cell_average(int n, double k, double h) {
  const double pi = std::numbers::pi;
  if (n == 2) {
    double rho = h / std::sqrt(pi);
    double integral = -0.5 * pi * (rho * bessel_y(BesselOrder(2), k * rho) / k + 2.0 / (pi * k * k));
    return integral / (pi * rho * rho);
  }
  double rho = std::cbrt(3.0 / (4.0 * pi)) * h;
  double kr = k * rho;
  double integral = (std::cos(kr) - 1.0) / (k * k) + rho * std::sin(kr) / k;
  return integral / (4.0 / 3.0 * pi * rho * rho * rho);
}

} // namespace

ScalarField potential(const GridMeasure& mu, double k) {
  const ScalarField& d = mu.density;
  const Grid& g = d.grid;
  if (!(k > 0.0)) fail(ErrorCode::Domain, "potential: k must be positive");
  ScalarField U(g);
  long maxd2 = 0;
  for (int a = 0; a < g.n; ++a) maxd2 += (long)(g.cells[a] - 1) * (g.cells[a] - 1);
  std::vector<double> table(maxd2 + 1, 0.0);
  std::vector<std::uint8_t> have(maxd2 + 1, 0);
  table[0] = self_cell_average(g.n, k, g.h);
  have[0] = 1;
  auto kernel = [&](long d2) {
    if (!have[d2]) {
      table[d2] = fundamental_solution(g.n, k, g.h * std::sqrt((double)d2));
      have[d2] = 1;
    }
    return table[d2];
  };
  double vol = g.cell_volume();
  int nz = g.cells[2], ny = g.cells[1], nx = g.cells[0];
  std::vector<double> row(nx);
  for (std::size_t s = 0; s < g.size(); ++s) {
    double w = d.v[s];
    if (w == 0.0) continue;
    w *= vol;
    auto c = g.unindex(s);
    for (int kk = 0; kk < nz; ++kk) {
      long dz2 = (long)(kk - c[2]) * (kk - c[2]);
      for (int j = 0; j < ny; ++j) {
        long dyz = dz2 + (long)(j - c[1]) * (j - c[1]);
        double* out = &U.v[g.index(0, j, kk)];
        for (int i = 0; i < nx; ++i) {
          long d2 = dyz + (long)(i - c[0]) * (i - c[0]);
          out[i] += w * kernel(d2);
        }
      }
    }
  }
  return U;
}

const char* capacity_status_name(CapacityStatus s) {
  switch (s) {
  case CapacityStatus::Strict: return "strict";
  case CapacityStatus::Weak: return "weak";
  case CapacityStatus::Violated: return "violated";
  }
  return "unknown";
}

CapacityStatus capacity_guard(double total_mass, int n, double k) {
  double cmax = ball_capacity(n, k, capacity_radius(n, k));
  if (total_mass < cmax - 1e-12) return CapacityStatus::Strict;
  if (total_mass <= cmax + 1e-12) return CapacityStatus::Weak;
  return CapacityStatus::Violated;
}

double phase_tolerance(const SolverConfig& cfg, double scale) { return std::max(1e-8, 10.0 * cfg.tol_rel * scale); }

void require_margin(const ScalarField& f, double tol, int cells, const char* what) {
  const Grid& g = f.grid;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.cells_to_edge(i) <= cells && std::fabs(f.v[i]) > tol)
      fail(ErrorCode::BoxTooSmall, std::string("box too small: ") + what + " does not vanish within the " +
                                       std::to_string(cells) + "-cell margin");
}

void require_below_box_eigenvalue(const Grid& g, double k) {
  double lam = box_min_eigenvalue(g);
  if (!(k * k < lam))
    fail(ErrorCode::Hypothesis, "k = " + std::to_string(k) + " is at or above k_* = " + std::to_string(std::sqrt(lam)) +
                                    ", the square root of the first Dirichlet eigenvalue of the box");
}

BalayageResult partial_balayage(const GridMeasure& mu, double k, const Mask* D, const SolverConfig& cfg,
                                const BalayageOptions& opt) {
  const Grid& g = mu.density.grid;
  BalayageResult r;
  r.capacity = capacity_guard(mu.total_mass, g.n, k);
  if (r.capacity == CapacityStatus::Violated)
    fail(ErrorCode::Hypothesis, "capacity bound violated: total mass exceeds c_k(R_k)");
  require_below_box_eigenvalue(g, k);

  OperatorSpec op;
  op.k = k;
  op.domain = D ? *D : Mask(g, true);
  require_same_grid(op.domain.grid, g, "partial_balayage domain");
  ScalarField rhs(g);
  for (std::size_t i = 0; i < g.size(); ++i) rhs.v[i] = mu.density.v[i] - 1.0;

  ScalarField init;
  if (opt.initial) {
    init = *opt.initial;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!op.domain.f[i]) init.v[i] = 0.0;
  }
  SolveResult sr = psor_lcp(op, rhs, nullptr, cfg, opt.initial ? &init : nullptr);
  r.W = std::move(sr.u);
  r.sweeps = sr.iterations;
  r.U = opt.potential ? *opt.potential : potential(mu, k);
  r.tol_phase = phase_tolerance(cfg, r.U.max_abs());
  if (opt.check_margin) require_margin(r.W, r.tol_phase, 2, "W");

  r.V = r.U;
  for (std::size_t i = 0; i < g.size(); ++i) r.V.v[i] -= r.W.v[i];
  r.omega = threshold(r.W, r.tol_phase);
  r.bal_density = helmholtz_apply(r.W, k);
  for (std::size_t i = 0; i < g.size(); ++i) r.bal_density.v[i] += mu.density.v[i];
  double ex = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!op.domain.f[i]) ex += r.bal_density.v[i] - mu.density.v[i];
  r.boundary_excess = ex * g.cell_volume();
  r.domain = std::move(op.domain);
  return r;
}

StructureReport structure_check(const BalayageResult& r, const GridMeasure& mu) {
  const Grid& g = r.W.grid;
  StructureReport s;
  Mask near_omega = dilate(r.omega, 1);
  Mask d_edge = boundary_collar(r.domain, 1);
  Mask near_d = boundary_collar(r.domain, 3);
  s.min_remainder = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double b = r.bal_density.v[i], m = mu.density.v[i];
    if (r.omega.f[i] && r.domain.f[i]) s.max_dev_inside = std::max(s.max_dev_inside, std::fabs(b - 1.0));
    if (!near_omega.f[i] && !d_edge.f[i]) s.max_dev_outside = std::max(s.max_dev_outside, std::fabs(b - m));
    if (!r.omega.f[i]) s.min_remainder = std::min(s.min_remainder, b - m);
    if (!r.domain.f[i] && b - m > 1e-9 && !near_d.f[i]) s.excess_localized = false;
  }
  s.passed = s.max_dev_inside <= 0.05 && s.max_dev_outside <= 0.05 && s.min_remainder >= -1e-6 && s.excess_localized;
  return s;
}

double equivalent_radius(const Mask& m) {
  double vol = m.volume();
  if (m.grid.n == 2) return std::sqrt(vol / std::numbers::pi);
  return std::cbrt(vol * 3.0 / (4.0 * std::numbers::pi));
}

AdaptiveBalayage partial_balayage_adaptive(const Grid& start, const std::vector<Atom>& atoms, double radius, double k,
                                           const SolverConfig& cfg, int max_doublings) {
  AdaptiveBalayage out;
  out.grid = start;
  for (int d = 0;; ++d) {
    out.doublings = d;
    out.mu = deposit_measure(out.grid, atoms, radius);
    bool ok = true;
    try {
      BalayageOptions opt;
      out.result = partial_balayage(out.mu, k, nullptr, cfg, opt);
      Mask margin = box_margin(out.grid, 4);
      ok = mask_and(margin, out.result.omega).empty();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::BoxTooSmall) throw;
      ok = false;
    }
    if (ok) return out;
    if (d == max_doublings) fail(ErrorCode::BoxTooSmall, "box too small after the maximum number of doublings");
    Grid g = out.grid;
    Point origin = g.origin, extent = g.extent;
    std::array<int, 3> cells = g.cells;
    for (int a = 0; a < g.n; ++a) {
      origin[a] -= 0.5 * extent[a];
      extent[a] *= 2.0;
      cells[a] *= 2;
    }
    Grid next = make_grid(g.n, origin, extent, cells);
    require_below_box_eigenvalue(next, k);
    out.grid = next;
  }
}

} // namespace qdom
