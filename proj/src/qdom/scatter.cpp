#include "qdom/scatter.hpp"

#include "qdom/error.hpp"
#include "qdom/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace qdom {

namespace {

const double pi = std::numbers::pi;

double dot(const Point& a, const Point& b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

std::string node_text(const Grid& g, std::size_t idx) {
  Point p = g.node(idx);
  std::string s = "(" + std::to_string(p[0]) + ", " + std::to_string(p[1]);
  if (g.n == 3) s += ", " + std::to_string(p[2]);
  return s + ")";
}

// CG on the normal equations A^2 x = A b for a symmetric indefinite A.
ScalarField normal_equation_solve(const OperatorSpec& op, const ScalarField& rhs, const ScalarField& boundary,
                                  const SolverConfig& cfg) {
  const Grid& g = rhs.grid;
  const auto& act = op.domain.f;
  ScalarField pinned = boundary;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (act[i]) pinned.v[i] = 0.0;
  ScalarField ap = apply_operator(op, pinned);
  ScalarField b(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (act[i]) b.v[i] = rhs.v[i] - ap.v[i];
  auto A = [&](const ScalarField& v) {
    ScalarField w = v;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!act[i]) w.v[i] = 0.0;
    return apply_operator(op, w);
  };
  auto dotp = [&](const ScalarField& a, const ScalarField& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (act[i]) s += a.v[i] * c.v[i];
    return s;
  };
  ScalarField x(g), r = A(b), p = r;
  double rr = dotp(r, r), target = cfg.tol_rel * cfg.tol_rel * std::max(rr, 1e-300);
  long cap = 20 * cfg.iteration_cap(g);
  for (long it = 0; it < cap && rr > target; ++it) {
    ScalarField Ap = A(A(p));
    double pAp = dotp(p, Ap);
    if (!(pAp > 0.0)) break;
    double alpha = rr / pAp;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (act[i]) {
        x.v[i] += alpha * p.v[i];
        r.v[i] -= alpha * Ap.v[i];
      }
    double rn = dotp(r, r);
    for (std::size_t i = 0; i < g.size(); ++i) p.v[i] = r.v[i] + rn / rr * p.v[i];
    rr = rn;
  }
  if (rr > target) fail(ErrorCode::Indefinite, "permittivity problem is at or near an eigenvalue of -Delta - q on the disk");
  ScalarField out = boundary;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (act[i]) out.v[i] = x.v[i];
  return out;
}

} // namespace

IncidentSpec uniform_herglotz(int n, int n_dirs) {
  if (n_dirs < 1) fail(ErrorCode::Config, "Herglotz field needs at least one direction");
  IncidentSpec s;
  s.kind = IncidentKind::Herglotz;
  if (n == 2) {
    for (int j = 0; j < n_dirs; ++j) {
      double a = 2.0 * pi * j / n_dirs;
      s.directions.push_back({std::cos(a), std::sin(a), 0.0});
    }
  } else {
    double golden = pi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < n_dirs; ++j) {
      double z = 1.0 - (2.0 * j + 1.0) / n_dirs;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      s.directions.push_back({r * std::cos(golden * j), r * std::sin(golden * j), z});
    }
  }
  s.weights.assign(n_dirs, sphere_area(n) / n_dirs);
  return s;
}

double IncidentField::evaluate(const Point& x) const {
  int n = field.grid.n;
  if (spec.kind == IncidentKind::Herglotz) {
    double s = 0.0;
    for (std::size_t j = 0; j < spec.directions.size(); ++j) s += spec.weights[j] * std::cos(k0 * dot(x, spec.directions[j], n));
    return s;
  }
  double r = 0.0;
  for (int a = 0; a < n; ++a) r += (x[a] - spec.center[a]) * (x[a] - spec.center[a]);
  return spec.sign * spec.scale * radial_helmholtz(n, k0, std::sqrt(r));
}

IncidentField make_incident(const Grid& g, double k0, const IncidentSpec& spec) {
  if (!(k0 > 0.0)) fail(ErrorCode::Config, "incident field requires k0 > 0");
  if (spec.kind == IncidentKind::Herglotz) {
    if (spec.directions.empty() || spec.directions.size() != spec.weights.size())
      fail(ErrorCode::Config, "Herglotz field needs one weight per direction");
    for (const auto& d : spec.directions)
      if (std::fabs(dot(d, d, g.n) - 1.0) > 1e-9) fail(ErrorCode::Config, "Herglotz directions must be unit vectors");
  } else if (spec.sign != 1 && spec.sign != -1) {
    fail(ErrorCode::Config, "radial incident sign must be +1 or -1");
  }
  IncidentField u;
  u.k0 = k0;
  u.spec = spec;
  u.field = ScalarField(g);
  for (std::size_t i = 0; i < g.size(); ++i) u.field.v[i] = u.evaluate(g.node(i));
  ScalarField r = helmholtz_apply(u.field, k0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.cells_to_edge(i) > 1) u.gate_residual = std::max(u.gate_residual, std::fabs(r.v[i]));
  if (u.gate_residual > 0.1 * std::pow(k0, 4) * g.h * g.h * std::max(u.field.max_abs(), 1e-300))
    fail(ErrorCode::Resolution, "incident field fails the discrete Helmholtz gate; increase cells");
  return u;
}

AdmissibilityReport admissibility_check(const IncidentField& u0, const TwoPhaseResult& tp) {
  const Grid& g = tp.u.grid;
  require_same_grid(g, u0.field.grid, "admissibility_check");
  AdmissibilityReport r;
  r.delta = 1e-3 * u0.field.max_abs();
  Mask collar = mask_or(boundary_collar(tp.D_plus, 1), boundary_collar(tp.D_minus, 1));
  r.vacuous = tp.D_plus.empty() && tp.D_minus.empty();
  r.max_on_boundary = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (collar.f[i]) r.max_on_boundary = std::max(r.max_on_boundary, u0.field.v[i]);
  r.passed = r.vacuous || r.max_on_boundary <= -r.delta;
  if (r.vacuous) r.max_on_boundary = 0.0;
  return r;
}

ScatterResult build_contrasts(const TwoPhaseResult& tp, const IncidentField& u0, const ContrastSpec& spec) {
  const Grid& g = tp.u.grid;
  require_same_grid(g, u0.field.grid, "build_contrasts");
  if (!(spec.lambda_plus > 0.0) || !(spec.lambda_minus > 0.0)) fail(ErrorCode::Config, "contrast lambdas must be > 0");
  AdmissibilityReport adm = admissibility_check(u0, tp);
  if (!adm.passed)
    fail(ErrorCode::Hypothesis, "incident field is not negative on the boundaries of D+ and D- (max " +
                                    std::to_string(adm.max_on_boundary) + ")");
  const double k0s = u0.k0 * u0.k0;
  const double kp = spec.k_plus * spec.k_plus - k0s, km = spec.k_minus * spec.k_minus - k0s;
  ScatterResult res;
  res.h = ScalarField(g);
  res.total = ScalarField(g);
  res.rho_plus = ScalarField(g);
  res.rho_minus = ScalarField(g);
  res.q = ScalarField(g);
  double delta = 1e-3 * u0.field.max_abs();
  res.min_abs_total = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double u = tp.u.v[i];
    res.total.v[i] = u0.field.v[i] + u;
    bool in_p = tp.D_plus.f[i], in_m = tp.D_minus.f[i];
    if (!in_p && !in_m) continue;
    double h = -kp * std::max(u, 0.0) + km * std::max(-u, 0.0);
    if (in_p) h += spec.lambda_plus - (spec.mu_plus ? spec.mu_plus->density.v[i] : 0.0);
    if (in_m) h -= spec.lambda_minus - (spec.mu_minus ? spec.mu_minus->density.v[i] : 0.0);
    res.h.v[i] = h;
    double t = res.total.v[i];
    res.min_abs_total = std::min(res.min_abs_total, std::fabs(t));
    if (std::fabs(t) < delta) {
      bad.push_back(i);
      continue;
    }
    if (in_p) {
      res.rho_plus.v[i] = -h / t;
      res.q.v[i] = res.rho_plus.v[i];
    } else {
      res.rho_minus.v[i] = h / t;
      res.q.v[i] = -res.rho_minus.v[i];
    }
    res.identity_error = std::max(res.identity_error, std::fabs(res.q.v[i] * t + h));
  }
  // a sign change along an edge inside D is a zero of the total field as well
  std::size_t st[3] = {1, (std::size_t)g.cells[0], (std::size_t)g.cells[0] * g.cells[1]};
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(tp.D_plus.f[i] || tp.D_minus.f[i])) continue;
    auto c = g.unindex(i);
    for (int a = 0; a < g.n; ++a) {
      if (c[a] + 1 >= g.cells[a]) continue;
      std::size_t j = i + st[a];
      if ((tp.D_plus.f[j] || tp.D_minus.f[j]) && (res.total.v[i] > 0.0) != (res.total.v[j] > 0.0)) {
        bad.push_back(i);
        break;
      }
    }
  }
  if (!bad.empty()) {
    std::string where;
    for (std::size_t j = 0; j < std::min<std::size_t>(bad.size(), 5); ++j) where += (j ? ", " : "") + node_text(g, bad[j]);
    fail(ErrorCode::Division, "total field vanishes on D at " + std::to_string(bad.size()) + " node(s): " + where);
  }
  if (!std::isfinite(res.min_abs_total)) res.min_abs_total = 0.0;

  // interface edges between D+ and D-
  std::size_t stride[3] = {1, (std::size_t)g.cells[0], (std::size_t)g.cells[0] * g.cells[1]};
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!tp.D_plus.f[i]) continue;
    auto c = g.unindex(i);
    for (int a = 0; a < g.n; ++a)
      for (int s : {-1, 1}) {
        if ((s < 0 && c[a] == 0) || (s > 0 && c[a] == g.cells[a] - 1)) continue;
        std::size_t j = s < 0 ? i - stride[a] : i + stride[a];
        if (!tp.D_minus.f[j]) continue;
        InterfaceLimit L;
        L.node_plus = i;
        L.node_minus = j;
        L.rho_plus = res.rho_plus.v[i];
        L.rho_minus = res.rho_minus.v[j];
        double u0m = 0.5 * (u0.field.v[i] + u0.field.v[j]);
        L.expected_plus = -spec.lambda_plus / u0m;
        L.expected_minus = -spec.lambda_minus / u0m;
        res.max_limit_error = std::max({res.max_limit_error, std::fabs(L.rho_plus / L.expected_plus - 1.0),
                                        std::fabs(L.rho_minus / L.expected_minus - 1.0)});
        if (!(res.total.v[i] > u0.field.v[i]) || !(res.total.v[j] < u0.field.v[j])) res.free_boundary_signs = false;
        res.boundary_limits.push_back(L);
      }
  }
  return res;
}

NonscatterReport nonscattering_residual(const ScatterResult& res, const IncidentField& u0, const TwoPhaseResult& tp) {
  const Grid& g = tp.u.grid;
  require_same_grid(g, res.total.grid, "nonscattering_residual");
  NonscatterReport r;
  r.field = helmholtz_apply(res.total, u0.k0);
  for (std::size_t i = 0; i < g.size(); ++i) r.field.v[i] += res.q.v[i] * res.total.v[i];
  Mask collar = mask_or(boundary_collar(tp.D_plus, 2), boundary_collar(tp.D_minus, 2));
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.cells_to_edge(i) <= 2) r.margin_max = std::max(r.margin_max, std::fabs(tp.u.v[i]));
    if (g.cells_to_edge(i) > 1 && !collar.f[i]) r.residual = std::max(r.residual, std::fabs(r.field.v[i]));
  }
  r.compact_support = r.margin_max <= tp.tol_phase;
  return r;
}

Permittivity reconstruct_permittivity(const ScalarField& q, double R, const SolverConfig& cfg) {
  const Grid& g = q.grid;
  if (g.n != 2) fail(ErrorCode::Config, "permittivity reconstruction is two-dimensional");
  if (!(R > 0.0)) fail(ErrorCode::Config, "permittivity disk radius must be > 0");
  Permittivity p;
  p.disk = ball_mask(g, {0, 0, 0}, R);
  if (p.disk.empty()) fail(ErrorCode::Grid, "permittivity disk contains no nodes");
  for (int a = 0; a < 2; ++a)
    if (-R < g.origin[a] + g.h || R > g.origin[a] + g.extent[a] - g.h)
      fail(ErrorCode::BoxTooSmall, "permittivity disk does not fit inside the box");
  for (std::size_t i = 0; i < g.size(); ++i)
    if (q.v[i] != 0.0 && !p.disk.f[i]) fail(ErrorCode::Config, "contrast q is nonzero outside the permittivity disk");
  OperatorSpec op;
  op.k = 0.0;
  op.domain = p.disk;
  ScalarField negq = q;
  for (auto& x : negq.v) x = -x;
  op.q = negq;
  ScalarField zero(g), one(g, 1.0);
  try {
    p.psi = cg_solve(op, zero, one, cfg).u;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Indefinite) throw;
    p.psi = normal_equation_solve(op, zero, one, cfg);
    p.normal_equations = true;
  }
  p.min_psi = *std::min_element(p.psi.v.begin(), p.psi.v.end());
  if (!(p.min_psi > 0.0))
    fail(ErrorCode::PhysicalValidity, "permittivity undefined: psi reaches " + std::to_string(p.min_psi) + " on the disk");
  p.epsilon = ScalarField(g, 1.0);
  for (std::size_t i = 0; i < g.size(); ++i) p.epsilon.v[i] = 1.0 / (p.psi.v[i] * p.psi.v[i]);
  ScalarField lap = helmholtz_apply(p.psi, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (p.disk.f[i]) p.self_residual = std::max(p.self_residual, std::fabs(lap.v[i] + q.v[i] * p.psi.v[i]));
  return p;
}

} // namespace qdom
