#include "qdom/twophase.hpp"

#include "qdom/error.hpp"
#include "qdom/pairwise.hpp"
#include "qdom/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qdom {

namespace {

// Sum of positive neighbour values of f at every node, divided by h^2.
ScalarField neighbour_sum(const ScalarField& f) {
  const Grid& g = f.grid;
  ScalarField out(g);
  double ih2 = 1.0 / (g.h * g.h);
  std::size_t stride[3] = {1, (std::size_t)g.cells[0], (std::size_t)g.cells[0] * g.cells[1]};
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto c = g.unindex(idx);
    double s = 0.0;
    for (int a = 0; a < g.n; ++a) {
      if (c[a] > 0) s += f.v[idx - stride[a]];
      if (c[a] < g.cells[a] - 1) s += f.v[idx + stride[a]];
    }
    out.v[idx] = s * ih2;
  }
  return out;
}

void clean_below(ScalarField& f, double tol) {
  for (auto& x : f.v)
    if (x <= tol) x = 0.0;
}

HypothesisCheck make_check(const std::string& name, const std::string& source, bool ok, const std::string& detail) {
  return HypothesisCheck{name, source, ok, detail};
}

} // namespace

double two_phase_energy(const ScalarField& U, double k1, double k2, const ScalarField& f1, const ScalarField& f2) {
  const Grid& g = U.grid;
  double pot = pairwise_sum(0, g.size(), [&](std::size_t i) {
    double u = U.v[i];
    if (u > 0.0) return -k1 * k1 * u * u - 2.0 * f1.v[i] * u;
    if (u < 0.0) return -k2 * k2 * u * u + 2.0 * f2.v[i] * u;
    return 0.0;
  });
  return gradient_norm2(U) + pot * g.cell_volume();
}

ResidualReport two_phase_residual(const ScalarField& U, double k1, double k2, const ScalarField& f1,
                                  const ScalarField& f2, const Mask& Dp, const Mask& Dm) {
  const Grid& g = U.grid;
  ResidualReport r;
  r.field = helmholtz_apply(U, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double u = U.v[i];
    double s = u > 0.0 ? k1 * k1 * u : k2 * k2 * u;
    if (Dp.f[i]) s += f1.v[i];
    if (Dm.f[i]) s -= f2.v[i];
    r.field.v[i] += s;
  }
  Mask skip = mask_or(mask_or(boundary_collar(Dp, 2), boundary_collar(Dm, 2)), box_margin(g, 2));
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!skip.f[i]) r.max = std::max(r.max, std::fabs(r.field.v[i]));
  return r;
}

TwoPhaseResult minimize_scalar_two_phase(double k1, double k2, const ScalarField& f1, const ScalarField& f2,
                                         const SolverConfig& cfg, int max_sweeps) {
  const Grid& g = f1.grid;
  require_same_grid(g, f2.grid, "minimize_scalar_two_phase");
  require_below_box_eigenvalue(g, k1);
  require_below_box_eigenvalue(g, k2);
  OperatorSpec op1 = full_box_operator(g, k1), op2 = full_box_operator(g, k2);

  ScalarField P = psor_lcp(op1, f1, nullptr, cfg).u;
  ScalarField M = psor_lcp(op2, f2, nullptr, cfg).u;
  double tol = phase_tolerance(cfg, std::max(P.max_abs(), M.max_abs()));
  // segregate: larger value wins, ties to the positive phase
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (P.v[i] >= M.v[i]) M.v[i] = 0.0;
    else P.v[i] = 0.0;
  }
  clean_below(P, tol);
  clean_below(M, tol);

  auto assemble = [&]() {
    ScalarField U(g);
    for (std::size_t i = 0; i < g.size(); ++i) U.v[i] = P.v[i] - M.v[i];
    return U;
  };
  TwoPhaseResult res;
  res.method = "minimization";
  res.tol_phase = tol;
  ScalarField U = assemble();
  double E = two_phase_energy(U, k1, k2, f1, f2);
  Mask pos = threshold(P, 0.0), neg = threshold(M, 0.0);
  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    // positive phase with the negative phase frozen
    OperatorSpec a = op1;
    a.domain = complement(neg);
    ScalarField rhs = neighbour_sum(M);
    for (std::size_t i = 0; i < g.size(); ++i) rhs.v[i] = f1.v[i] - rhs.v[i];
    ScalarField init = P;
    P = psor_lcp(a, rhs, nullptr, cfg, &init).u;
    clean_below(P, tol);
    Mask new_pos = threshold(P, 0.0);

    OperatorSpec b = op2;
    b.domain = complement(new_pos);
    rhs = neighbour_sum(P);
    for (std::size_t i = 0; i < g.size(); ++i) rhs.v[i] = f2.v[i] - rhs.v[i];
    init = M;
    M = psor_lcp(b, rhs, nullptr, cfg, &init).u;
    clean_below(M, tol);
    Mask new_neg = threshold(M, 0.0);

    ScalarField prev = std::move(U);
    U = assemble();
    double moved = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) moved = std::max(moved, std::fabs(U.v[i] - prev.v[i]));
    double En = two_phase_energy(U, k1, k2, f1, f2);
    bool same = count_xor(new_pos, pos) == 0 && count_xor(new_neg, neg) == 0;
    double drop = E - En;
    pos = std::move(new_pos);
    neg = std::move(new_neg);
    E = En;
    res.diagnostics.iterations = sweep;
    if (same && std::fabs(drop) <= 1e-10 * std::max(std::fabs(E), 1e-300) && moved <= tol) {
      res.diagnostics.converged = true;
      break;
    }
  }
  res.u = U;
  res.D_plus = threshold(U, tol);
  res.D_minus = threshold_below(U, tol);
  res.diagnostics.energy = E;
  res.diagnostics.residual_max = two_phase_residual(U, k1, k2, f1, f2, res.D_plus, res.D_minus).max;
  require_margin(U, tol, 2, "two-phase solution");
  return res;
}

TwoPhaseConstruction construct_two_phase_balayage(const GridMeasure& mu_plus, const GridMeasure& mu_minus, double k,
                                                  const SolverConfig& cfg, int max_iterations) {
  const Grid& g = mu_plus.density.grid;
  require_same_grid(g, mu_minus.density.grid, "construct_two_phase_balayage");
  TwoPhaseConstruction out;
  auto& checks = out.result.diagnostics.checks;

  CapacityStatus cap = capacity_guard(mu_plus.total_mass + mu_minus.total_mass, g.n, k);
  checks.push_back(make_check("capacity_strict", "mu+(R^n) + mu-(R^n) < c_k(R_k)", cap == CapacityStatus::Strict,
                              capacity_status_name(cap)));
  if (cap != CapacityStatus::Strict)
    fail(ErrorCode::Hypothesis, "capacity condition mu+(R^n) + mu-(R^n) < c_k(R_k) not strict");
  Mask sp = support(mu_plus.density), sm = support(mu_minus.density);
  bool disjoint_supports = mask_and(sp, sm).empty();
  checks.push_back(make_check("supports_disjoint", "supp mu+ and supp mu- disjoint", disjoint_supports, ""));
  if (!disjoint_supports) fail(ErrorCode::Hypothesis, "supports of mu+ and mu- overlap");

  ScalarField Up = potential(mu_plus, k), Um = potential(mu_minus, k);
  BalayageOptions op_p{&Up, nullptr, true}, op_m{&Um, nullptr, true};
  out.plus = partial_balayage(mu_plus, k, nullptr, cfg, op_p);
  out.minus = partial_balayage(mu_minus, k, nullptr, cfg, op_m);
  double tol = std::max(out.plus.tol_phase, out.minus.tol_phase);

  Mask clos_p = dilate(out.plus.omega, 1), clos_m = dilate(out.minus.omega, 1);
  bool dis_p = mask_and(clos_m, sp).empty();
  bool dis_m = mask_and(clos_p, sm).empty();
  checks.push_back(make_check("disjointness_plus", "closure(omega(mu-)) and supp mu+ disjoint", dis_p, ""));
  checks.push_back(make_check("disjointness_minus", "closure(omega(mu+)) and supp mu- disjoint", dis_m, ""));
  if (!dis_p || !dis_m)
    fail(ErrorCode::Hypothesis, "disjointness violated: closure(omega(mu-/+)) meets supp mu+/-");

  Mask out_m = complement(clos_m), out_p = complement(clos_p);
  out.plus_outside = partial_balayage(mu_plus, k, &out_m, cfg, op_p);
  out.minus_outside = partial_balayage(mu_minus, k, &out_p, cfg, op_m);
  bool sup_p = mask_minus(sp, out.plus_outside.omega).empty();
  bool sup_m = mask_minus(sm, out.minus_outside.omega).empty();
  checks.push_back(make_check("support_plus", "supp mu+ inside omega(mu+) restricted off closure(omega(mu-))", sup_p, ""));
  checks.push_back(make_check("support_minus", "supp mu- inside omega(mu-) restricted off closure(omega(mu+))", sup_m, ""));
  if (!sup_p || !sup_m) fail(ErrorCode::Hypothesis, "support condition violated: supp mu+/- not inside the restricted non-contact set");

  out.cand_u = ScalarField(g);
  out.cand_v = ScalarField(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.cand_u.v[i] = out.plus.W.v[i] - out.minus_outside.W.v[i];
    out.cand_v.v[i] = out.plus_outside.W.v[i] - out.minus.W.v[i];
  }

  ScalarField Wp = out.plus.W, Wm = out.minus.W;
  ScalarField u(g);
  for (std::size_t i = 0; i < g.size(); ++i) u.v[i] = Wp.v[i] - Wm.v[i];
  Mask pos = threshold(u, tol), neg = threshold_below(u, tol);
  auto& diag = out.result.diagnostics;
  for (int it = 1; it <= max_iterations; ++it) {
    Mask Dp = complement(neg);
    Mask Dm = complement(pos);
    Wp = partial_balayage(mu_plus, k, &Dp, cfg, {&Up, &Wp, true}).W;
    Wm = partial_balayage(mu_minus, k, &Dm, cfg, {&Um, &Wm, true}).W;
    for (std::size_t i = 0; i < g.size(); ++i) u.v[i] = Wp.v[i] - Wm.v[i];
    Mask npos = threshold(u, tol), nneg = threshold_below(u, tol);
    if (it >= 2 && !mask_minus(npos, pos).empty()) diag.monotone = false;
    bool same = count_xor(npos, pos) == 0 && count_xor(nneg, neg) == 0;
    pos = std::move(npos);
    neg = std::move(nneg);
    diag.iterations = it;
    if (same) {
      diag.converged = true;
      break;
    }
  }
  out.result.u = u;
  out.result.D_plus = pos;
  out.result.D_minus = neg;
  out.result.method = "balayage";
  out.result.tol_phase = tol;
  ScalarField f1(g), f2(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    f1.v[i] = mu_plus.density.v[i] - 1.0;
    f2.v[i] = mu_minus.density.v[i] - 1.0;
  }
  diag.energy = two_phase_energy(u, k, k, f1, f2);
  diag.residual_max = two_phase_residual(u, k, k, f1, f2, pos, neg).max;
  return out;
}

ScalarField eta_measure(const ScalarField& u, const GridMeasure& mu_plus, const GridMeasure& mu_minus, double tol) {
  const Grid& g = u.grid;
  require_same_grid(g, mu_plus.density.grid, "eta_measure");
  require_same_grid(g, mu_minus.density.grid, "eta_measure");
  ScalarField eta(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double a = mu_plus.density.v[i] - 1.0, b = mu_minus.density.v[i] - 1.0;
    double pa = std::max(a, 0.0), na = std::max(-a, 0.0);
    double pb = std::max(b, 0.0), nb = std::max(-b, 0.0);
    eta.v[i] = (pa - (u.v[i] > tol ? na : 0.0)) - (pb - (u.v[i] < -tol ? nb : 0.0));
  }
  return eta;
}

TauReport tau_membership(const ScalarField& w, const GridMeasure& mu_plus, const GridMeasure& mu_minus, double k,
                         const ScalarField& W_plus, const ScalarField& W_minus, double tol) {
  const Grid& g = w.grid;
  TauReport r;
  ScalarField eta = eta_measure(w, mu_plus, mu_minus, tol);
  ScalarField lw = helmholtz_apply(w, k);
  Mask pos = threshold(w, tol), neg = threshold_below(w, tol);
  Mask skip = mask_or(boundary_collar(pos, 3), boundary_collar(neg, 3));
  double scale = std::max({1.0, mu_plus.density.max_abs(), mu_minus.density.max_abs()});
  double ineq_tol = 1e-6 * scale;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double gap = -lw.v[i] - eta.v[i];
    if (!skip.f[i] && gap < -ineq_tol) {
      ++r.pde_violations;
      r.worst_pde = std::min(r.worst_pde, gap);
    }
    if (w.v[i] < -W_minus.v[i] - tol) ++r.lower_violations;
    if (w.v[i] < -W_minus.v[i] - tol || w.v[i] > W_plus.v[i] + tol) ++r.sandwich_violations;
  }
  r.member = r.pde_violations == 0 && r.lower_violations == 0;
  return r;
}

CrossReport cross_validate(const TwoPhaseResult& a, const TwoPhaseResult& b) {
  require_same_grid(a.u.grid, b.u.grid, "cross_validate");
  CrossReport r;
  r.diff_plus = count_xor(a.D_plus, b.D_plus);
  r.diff_minus = count_xor(a.D_minus, b.D_minus);
  r.diff_plus_rel = (double)r.diff_plus / std::max<std::size_t>(1, std::max(a.D_plus.count(), b.D_plus.count()));
  r.diff_minus_rel = (double)r.diff_minus / std::max<std::size_t>(1, std::max(a.D_minus.count(), b.D_minus.count()));
  ScalarField d = a.u;
  for (std::size_t i = 0; i < d.size(); ++i) d.v[i] -= b.u.v[i];
  double na = std::sqrt(integrate_product(a.u, a.u));
  r.l2_rel = na > 0.0 ? std::sqrt(integrate_product(d, d)) / na : std::sqrt(integrate_product(d, d));
  Mask collar = mask_or(boundary_collar(a.D_plus, 2), boundary_collar(a.D_minus, 2));
  for (std::size_t i = 0; i < d.size(); ++i) {
    bool differs = a.D_plus.f[i] != b.D_plus.f[i] || a.D_minus.f[i] != b.D_minus.f[i];
    if (differs && !collar.f[i]) r.within_collar = false;
  }
  return r;
}

HypothesisCheck concentration_check(const GridMeasure& mu, const std::string& label, double c_n) {
  int n = mu.density.grid.n;
  if (c_n <= 0.0) c_n = 1.0 / ball_volume(n, 1.0);
  double worst = INFINITY;
  for (const auto& a : mu.atoms) worst = std::min(worst, a.mass / std::pow(mu.radius, n));
  HypothesisCheck h;
  h.name = "concentration[" + label + "]";
  h.source = "concentration: mass(B_r(x)) / r^n above 1/c_n at every support point";
  h.passed = mu.atoms.empty() || worst > 1.0 / c_n;
  std::ostringstream d;
  d << "min mass/radius^n = " << (mu.atoms.empty() ? 0.0 : worst) << ", 1/c_n = " << 1.0 / c_n
    << " (c_n surrogate)";
  h.detail = d.str();
  return h;
}

} // namespace qdom
