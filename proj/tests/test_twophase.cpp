#include "doctest.h"
#include "instances.hpp"

#include "qdom/balayage.hpp"
#include "qdom/error.hpp"
#include "qdom/twophase.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace qdom;

namespace {

ScalarField forcing(const GridMeasure& mu) {
  ScalarField f = mu.density;
  for (auto& x : f.v) x -= 1.0;
  return f;
}

double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.v[i] - b.v[i]));
  return m;
}

double max_excess(const ScalarField& a, const ScalarField& b) {
  double m = -1e300;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, a.v[i] - b.v[i]);
  return m;
}

bool subset(const Mask& a, const Mask& b) { return mask_minus(a, b).empty(); }

// Least w >= -W_minus with -(Delta_h + k^2) w >= eta(w, mu), by ascending nonlinear
// Gauss-Seidel from the subsolution -W_minus.
ScalarField least_tau_element(const GridMeasure& mp, const GridMeasure& mm, double k, const ScalarField& Wm) {
  const Grid& g = Wm.grid;
  double ih2 = 1.0 / (g.h * g.h), d = 2.0 * g.n * ih2 - k * k;
  ScalarField w = Wm;
  for (auto& x : w.v) x = -x;
  for (int sweep = 0; sweep < 200000; ++sweep) {
    double moved = 0.0;
    for (std::size_t idx = 0; idx < g.size(); ++idx) {
      auto c = g.unindex(idx);
      double off = 0.0;
      for (int ax = 0; ax < g.n; ++ax)
        for (int s : {-1, 1}) {
          auto cc = c;
          cc[ax] += s;
          if (cc[ax] >= 0 && cc[ax] < g.cells[ax]) off -= ih2 * w.v[g.index(cc[0], cc[1], cc[2])];
        }
      double ap = mp.density.v[idx] - 1.0, am = mm.density.v[idx] - 1.0;
      double a = std::max(ap, 0.0), b = std::max(-ap, 0.0), cpos = std::max(am, 0.0), e = std::max(-am, 0.0);
      double t;
      double tneg = (a - cpos + e - off) / d;
      if (tneg < 0.0) t = tneg;
      else if (off >= a - cpos) t = 0.0;
      else t = std::max((a - b - cpos - off) / d, 0.0);
      t = std::max(t, -Wm.v[idx]);
      moved = std::max(moved, std::fabs(t - w.v[idx]));
      w.v[idx] = t;
    }
    if (moved < 1e-13) break;
  }
  return w;
}

} // namespace

TEST_CASE("nonpositive forcing gives the zero solution") {
  auto t = inst::two_atoms(inst::far_d, 0.1);
  ScalarField f(t.grid, -1.0);
  TwoPhaseResult r = minimize_scalar_two_phase(0.5, 0.5, f, f);
  CHECK(r.u.max_abs() == 0.0);
  CHECK(r.D_plus.empty());
  CHECK(r.D_minus.empty());
  CHECK(r.diagnostics.converged);
}

TEST_CASE("zero negative forcing reduces to the one-phase minimizer") {
  auto t = inst::two_atoms(inst::far_d, 0.1);
  ScalarField f1 = forcing(t.plus), f2(t.grid);
  TwoPhaseResult r = minimize_scalar_two_phase(0.5, 0.5, f1, f2);
  ScalarField v = psor_lcp(full_box_operator(t.grid, 0.5), f1, nullptr, {}, nullptr).u;
  CHECK(r.D_minus.empty());
  CHECK(max_diff(r.u, v) <= 1e-7 * v.max_abs());
  CHECK(r.diagnostics.residual_max < 1e-6);
}

TEST_CASE("antisymmetric forcing gives an odd solution") {
  auto t = inst::two_atoms(inst::overlap_d, 0.1);
  TwoPhaseResult r = minimize_scalar_two_phase(0.5, 0.5, forcing(t.plus), forcing(t.minus));
  REQUIRE(r.diagnostics.converged);
  const Grid& g = t.grid;
  double worst = 0.0;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    auto c = g.unindex(idx);
    std::size_t m = g.index(g.cells[0] - 1 - c[0], c[1], c[2]);
    worst = std::max(worst, std::fabs(r.u.v[idx] + r.u.v[m]));
  }
  CHECK(worst <= 1e-6 * r.u.max_abs());
  CHECK(count_xor(reflect_x0(r.D_plus, 0.0), r.D_minus) == 0);
}

TEST_CASE("far atoms: both routes recover the one-phase balls") {
  auto t = inst::two_atoms(inst::far_d, 0.05);
  TwoPhaseConstruction c = construct_two_phase_balayage(t.plus, t.minus, t.k);
  const TwoPhaseResult& b = c.result;
  CHECK(b.diagnostics.converged);
  CHECK(b.diagnostics.iterations == 1);
  for (const auto& ch : b.diagnostics.checks) CHECK_MESSAGE(ch.passed, ch.name);
  CHECK(count_xor(b.D_plus, c.plus.omega) == 0);
  CHECK(count_xor(b.D_minus, c.minus.omega) == 0);

  TwoPhaseResult m = minimize_scalar_two_phase(t.k, t.k, forcing(t.plus), forcing(t.minus));
  CHECK(m.diagnostics.converged);
  CHECK(inst::within_collar(m.D_plus, c.plus.omega, 1));
  CHECK(inst::within_collar(m.D_minus, c.minus.omega, 1));

  CrossReport x = cross_validate(m, b);
  CHECK(x.within_collar);
  CHECK(x.l2_rel < 0.05);
  MESSAGE("far: l2_rel=" << x.l2_rel << " diff+=" << x.diff_plus << " diff-=" << x.diff_minus);
}

TEST_CASE("near-touching atoms: hypotheses, symmetry, support and least element") {
  auto t = inst::two_atoms(inst::near_d, 0.05);
  TwoPhaseConstruction c = construct_two_phase_balayage(t.plus, t.minus, t.k);
  const TwoPhaseResult& b = c.result;
  REQUIRE(b.diagnostics.converged);
  CHECK(b.diagnostics.monotone);
  CHECK(b.diagnostics.checks.size() == 6);
  for (const auto& ch : b.diagnostics.checks) CHECK_MESSAGE(ch.passed, ch.name);
  CHECK(mask_and(b.D_plus, b.D_minus).empty());
  CHECK(inst::within_collar(reflect_x0(b.D_plus, 0.0), b.D_minus, 1));
  CHECK(subset(support(t.plus.density), b.D_plus));
  CHECK(subset(support(t.minus.density), b.D_minus));

  TauReport tr = tau_membership(b.u, t.plus, t.minus, t.k, c.plus.W, c.minus.W, b.tol_phase);
  CHECK(tr.member);
  CHECK(tr.pde_violations == 0);
  CHECK(tr.sandwich_violations == 0);
  CHECK(max_excess(b.u, c.cand_u) <= b.tol_phase);
  CHECK(max_excess(b.u, c.cand_v) <= b.tol_phase);

  TwoPhaseResult m = minimize_scalar_two_phase(t.k, t.k, forcing(t.plus), forcing(t.minus));
  CrossReport x = cross_validate(m, b);
  CHECK(x.l2_rel < 0.05);
  CHECK(x.within_collar);
}

TEST_CASE("overlapping one-phase balls: shared interface and ordered candidates") {
  auto t = inst::two_atoms(inst::overlap_d, 0.05);
  TwoPhaseConstruction c = construct_two_phase_balayage(t.plus, t.minus, t.k);
  const TwoPhaseResult& b = c.result;
  REQUIRE(b.diagnostics.converged);
  for (const auto& ch : b.diagnostics.checks) CHECK_MESSAGE(ch.passed, ch.name);
  CHECK(!mask_and(c.plus.omega, c.minus.omega).empty());
  CHECK(inst::within_collar(reflect_x0(b.D_plus, 0.0), b.D_minus, 1));
  // the phases touch across the midplane
  CHECK(!mask_and(dilate(b.D_plus, 1), b.D_minus).empty());

  TauReport tr = tau_membership(b.u, t.plus, t.minus, t.k, c.plus.W, c.minus.W, b.tol_phase);
  CHECK(tr.member);
  // v is a subsolution and u a supersolution of the limit
  CHECK(max_excess(b.u, c.cand_u) <= b.tol_phase);
  CHECK(max_excess(c.cand_v, b.u) <= b.tol_phase);

  TwoPhaseResult m = minimize_scalar_two_phase(t.k, t.k, forcing(t.plus), forcing(t.minus));
  CrossReport x = cross_validate(m, b);
  MESSAGE("overlap: l2_rel=" << x.l2_rel << " diff+=" << x.diff_plus << " diff-=" << x.diff_minus
                             << " it=" << b.diagnostics.iterations << " monotone=" << b.diagnostics.monotone);
  CHECK(x.l2_rel < 0.05);
  CHECK(x.within_collar);
}

TEST_CASE("balayage route output is the least element of tau") {
  for (double d : {inst::near_d, inst::overlap_d}) {
    auto t = inst::two_atoms(d, 0.1);
    TwoPhaseConstruction c = construct_two_phase_balayage(t.plus, t.minus, t.k);
    ScalarField least = least_tau_element(t.plus, t.minus, t.k, c.minus.W);
    TauReport tr = tau_membership(least, t.plus, t.minus, t.k, c.plus.W, c.minus.W, c.result.tol_phase);
    CHECK(tr.member);
    TwoPhaseResult lr;
    lr.u = least;
    lr.D_plus = threshold(least, c.result.tol_phase);
    lr.D_minus = threshold_below(least, c.result.tol_phase);
    CrossReport x = cross_validate(c.result, lr);
    MESSAGE("d=" << d << " least-element l2_rel=" << x.l2_rel << " diff+=" << x.diff_plus);
    CHECK(x.l2_rel < 0.02);
    CHECK(x.within_collar);
  }
}

TEST_CASE("single-phase degeneration of the construction") {
  auto t = inst::two_atoms(inst::far_d, 0.1);
  GridMeasure none = zero_measure(t.grid);
  TwoPhaseConstruction c = construct_two_phase_balayage(t.plus, none, t.k);
  CHECK(c.result.D_minus.empty());
  CHECK(max_diff(c.result.u, c.plus.W) <= c.result.tol_phase);
}

TEST_CASE("hypothesis failures are reported as errors") {
  auto t = inst::two_atoms(inst::near_d, 0.1);
  SUBCASE("capacity") {
    GridMeasure big = deposit_measure(t.grid, {{{1.1, 0, 0}, 200.0}}, 0.25);
    CHECK_THROWS_WITH_AS(construct_two_phase_balayage(big, t.minus, t.k), doctest::Contains("capacity"), Error);
  }
  SUBCASE("overlapping supports") {
    CHECK_THROWS_AS(construct_two_phase_balayage(t.plus, t.plus, t.k), Error);
  }
  SUBCASE("disjointness") {
    GridMeasure big = deposit_measure(t.grid, {{{0.0, 0, 0}, 4.0 * std::numbers::pi}}, 0.25);
    GridMeasure small = deposit_measure(t.grid, {{{-0.9, 0, 0}, 0.5}}, 0.25);
    try {
      construct_two_phase_balayage(big, small, t.k);
      FAIL("no error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Hypothesis);
      CHECK(std::string(e.what()).find("disjointness violated") != std::string::npos);
    }
  }
}

TEST_CASE("concentration check against the c_n surrogate") {
  Grid g = make_grid(2, {-2, -2, 0}, {4, 4, 0}, {40, 40, 1});
  // default threshold 1/c_2 = |B_1| = pi; radius 0.5 puts the boundary at mass pi/4
  GridMeasure dense = deposit_measure(g, {{{0, 0, 0}, 1.0}}, 0.5);
  GridMeasure thin = deposit_measure(g, {{{0, 0, 0}, 0.5}}, 0.5);
  HypothesisCheck a = concentration_check(dense, "plus");
  CHECK(a.passed);
  CHECK(a.name == "concentration[plus]");
  CHECK_FALSE(concentration_check(thin, "minus").passed);
  CHECK(concentration_check(thin, "minus", 1.0).passed);
  CHECK(concentration_check(zero_measure(g), "empty").passed);
  GridMeasure mixed = deposit_measure(g, {{{-1, 0, 0}, 1.0}, {{1, 0, 0}, 0.5}}, 0.5);
  CHECK_FALSE(concentration_check(mixed, "mixed").passed);

  Grid g3 = make_grid(3, {-2, -2, -2}, {4, 4, 4}, {20, 20, 20});
  // 1/c_3 = 4 pi / 3; mass 1 at radius 0.5 gives 8
  CHECK(concentration_check(deposit_measure(g3, {{{0, 0, 0}, 1.0}}, 0.5), "ball").passed);
  CHECK_FALSE(concentration_check(deposit_measure(g3, {{{0, 0, 0}, 0.5}}, 0.5), "ball").passed);
}

TEST_CASE("eta measure") {
  auto t = inst::two_atoms(inst::near_d, 0.1);
  const Grid& g = t.grid;
  ScalarField zero(g);
  GridMeasure weak_p = t.plus, weak_m = t.minus;
  for (auto& x : weak_p.density.v) x = std::min(x, 1.0);
  for (auto& x : weak_m.density.v) x = std::min(x, 1.0);
  CHECK(eta_measure(zero, weak_p, weak_m).max_abs() == 0.0);

  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0), D(0.0, 3.0);
  for (int trial = 0; trial < 5; ++trial) {
    ScalarField u(g);
    GridMeasure mp = zero_measure(g), mm = zero_measure(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      u.v[i] = U(rng);
      double d = D(rng);
      (U(rng) > 0 ? mp : mm).density.v[i] = d;
    }
    ScalarField e = eta_measure(u, mp, mm);
    ScalarField neg = u;
    for (auto& x : neg.v) x = -x;
    ScalarField e2 = eta_measure(neg, mm, mp);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double mu = mp.density.v[i] - mm.density.v[i];
      CHECK(e2.v[i] == -e.v[i]);
      CHECK(e.v[i] >= mu - 1.0 - 1e-15);
      CHECK(e.v[i] <= mu + 1.0 + 1e-15);
    }
  }
}

TEST_CASE("tau membership of the upper element and a shifted lower element") {
  auto t = inst::two_atoms(inst::near_d, 0.05);
  BalayageResult bp = partial_balayage(t.plus, t.k);
  BalayageResult bm = partial_balayage(t.minus, t.k);
  double tol = std::max(bp.tol_phase, bm.tol_phase);
  CHECK(tau_membership(bp.W, t.plus, t.minus, t.k, bp.W, bm.W, tol).member);
  ScalarField low = bm.W;
  for (auto& x : low.v) x = -x - 1.0;
  TauReport r = tau_membership(low, t.plus, t.minus, t.k, bp.W, bm.W, tol);
  CHECK(r.lower_violations == t.grid.size());
  CHECK(!r.member);
}

TEST_CASE("cross validation of identical results") {
  auto t = inst::two_atoms(inst::far_d, 0.1);
  TwoPhaseResult r = minimize_scalar_two_phase(t.k, t.k, forcing(t.plus), forcing(t.minus));
  CrossReport x = cross_validate(r, r);
  CHECK(x.diff_plus == 0);
  CHECK(x.diff_minus == 0);
  CHECK(x.l2_rel == 0.0);
}
