#include "doctest.h"
#include "instances.hpp"

#include "qdom/balayage.hpp"
#include "qdom/error.hpp"
#include "qdom/multiphase.hpp"

#include <cmath>
#include <numbers>

using namespace qdom;

namespace {

PhaseSpec phase(const GridMeasure& mu, double k, const std::string& label) {
  PhaseSpec s;
  s.k = k;
  s.lambda = 1.0;
  s.mu = mu;
  s.label = label;
  return s;
}

double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.v[i] - b.v[i]));
  return m;
}

} // namespace

TEST_CASE("energy: zero state, homogeneity and the eigenfield value") {
  auto t = inst::two_atoms(inst::near_d, 0.1);
  const Grid& g = t.grid;
  PhaseSpec none = phase(zero_measure(g), 0.5, "none");
  none.lambda = 0.0;
  CHECK(energy(ScalarField(g), none) == 0.0);

  ScalarField u(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Point p = g.node(i);
    u.v[i] = std::exp(-p[0] * p[0] - 2 * p[1] * p[1]) * (1 + 0.3 * p[0]);
  }
  ScalarField tu = u;
  for (auto& x : tu.v) x *= 2.5;
  CHECK(energy(tu, none) == doctest::Approx(6.25 * energy(u, none)).epsilon(1e-12));

  Mask disk = ball_mask(g, {0.3, -0.2, 0}, 1.5);
  EigenResult eig = min_eigenvalue(disk);
  double norm2 = integrate_product(eig.field, eig.field);
  CHECK(energy(eig.field, none) == doctest::Approx((eig.lambda - 0.25) * norm2).epsilon(1e-8));
}

TEST_CASE("one-phase minimizer") {
  auto t = inst::two_atoms(inst::far_d, 0.05);
  const Grid& g = t.grid;
  SUBCASE("no mass gives zero") {
    CHECK(minimize_one_phase(phase(zero_measure(g), 0.5, "a")).max_abs() == 0.0);
  }
  SUBCASE("atom: matches the balayage ball, strict, complementary, order independent") {
    PhaseSpec s = phase(t.plus, t.k, "plus");
    ScalarField v = minimize_one_phase(s);
    BalayageResult b = partial_balayage(t.plus, t.k);
    Mask pos = threshold(v, b.tol_phase);
    CHECK(inst::within_collar(pos, b.omega, 2));
    CHECK(energy(v, s) < 0.0);

    ScalarField Av = helmholtz_apply(v, t.k);
    ScalarField f = s.forcing();
    double scale = std::max(1.0, f.max_abs()), worst = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) worst = std::max(worst, std::fabs(std::min(v.v[i], -Av.v[i] - f.v[i])));
    CHECK(worst <= 1e-7 * scale);

    SolverConfig rev;
    rev.reverse_order = true;
    CHECK(max_diff(minimize_one_phase(s, rev), v) <= 1e-7);
  }
}

TEST_CASE("segregated minimizer with one phase is the one-phase minimizer") {
  auto t = inst::two_atoms(inst::far_d, 0.1);
  PhaseSpec s = phase(t.plus, t.k, "plus");
  SegregatedState st = minimize_segregated({s});
  CHECK(st.converged);
  CHECK(max_diff(st.fields[0], minimize_one_phase(s)) == 0.0);
}

TEST_CASE("two far phases do not interact") {
  auto t = inst::two_atoms(inst::far_d, 0.05);
  std::vector<PhaseSpec> specs = {phase(t.plus, t.k, "plus"), phase(t.minus, t.k, "minus")};
  SegregatedState st = minimize_segregated(specs);
  CHECK(st.converged);
  CHECK(st.path == "scalar two-phase");
  for (int i = 0; i < 2; ++i) {
    ScalarField v = minimize_one_phase(specs[i]);
    CHECK(max_diff(st.fields[i], v) <= 1e-7 * v.max_abs());
    CHECK(inst::within_collar(st.masks[i], threshold(v, st.tol_phase), 1));
  }
  SupportReport rep = support_checks(st, specs);
  CHECK(rep.passed);
  for (const auto& e : rep.phases) CHECK(e.outside_one_phase == 0);
}

TEST_CASE("mirror-symmetric overlapping phases share a flat interface") {
  auto t = inst::two_atoms(inst::overlap_d, 0.05);
  std::vector<PhaseSpec> specs = {phase(t.plus, t.k, "plus"), phase(t.minus, t.k, "minus")};
  SegregatedState st = minimize_segregated(specs);
  REQUIRE(st.converged);
  CHECK(inst::within_collar(reflect_x0(st.masks[0], 0.0), st.masks[1], 1));
  CHECK(mask_and(st.masks[0], st.masks[1]).empty());
  CHECK(!mask_and(dilate(st.masks[0], 1), st.masks[1]).empty());
  // the interface sits on the midplane
  const Grid& g = t.grid;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (st.masks[0].f[i]) CHECK(g.node(i)[0] > 0.0);
    if (st.masks[1].f[i]) CHECK(g.node(i)[0] < 0.0);
  }
  SupportReport rep = support_checks(st, specs);
  CHECK(rep.passed);
}

TEST_CASE("local PDE residual") {
  auto t0 = inst::two_atoms(inst::overlap_d, 0.1);
  std::vector<PhaseSpec> none = {phase(zero_measure(t0.grid), 0.5, "a"), phase(zero_measure(t0.grid), 0.5, "b")};
  SegregatedState z = minimize_segregated(none);
  CHECK(local_pde_residual(z, none, 0, 1).max == 0.0);

  for (double h : {0.1, 0.05, 0.025}) {
    auto t = inst::two_atoms(inst::overlap_d, h);
    std::vector<PhaseSpec> specs = {phase(t.plus, t.k, "plus"), phase(t.minus, t.k, "minus")};
    SegregatedState st = minimize_segregated(specs);
    ResidualReport r = local_pde_residual(st, specs, 0, 1);
    MESSAGE("h=" << h << " residual=" << r.max << " sweeps=" << st.sweeps);
    CHECK(r.max <= 0.1 * h);
    CHECK(local_pde_residual(st, specs, 1, 1).field.max_abs() == 0.0);
  }
}

TEST_CASE("three competing phases") {
  auto t = inst::two_atoms(inst::overlap_d, 0.05);
  const Grid& g = t.grid;
  std::vector<PhaseSpec> specs;
  for (int i = 0; i < 3; ++i) {
    double a = std::numbers::pi / 2 + 2 * std::numbers::pi * i / 3;
    GridMeasure mu = deposit_measure(g, {{{0.8 * std::cos(a), 0.8 * std::sin(a), 0}, 2.0}}, 0.25);
    specs.push_back(phase(mu, t.k, "p" + std::to_string(i)));
  }
  SegregatedState st = minimize_segregated(specs);
  CHECK(st.path == "gauss-seidel");
  CHECK(st.converged);
  CHECK(st.energy_monotone);
  for (std::size_t k = 1; k < st.energy_history.size(); ++k)
    CHECK(st.energy_history[k] <= st.energy_history[k - 1] + 1e-9 * std::fabs(st.energy_history[k - 1]));
  for (std::size_t p = 0; p < g.size(); ++p) {
    int pos = 0;
    for (const auto& u : st.fields) {
      CHECK(u.v[p] >= 0.0);
      pos += u.v[p] > 0.0;
    }
    CHECK(pos <= 1);
  }
  for (std::size_t i = 0; i < 3; ++i) CHECK(mask_minus(support(specs[i].mu.density), st.masks[i]).empty());
  SupportReport rep = support_checks(st, specs);
  CHECK(rep.passed);
  CHECK(st.energy < 0.0);
}

TEST_CASE("support checks") {
  auto t = inst::two_atoms(inst::far_d, 0.1);
  const Grid& g = t.grid;
  SUBCASE("no mass") {
    std::vector<PhaseSpec> specs = {phase(zero_measure(g), 0.5, "a")};
    SegregatedState st = minimize_segregated(specs);
    CHECK(support_checks(st, specs).passed);
  }
  SUBCASE("unequal wavenumbers") {
    std::vector<PhaseSpec> specs = {phase(t.plus, 0.5, "a"), phase(t.minus, 0.4, "b")};
    SegregatedState st = minimize_segregated(specs);
    CHECK_THROWS_AS(support_checks(st, specs), Error);
  }
  SUBCASE("open sets") {
    std::vector<PhaseSpec> specs = {phase(t.plus, t.k, "a"), phase(t.minus, t.k, "b")};
    SegregatedState st = minimize_segregated(specs);
    std::vector<std::optional<Mask>> sets = {ball_mask(g, {3.0, 0, 0}, 0.2), ball_mask(g, {-3.0, 1.5, 0}, 0.3)};
    SupportReport rep = support_checks(st, specs, sets);
    REQUIRE(rep.phases[0].hypothesis_met.has_value());
    CHECK(*rep.phases[0].hypothesis_met);
    CHECK(rep.phases[0].outside_support == 0);
    CHECK(!*rep.phases[1].hypothesis_met);
    CHECK(rep.passed);
  }
}

TEST_CASE("phase validation") {
  auto t = inst::two_atoms(inst::far_d, 0.1);
  PhaseSpec s = phase(t.plus, t.k, "a");
  s.lambda = 0.0;
  CHECK_THROWS_AS(minimize_one_phase(s), Error);
  s.lambda = 1.0;
  s.k = 5.0;
  CHECK_THROWS_AS(minimize_one_phase(s), Error);
  std::vector<PhaseSpec> clash = {phase(t.plus, t.k, "a"), phase(t.plus, t.k, "b")};
  CHECK_THROWS_AS(minimize_segregated(clash), Error);
}
