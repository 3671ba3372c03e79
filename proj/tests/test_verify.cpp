#include "doctest.h"
#include "oracles.hpp"

#include "qdom/balayage.hpp"
#include "qdom/error.hpp"
#include "qdom/specfun.hpp"
#include "qdom/verify.hpp"

#include <cmath>
#include <numbers>

using namespace qdom;

namespace {
const double pi = std::numbers::pi;

Grid square(double half, double h) {
  int c = (int)std::lround(2 * half / h);
  return make_grid(2, {-half, -half, 0}, {c * h, c * h, 0}, {c, c, 1});
}

Grid cube(double half, double h) {
  int c = (int)std::lround(2 * half / h);
  return make_grid(3, {-half, -half, -half}, {c * h, c * h, c * h}, {c, c, c});
}

double order(double e_coarse, double e_fine) { return std::log2(e_coarse / e_fine); }
} // namespace

TEST_CASE("test family members") {
  Grid g = square(3.0, 0.05);
  TestFamily fam = helmholtz_test_family(g, 1.0, 4, {{0.5, -0.25, 0}});
  CHECK(fam.members.size() == 9);
  for (const auto& m : fam.members) CHECK(m.gate_residual <= 0.1 * g.h * g.h * m.field.max_abs());

  // direction theta and its opposite: cos equal, sin opposite
  const auto& c0 = fam.members[0];
  const auto& s0 = fam.members[1];
  const auto& c2 = fam.members[4];
  const auto& s2 = fam.members[5];
  for (std::size_t i = 0; i < g.size(); i += 97) {
    CHECK(c2.field.v[i] == doctest::Approx(c0.field.v[i]).epsilon(1e-12));
    CHECK(s2.field.v[i] == doctest::Approx(-s0.field.v[i]).epsilon(1e-12));
  }

  // radial limit at the centre: (k/2)^nu / Gamma(nu+1) with nu = n/2 - 1
  const auto& rad = fam.members.back();
  CHECK(rad.evaluate(1.0, 2, {0.5, -0.25, 0}) == doctest::Approx(1.0));
  FamilyMember r3{MemberKind::Radial, {}, {}, "r3", {}, 0.0};
  double k = 1.7;
  CHECK(r3.evaluate(k, 3, {0, 0, 0}) == doctest::Approx(std::pow(k / 2, 0.5) / std::tgamma(1.5)).epsilon(1e-12));

  Grid g3 = cube(2.0, 0.1);
  TestFamily f3 = helmholtz_test_family(g3, 1.0, 6);
  CHECK(f3.members.size() == 12);
}

TEST_CASE("quadrature residual: mean value property on a ball") {
  Grid g = square(3.0, 0.02);
  double k = 0.8, r = 1.3;
  Mask ball = ball_mask(g, {0, 0, 0}, r);
  GridMeasure mu = deposit_measure(g, {{{0, 0, 0}, ball_capacity(2, k, r)}}, 0.2);
  TestFamily fam = helmholtz_test_family(g, k, 4, {{0.3, 0.2, 0}});
  QuadratureReport rep = quadrature_residual(ball, nullptr, mu, nullptr, fam);
  CHECK(rep.members.size() == 9);
  CHECK(rep.max_normalized <= 0.02);
  for (const auto& m : rep.members) {
    CHECK(m.analytic_pairing);
    CHECK(m.pairing_density == doctest::Approx(m.pairing).epsilon(1e-3));
  }

  FamilyMember zero{MemberKind::Sampled, {}, {}, "zero", ScalarField(g), 0.0};
  TestFamily zf;
  zf.k = k;
  zf.n = 2;
  zf.members.push_back(zero);
  QuadratureReport z = quadrature_residual(ball, nullptr, mu, nullptr, zf);
  CHECK(!z.members[0].analytic_pairing);
  CHECK(z.members[0].residual == 0.0);
}

TEST_CASE("quadrature residual: one-phase balayage domain converges") {
  double k = 0.5, a = pi;
  double R = oracle::bisect([&](double r) { return ball_capacity(2, k, r) - a; }, 0.1, 3.0);
  std::vector<double> errs;
  for (int div : {16, 32, 64}) {
    double h = R / div;
    Grid g = square(2.5, h);
    GridMeasure mu = deposit_measure(g, {{{0, 0, 0}, a}}, 0.25);
    BalayageResult b = partial_balayage(mu, k);
    TestFamily fam = helmholtz_test_family(g, k, 4, {{0.4, 0.1, 0}});
    QuadratureReport rep = quadrature_residual(b.omega, nullptr, mu, nullptr, fam);
    errs.push_back(rep.max_normalized);
    MESSAGE("R/" << div << ": max normalized residual " << rep.max_normalized);
  }
  CHECK(errs.back() <= 0.02);
  CHECK(errs[2] < errs[0]);
}

TEST_CASE("null profile closed form") {
  Grid g = square(4.5, 3.8317 / 64);
  NullProfile p = null_qd_profile(g, 1.0, 1);
  double j11 = oracle::integral_zero(1, 1);
  CHECK(p.radius == doctest::Approx(j11).epsilon(1e-10));
  double J0 = oracle::bessel_integral_j(0, j11);
  double centre = (J0 - 1.0) / J0;
  CHECK(centre == doctest::Approx(3.48287).epsilon(1e-5));
  // value at the centre of the profile via the library
  double edge = radial_helmholtz(2, 1.0, p.radius);
  CHECK((edge - radial_helmholtz(2, 1.0, 0.0)) / edge == doctest::Approx(centre).epsilon(1e-10));

  double umax = p.u.max_abs(), near = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(p.u.v[i] >= 0.0);
    Point x = g.node(i);
    if (std::fabs(std::hypot(x[0], x[1]) - p.radius) < 2 * g.h) near = std::max(near, p.u.v[i]);
  }
  CHECK(umax == doctest::Approx(centre).epsilon(0.01));
  CHECK(near <= 4 * g.h * g.h);

  Grid small = square(3.0, 0.05);
  CHECK_THROWS_AS(null_qd_profile(small, 1.0, 1), Error);
}

TEST_CASE("null profile is a null quadrature domain") {
  Grid g = square(4.5, 3.8317 / 128);
  NullProfile p = null_qd_profile(g, 1.0, 1);
  TestFamily fam = helmholtz_test_family(g, 1.0, 4, {{0.7, -0.3, 0}, {2.0, 1.0, 0}});
  GridMeasure none = zero_measure(g);
  QuadratureReport rep = quadrature_residual(p.domain, nullptr, none, nullptr, fam);
  MESSAGE("null quadrature residual " << rep.max_normalized);
  CHECK(rep.max_normalized <= 0.02);
}

TEST_CASE("pompeiu identities on the disk and their convergence") {
  double R = 3.8317059702075125;
  std::vector<double> errs;
  for (int div : {32, 64, 128}) {
    Grid g = square(4.5, R / div);
    NullProfile p = null_qd_profile(g, 1.0, 1);
    PompeiuReport r = pompeiu_identities(p.u, p.domain, 1.0, p.volume);
    errs.push_back(r.max_rel_error);
    if (div == 128) {
      CHECK(r.holds);
      CHECK(r.volume == doctest::Approx(46.125).epsilon(1e-4));
      CHECK(r.grad_norm2 == doctest::Approx(46.125).epsilon(0.02));
      CHECK(r.l2_term == doctest::Approx(92.25).epsilon(0.02));
      CHECK(r.integral == doctest::Approx(46.125).epsilon(0.02));

      ScalarField scaled = p.u;
      for (auto& x : scaled.v) x *= 1.5;
      CHECK(!pompeiu_identities(scaled, p.domain, 1.0, p.volume).holds);
    }
  }
  MESSAGE("pompeiu errors " << errs[0] << " " << errs[1] << " " << errs[2]);
  CHECK(order(errs[0], errs[1]) >= 1.0);
  CHECK(order(errs[1], errs[2]) >= 1.0);
}

TEST_CASE("pompeiu identities in 3D") {
  double R = bessel_zero(BesselOrder::capacity(3), 1);
  Grid g = cube(5.0, R / 24);
  NullProfile p = null_qd_profile(g, 1.0, 1);
  PompeiuReport r = pompeiu_identities(p.u, p.domain, 1.0, p.volume);
  MESSAGE("3D pompeiu error " << r.max_rel_error);
  CHECK(r.holds);
}

TEST_CASE("pompeiu gate rejects fields that do not vanish on the boundary") {
  Grid g = square(4.5, 0.1);
  NullProfile p = null_qd_profile(g, 1.0, 1);
  Mask inner = ball_mask(g, {0, 0, 0}, 2.0);
  CHECK_THROWS_AS(pompeiu_identities(p.u, inner, 1.0), Error);
}

TEST_CASE("saddle scan and saddle direction") {
  Grid g = square(4.5, 3.8317 / 128);
  NullProfile p = null_qd_profile(g, 1.0, 1);
  std::vector<double> ts;
  for (int i = -8; i <= 12; ++i) ts.push_back(0.25 * i);
  SaddleScan s = saddle_scan(p.u, p.domain, 1.0, ts, p.volume);
  CHECK(s.max_rel_dev <= 0.02);
  CHECK(s.peak_at_one);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] == 0.0) CHECK(s.value[i] == 0.0);
    if (ts[i] == 2.0) CHECK(std::fabs(s.value[i]) <= 0.02 * p.volume);
  }

  SaddleDirection d = saddle_direction(p.u, 1.0);
  CHECK(d.k0 > 1.0);
  CHECK(d.one_sided);
  MESSAGE("mode " << d.mode[0] << "," << d.mode[1] << " k0=" << d.k0 << " coeff=" << d.linear_coeff);
}
