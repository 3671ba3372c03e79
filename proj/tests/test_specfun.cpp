#include "doctest.h"
#include "oracles.hpp"

#include "qdom/error.hpp"
#include "qdom/specfun.hpp"

#include <array>
#include <cmath>
#include <numbers>

using namespace qdom;

namespace {

const double pi = std::numbers::pi;

// x, J0, J1, Y0, Y1 at 30 digits (mpmath), frozen.
const std::array<std::array<double, 5>, 19> kTable = {{
    {1e-6, 0.99999999999975, 4.9999999999993747737e-7, -8.8690314816594437317, -636619.77237217504257},
    {1e-3, 0.999999750000015625, 0.00049999993750000261457, -4.4714166113759232557, -636.62216723113941482},
    {0.1, 0.997501562066040032, 0.049937526036242000321, -1.5342386513503668083, -6.4589510947020266377},
    {0.5, 0.93846980724081290423, 0.24226845767487388638, -0.44451873350670655715, -1.4714723926702430692},
    {1.0, 0.76519768655796655145, 0.44005058574493351596, 0.088256964215676957983, -0.78121282130028871655},
    {2.4048255576957728863, -6.1087652597367303971e-17, 0.51914749728946676274, 0.50992438344847906518, 0.1027466824382595953},
    {3.0, -0.26005195490193343762, 0.33905895852593645893, 0.37685001001279038197, 0.32467442479179997844},
    {5.0, -0.17759677131433830435, -0.32757913759146522204, -0.30851762524903378007, 0.1478631433912268448},
    {7.5, 0.26633965788037839687, 0.13524842757970550518, 0.11731328614820863084, -0.2591285104861162518},
    {10.0, -0.2459357644513483352, 0.04347274616886143667, 0.055671167283599391424, 0.24901542420695388392},
    {11.999, 0.047465830573456671239, -0.22351330619483203652, -0.2252943016005962193, -0.056878701713684077842},
    {12.0, 0.047689310796833536624, -0.22344710449062761237, -0.22523731263436143369, -0.05709921826089652105},
    {12.001, 0.047912724710314494455, -0.22338068641687703993, -0.22518010318909980458, -0.057319659732166879071},
    {15.0, -0.014224472826780773234, 0.20510403861352276115, 0.20546429603891826479, 0.02107362803687351194},
    {20.0, 0.16702466434058315473, 0.066833124175850045579, 0.062640596809383831162, -0.16551161436252129586},
    {27.3, 0.029363974018527790304, 0.15040682155860057949, 0.14984411992539750428, -0.026625407498043938149},
    {33.3, 0.063338485947521251681, 0.12386214790148009055, 0.12289749913503732589, -0.061500722807785735016},
    {41.0, -0.10074578912447979774, 0.072101261604979386451, 0.073324239046288664756, 0.10164733899741434468},
    {50.0, 0.055812327669251815005, -0.097511828125175137661, -0.098064995470077079029, -0.056795668562014767942},
}};

// error measured against max(|ref|, floor) so values near a zero use an absolute scale
double rel_err(double got, double ref, double floor = 1e-2) { return std::fabs(got - ref) / std::max(std::fabs(ref), floor); }

} // namespace

TEST_CASE("bessel_j matches frozen reference values") {
  for (const auto& row : kTable) {
    CHECK(rel_err(bessel_j(BesselOrder(0), row[0]), row[1]) <= 1e-10);
    CHECK(rel_err(bessel_j(BesselOrder(2), row[0]), row[2]) <= 1e-10);
  }
}

TEST_CASE("bessel_j matches the integral representation on [0, 50]") {
  for (int i = 0; i <= 500; ++i) {
    double x = 0.1 * i;
    CHECK(std::fabs(bessel_j(BesselOrder(0), x) - oracle::bessel_integral_j(0, x)) <= 1e-12);
    CHECK(std::fabs(bessel_j(BesselOrder(2), x) - oracle::bessel_integral_j(1, x)) <= 1e-12);
  }
}

TEST_CASE("bessel_y matches frozen reference values") {
  for (const auto& row : kTable) {
    CHECK(rel_err(bessel_y(BesselOrder(0), row[0]), row[3]) <= 1e-9);
    CHECK(rel_err(bessel_y(BesselOrder(2), row[0]), row[4]) <= 1e-9);
  }
}

TEST_CASE("Wronskian J1 Y0 - J0 Y1 = 2 / (pi x)") {
  for (double x = 0.05; x <= 50.0; x += 0.37) {
    double w = bessel_j(BesselOrder(2), x) * bessel_y(BesselOrder(0), x) -
               bessel_j(BesselOrder(0), x) * bessel_y(BesselOrder(2), x);
    CHECK(w == doctest::Approx(2.0 / (pi * x)).epsilon(1e-11));
  }
}

TEST_CASE("series and asymptotic branches agree at the switchover") {
  // just below and above x = 12 the two evaluations must meet
  for (int t : {0, 2}) {
    double below = bessel_j(BesselOrder(t), std::nextafter(12.0, 0.0));
    double above = bessel_j(BesselOrder(t), std::nextafter(12.0, 13.0));
    CHECK(std::fabs(below - above) <= 1e-10);
    double yb = bessel_y(BesselOrder(t), std::nextafter(12.0, 0.0));
    double ya = bessel_y(BesselOrder(t), std::nextafter(12.0, 13.0));
    CHECK(std::fabs(yb - ya) <= 1e-10);
  }
}

TEST_CASE("spec examples for J and Y") {
  CHECK(bessel_j(BesselOrder(1), pi / 2) == doctest::Approx(2.0 / pi).epsilon(1e-14));
  CHECK(bessel_j(BesselOrder(0), 0.0) == 1.0);
  CHECK(bessel_j(BesselOrder(2), 2.404826) == doctest::Approx(0.519147).epsilon(1e-6));
  CHECK(bessel_y(BesselOrder(1), pi) == doctest::Approx(std::sqrt(2.0) / pi).epsilon(1e-14));
  CHECK(bessel_y(BesselOrder(1), pi) == doctest::Approx(0.45016).epsilon(1e-5));
  CHECK(bessel_y(BesselOrder(0), 1.0) == doctest::Approx(0.088257).epsilon(1e-5));
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(BesselOrder(5), Error);
  CHECK_THROWS_AS(BesselOrder::from_real(0.25), Error);
  CHECK(BesselOrder::from_real(1.5).twice() == 3);
  try {
    bessel_y(BesselOrder(0), 0.0);
    FAIL("expected domain error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Domain);
  }
  CHECK_THROWS_AS(bessel_y(BesselOrder(0), -1.0), Error);
}

TEST_CASE("half-integer orders agree with their closed forms on (0, 40]") {
  for (int i = 1; i <= 1000; ++i) {
    double x = 0.04 * i;
    double amp = std::sqrt(2.0 / (pi * x));
    double j12 = amp * std::sin(x);
    double y12 = -amp * std::cos(x);
    double j32 = amp * (std::sin(x) / x - std::cos(x));
    CHECK(std::fabs(bessel_j(BesselOrder(1), x) - j12) <= 1e-12 * std::max(1.0, std::fabs(j12)));
    CHECK(std::fabs(bessel_y(BesselOrder(1), x) - y12) <= 1e-12 * std::max(1.0, std::fabs(y12)));
    CHECK(std::fabs(bessel_j(BesselOrder(3), x) - j32) <= 1e-12 * std::max(1.0, std::fabs(j32)));
  }
}

TEST_CASE("J_{3/2} small-argument branch is continuous") {
  double lo = bessel_j(BesselOrder(3), std::nextafter(0.5, 0.0));
  double hi = bessel_j(BesselOrder(3), 0.5);
  CHECK(std::fabs(lo - hi) <= 1e-15);
}

TEST_CASE("zeros match frozen values and the bisection oracle") {
  const double ref[4][5] = {
      {2.4048255576957727686, 5.5200781102863106496, 8.653727912911012217, 11.791534439014281614, 14.930917708487785948},
      {3.1415926535897932385, 6.2831853071795864769, 9.4247779607693797154, 12.566370614359172954, 15.707963267948966192},
      {3.8317059702075123156, 7.0155866698156187535, 10.173468135062722077, 13.323691936314223032, 16.470630050877632813},
      {4.4934094579090641753, 7.7252518369377071642, 10.904121659428899827, 14.06619391283147348, 17.22075527193076874},
  };
  for (int t = 0; t < 4; ++t)
    for (int m = 1; m <= 5; ++m) {
      double z = bessel_zero(BesselOrder(t), m);
      CHECK(std::fabs(z - ref[t][m - 1]) <= 1e-10);
      CHECK(std::fabs(bessel_j(BesselOrder(t), z)) <= 1e-9);
    }
  CHECK(std::fabs(bessel_zero(BesselOrder(0), 1) - oracle::integral_zero(0, 1)) <= 1e-9);
  CHECK(std::fabs(bessel_zero(BesselOrder(2), 1) - oracle::integral_zero(1, 1)) <= 1e-9);
  CHECK(bessel_zero(BesselOrder(1), 1) == doctest::Approx(pi).epsilon(1e-15));
  CHECK_THROWS_AS(bessel_zero(BesselOrder(0), 0), Error);
}

TEST_CASE("fundamental solution") {
  CHECK(fundamental_solution(3, 1.0, 1.0) == doctest::Approx(std::cos(1.0) / (4 * pi)).epsilon(1e-13));
  CHECK(fundamental_solution(3, 1.0, 1.0) == doctest::Approx(0.042997).epsilon(1e-5));
  CHECK(fundamental_solution(2, 1.0, 1.0) == doctest::Approx(-0.25 * 0.088256964215676957983).epsilon(1e-12));
  try {
    fundamental_solution(2, 1.0, 0.0);
    FAIL("expected singularity error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Singularity);
  }
  // 3D closed form cos(kr)/(4 pi r) across k, r
  for (double k : {0.3, 1.0, 2.5})
    for (double r : {0.01, 0.7, 3.0, 9.0})
      CHECK(fundamental_solution(3, k, r) == doctest::Approx(std::cos(k * r) / (4 * pi * r)).epsilon(1e-12));
}

TEST_CASE("ball capacity") {
  CHECK(ball_capacity(2, 1e-3, 1.0) == doctest::Approx(pi).epsilon(1e-3));
  CHECK(ball_capacity(2, 1.0, 2.404826) == doctest::Approx(7.84430031164367).epsilon(1e-6));
  CHECK(std::fabs(ball_capacity(2, 1.0, bessel_zero(BesselOrder(2), 1))) <= 1e-12);
  for (int n : {2, 3})
    for (double r : {0.5, 1.0, 2.0})
      CHECK(std::fabs(ball_capacity(n, 1e-3, r) / ball_volume(n, r) - 1.0) <= 1e-3);
  CHECK(capacity_radius(2, 1.0) == doctest::Approx(2.4048255576957727686).epsilon(1e-14));
  CHECK(capacity_radius(3, 2.0) == doctest::Approx(pi / 2).epsilon(1e-14));
}

TEST_CASE("r^{n/2} J_{n/2}(k r) is increasing up to the first zero of J_{(n-2)/2}") {
  for (int n : {2, 3})
    for (double k : {0.5, 1.0, 3.0}) {
      double rmax = capacity_radius(n, k);
      double prev = -1.0;
      for (int i = 1; i <= 400; ++i) {
        double r = rmax * i / 400.0;
        double v = std::pow(r, 0.5 * n) * bessel_j(BesselOrder(n), k * r);
        CHECK(v > prev);
        prev = v;
      }
    }
}

TEST_CASE("capacity equals the integral of the radial profile over the ball") {
  // c_k(r) = |S^{n-1}| int_0^r s^{n-1} j(ks) ds with j the normalised spherical mean
  const double k = 1.3;
  for (double r : {0.4, 1.1, 1.7}) {
    double c2 = oracle::simpson([&](double s) { return 2 * pi * s * oracle::bessel_integral_j(0, k * s); }, 0.0, r);
    CHECK(ball_capacity(2, k, r) == doctest::Approx(c2).epsilon(1e-9));
    double c3 = oracle::simpson([&](double s) { return 4 * pi * s * std::sin(k * s) / k; }, 0.0, r);
    CHECK(ball_capacity(3, k, r) == doctest::Approx(c3).epsilon(1e-9));
  }
}
