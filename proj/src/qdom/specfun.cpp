#include "qdom/specfun.hpp"

#include "qdom/error.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace qdom {

namespace {

constexpr long double kEulerGamma = 0.57721566490153286061L;
constexpr double kPi = std::numbers::pi;
constexpr double kSeriesLimit = 12.0;

// Power series sum_m (-1)^m (x/2)^{2m+nu} / (m! Gamma(m+nu+1)).
double j_series(double nu, double x) {
  long double half = 0.5L * x;
  long double q = -half * half;
  long double term = std::pow(half, (long double)nu) / std::tgamma((long double)nu + 1.0L);
  long double sum = term;
  for (int m = 1; m < 200; ++m) {
    term *= q / ((long double)m * ((long double)m + nu));
    sum += term;
    if (std::fabs(term) < 1e-21L * std::fabs(sum) && m > 2) break;
  }
  return (double)sum;
}

// Hankel asymptotic expansion; returns J and Y together.
void hankel(double nu, double x, double& j, double& y) {
  double mu = 4.0 * nu * nu;
  double p = 1.0, q = 0.0;
  double term = 1.0;
  double last = 1e300;
  for (int k = 1; k < 120; ++k) {
    double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    if (std::fabs(term) > last) break;
    last = std::fabs(term);
    // term_k carries a_k / x^k; signs alternate in pairs
    int r = k % 4;
    if (r == 1) q += term;
    else if (r == 2) p -= term;
    else if (r == 3) q -= term;
    else p += term;
    if (last < 1e-17) break;
  }
  double chi = x - (0.5 * nu + 0.25) * kPi;
  double amp = std::sqrt(2.0 / (kPi * x));
  double c = std::cos(chi), s = std::sin(chi);
  j = amp * (p * c - q * s);
  y = amp * (p * s + q * c);
}

double y0_series(double x) {
  long double half = 0.5L * x;
  long double q = half * half;
  long double term = 1.0L;
  long double jsum = 1.0L;
  long double hsum = 0.0L;
  long double harmonic = 0.0L;
  for (int k = 1; k < 200; ++k) {
    term *= -q / ((long double)k * k);
    harmonic += 1.0L / k;
    jsum += term;
    hsum -= term * harmonic;
    if (std::fabs(term * harmonic) < 1e-21L && k > 2) break;
  }
  long double lg = std::log(half) + kEulerGamma;
  return (double)((2.0L / std::numbers::pi_v<long double>) * (lg * jsum + hsum));
}

double y1_series(double x) {
  long double half = 0.5L * x;
  long double q = half * half;
  // J1 series and sum of (psi(k+1)+psi(k+2)) weighted terms
  long double term = half;
  long double jsum = term;
  long double hk = 0.0L, hk1 = 1.0L;
  long double psum = term * (hk + hk1 - 2.0L * kEulerGamma);
  for (int k = 1; k < 200; ++k) {
    term *= -q / ((long double)k * (k + 1));
    hk += 1.0L / k;
    hk1 += 1.0L / (k + 1);
    jsum += term;
    long double t = term * (hk + hk1 - 2.0L * kEulerGamma);
    psum += t;
    if (std::fabs(t) < 1e-21L && k > 2) break;
  }
  long double pi = std::numbers::pi_v<long double>;
  long double val = -2.0L / (pi * x) + (2.0L / pi) * std::log(half) * jsum - psum / pi;
  return (double)val;
}

double j_half_closed(int twice, double x) {
  double amp = std::sqrt(2.0 / (kPi * x));
  if (twice == 1) return amp * std::sin(x);
  return amp * (std::sin(x) / x - std::cos(x));
}

double y_half_closed(int twice, double x) {
  double amp = std::sqrt(2.0 / (kPi * x));
  if (twice == 1) return -amp * std::cos(x);
  return -amp * (std::cos(x) / x + std::sin(x));
}

// J_{nu-1} for the derivative J_nu' = J_{nu-1} - (nu/x) J_nu.
double j_lower(int twice, double x) {
  switch (twice) {
  case 0: return -bessel_j(BesselOrder(2), x);
  case 1: return std::sqrt(2.0 / (kPi * x)) * std::cos(x);
  case 2: return bessel_j(BesselOrder(0), x);
  default: return bessel_j(BesselOrder(1), x);
  }
}

} // namespace

BesselOrder::BesselOrder(int twice_nu) : twice_(twice_nu) {
  if (twice_nu < 0 || twice_nu > 3)
    fail(ErrorCode::Domain, "Bessel order " + std::to_string(0.5 * twice_nu) +
                                " outside the admissible set {0, 1/2, 1, 3/2}");
}

BesselOrder BesselOrder::fundamental(int n) {
  if (n != 2 && n != 3) fail(ErrorCode::Domain, "dimension must be 2 or 3");
  return BesselOrder(n - 2);
}

BesselOrder BesselOrder::capacity(int n) {
  if (n != 2 && n != 3) fail(ErrorCode::Domain, "dimension must be 2 or 3");
  return BesselOrder(n);
}

BesselOrder BesselOrder::from_real(double nu) {
  double t = 2.0 * nu;
  int ti = (int)std::lround(t);
  if (std::fabs(t - ti) > 0.0) fail(ErrorCode::Domain, "Bessel order " + std::to_string(nu) + " not admissible");
  return BesselOrder(ti);
}

double bessel_j(BesselOrder nu, double x) {
  int t = nu.twice();
  if (std::isnan(x)) fail(ErrorCode::Domain, "bessel_j: NaN argument");
  if (x < 0.0) {
    if (t % 2 == 1) fail(ErrorCode::Domain, "bessel_j: negative argument for half-integer order");
    double v = bessel_j(nu, -x);
    return t == 2 ? -v : v;
  }
  if (x == 0.0) return t == 0 ? 1.0 : 0.0;
  if (t % 2 == 1) {
    if (x < 0.5) return j_series(nu.value(), x);
    return j_half_closed(t, x);
  }
  if (x <= kSeriesLimit) return j_series(nu.value(), x);
  double j, y;
  hankel(nu.value(), x, j, y);
  return j;
}

double bessel_y(BesselOrder nu, double x) {
  if (!(x > 0.0)) fail(ErrorCode::Domain, "bessel_y: argument must be positive");
  int t = nu.twice();
  if (t % 2 == 1) return y_half_closed(t, x);
  if (x <= kSeriesLimit) return t == 0 ? y0_series(x) : y1_series(x);
  double j, y;
  hankel(nu.value(), x, j, y);
  return y;
}

double bessel_zero(BesselOrder nu, int m) {
  if (m < 1) fail(ErrorCode::Domain, "bessel_zero: index must be >= 1");
  int t = nu.twice();
  if (t == 1) return m * kPi;
  double mu = t * t;  // 4 nu^2
  double beta = (m + 0.25 * t - 0.25) * kPi;
  double b8 = 8.0 * beta;
  double guess = beta - (mu - 1.0) / b8 - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8 * b8 * b8);
  auto f = [&](double x) { return bessel_j(nu, x); };
  double a = guess - 0.25, b = guess + 0.25;
  double fa = f(a), fb = f(b);
  for (int i = 0; i < 40 && fa * fb > 0.0; ++i) {
    a -= 0.1;
    b += 0.1;
    if (a <= 0.0) a = 1e-3;
    fa = f(a);
    fb = f(b);
  }
  if (fa * fb > 0.0) fail(ErrorCode::SolverFailure, "bessel_zero: failed to bracket root");
  for (int i = 0; i < 40 && b - a > 1e-6; ++i) {
    double c = 0.5 * (a + b);
    double fc = f(c);
    if (fa * fc <= 0.0) { b = c; fb = fc; }
    else { a = c; fa = fc; }
  }
  double x = 0.5 * (a + b);
  for (int i = 0; i < 8; ++i) {
    double jx = f(x);
    double d = j_lower(t, x) - 0.5 * t / x * jx;
    double step = jx / d;
    x -= step;
    if (std::fabs(step) < 1e-15 * x) break;
  }
  return x;
}

double fundamental_solution(int n, double k, double r) {
  if (n != 2 && n != 3) fail(ErrorCode::Domain, "fundamental_solution: dimension must be 2 or 3");
  if (!(k > 0.0)) fail(ErrorCode::Domain, "fundamental_solution: k must be positive");
  if (r == 0.0) fail(ErrorCode::Singularity, "fundamental_solution: singular at r = 0");
  if (r < 0.0) fail(ErrorCode::Domain, "fundamental_solution: negative radius");
  if (n == 2) return -0.25 * bessel_y(BesselOrder(0), k * r);
  double p = 0.5 * (n - 2);
  return -0.25 * std::pow(k / (2.0 * kPi), p) * std::pow(r, -p) * bessel_y(BesselOrder::fundamental(n), k * r);
}

double ball_capacity(int n, double k, double r) {
  if (n != 2 && n != 3) fail(ErrorCode::Domain, "ball_capacity: dimension must be 2 or 3");
  if (!(k > 0.0)) fail(ErrorCode::Domain, "ball_capacity: k must be positive");
  if (r < 0.0) fail(ErrorCode::Domain, "ball_capacity: negative radius");
  if (r == 0.0) return 0.0;
  return std::pow(2.0 * kPi * r / k, 0.5 * n) * bessel_j(BesselOrder::capacity(n), k * r);
}

double capacity_radius(int n, double k) {
  if (!(k > 0.0)) fail(ErrorCode::Domain, "capacity_radius: k must be positive");
  return bessel_zero(BesselOrder::fundamental(n), 1) / k;
}

double ball_volume(int n, double r) {
  if (n == 2) return kPi * r * r;
  if (n == 3) return 4.0 / 3.0 * kPi * r * r * r;
  fail(ErrorCode::Domain, "ball_volume: dimension must be 2 or 3");
}

double sphere_area(int n) {
  if (n == 2) return 2.0 * kPi;
  if (n == 3) return 4.0 * kPi;
  fail(ErrorCode::Domain, "sphere_area: dimension must be 2 or 3");
}

double radial_helmholtz(int n, double k, double r) {
  if (n == 2) return bessel_j(BesselOrder(0), k * r);
  if (n != 3) fail(ErrorCode::Domain, "radial_helmholtz: dimension must be 2 or 3");
  double c = std::sqrt(2.0 * k / kPi);
  double z = k * r;
  if (z < 1e-4) return c * (1.0 - z * z / 6.0);
  return c * std::sin(z) / z;
}

} // namespace qdom
