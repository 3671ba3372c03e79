#pragma once
// Reference routines for tests only. They deliberately avoid the library's
// special-function code paths.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

/// J_n(x) for integer n from Bessel's integral, trapezoid rule on a periodic integrand.
inline double bessel_integral_j(int n, double x, int nodes = 400) {
  const double pi = std::numbers::pi;
  double s = 0.0;
  for (int i = 0; i < nodes; ++i) {
    double t = 2.0 * pi * (i + 0.5) / nodes;
    s += std::cos(n * t - x * std::sin(t));
  }
  return s / nodes;
}

/// Bisection on a sign change of f in [a, b].
inline double bisect(const std::function<double(double)>& f, double a, double b, double tol = 1e-14) {
  double fa = f(a);
  while (b - a > tol * std::max(1.0, std::fabs(a))) {
    double c = 0.5 * (a + b);
    double fc = f(c);
    if ((fa <= 0.0) == (fc <= 0.0)) {
      a = c;
      fa = fc;
    } else {
      b = c;
    }
  }
  return 0.5 * (a + b);
}

/// First positive zero of J_n located by scanning then bisection on the integral form.
inline double integral_zero(int n, int m) {
  auto f = [n](double x) { return bessel_integral_j(n, x); };
  double a = 0.5, fa = f(a);
  int found = 0;
  for (double b = a + 0.05; b < 100.0; b += 0.05) {
    double fb = f(b);
    if ((fa < 0) != (fb < 0)) {
      if (++found == m) return bisect(f, a, b);
    }
    a = b;
    fa = fb;
  }
  return NAN;
}

/// Simpson rule on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels = 2000) {
  double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

} // namespace oracle
