#pragma once

namespace qdom {

/// Bessel order restricted to {0, 1/2, 1, 3/2}, stored as twice the order.
class BesselOrder {
public:
  /// Throws ErrorCode::Domain unless twice_nu is 0, 1, 2 or 3.
  explicit BesselOrder(int twice_nu);
  /// Order (n-2)/2 used by the fundamental solution in dimension n.
  static BesselOrder fundamental(int n);
  /// Order n/2 used by the ball capacity in dimension n.
  static BesselOrder capacity(int n);
  /// Parses nu given as a real number; only exact admissible values accepted.
  static BesselOrder from_real(double nu);

  int twice() const { return twice_; }
  double value() const { return 0.5 * twice_; }

private:
  int twice_;
};

/// J_nu(x) for x >= 0 (x < 0 allowed for integer orders).
double bessel_j(BesselOrder nu, double x);
/// Y_nu(x), x > 0.
double bessel_y(BesselOrder nu, double x);
/// m-th positive zero of J_nu, m >= 1.
double bessel_zero(BesselOrder nu, int m);

/// Radial fundamental solution of -(Delta + k^2) in dimension n at distance r > 0.
double fundamental_solution(int n, double k, double r);

/// c_k(r) = (2 pi r / k)^{n/2} J_{n/2}(k r).
double ball_capacity(int n, double k, double r);
/// R_k = j_{(n-2)/2,1} / k, the radius where the capacity peaks.
double capacity_radius(int n, double k);
/// |B_r| in dimension n.
double ball_volume(int n, double r);
/// |S^{n-1}|.
double sphere_area(int n);

/// Radial Helmholtz solution |x|^{1-n/2} J_{n/2-1}(k|x|), finite at r = 0.
double radial_helmholtz(int n, double k, double r);

} // namespace qdom
