#pragma once

#include "qdom/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qdom {

/// Sampled members carry only grid values and are paired against measure densities.
enum class MemberKind { PlaneCos, PlaneSin, Radial, Sampled };

struct FamilyMember {
  MemberKind kind = MemberKind::PlaneCos;
  Point direction{};  // unit vector for plane waves
  Point center{};     // radial members
  std::string descriptor;
  ScalarField field;
  double gate_residual = 0.0;  // interior max of |(Delta_h + k^2) w|

  double evaluate(double k, int n, const Point& x) const;
};

struct TestFamily {
  double k = 0.0;
  int n = 2;
  std::vector<FamilyMember> members;
  Point ball_center{};
  double ball_radius = 0.0;
};

/// Plane waves cos/sin(k x.theta) over n_dirs equispaced directions (a Fibonacci lattice on
/// the sphere in 3D) and radial solutions |x-a|^{1-n/2} J_{n/2-1}(k|x-a|). Every member must
/// pass the interior gate |(Delta_h + k^2) w| <= 0.1 k^4 h^2 max|w|, else ErrorCode::Resolution.
TestFamily helmholtz_test_family(const Grid& g, double k, int n_dirs, const std::vector<Point>& centers = {});

/// Smallest ball about the centroid containing all flagged nodes, widened by 10%.
void set_verification_ball(TestFamily& fam, const std::vector<const Mask*>& masks);

struct MemberResidual {
  std::string descriptor;
  double domain_integral = 0.0;   // int_{D+} w - int_{D-} w
  double pairing = 0.0;           // <mu+ - mu-, w> used for the residual
  double pairing_density = 0.0;   // same pairing from the mollified densities
  bool analytic_pairing = false;
  double residual = 0.0;
  double normalized = 0.0;        // |residual| / (max|w| * |D+ u D-|)
};

struct QuadratureReport {
  std::vector<MemberResidual> members;
  double max_normalized = 0.0;
  double scale = 0.0;  // |D+ u D-|
};

/// Quadrature residual of a signed domain pair against a signed measure. Pass nullptr for the
/// negative phase of a one-phase domain.
QuadratureReport quadrature_residual(const Mask& D_plus, const Mask* D_minus, const GridMeasure& mu_plus,
                                     const GridMeasure* mu_minus, const TestFamily& fam);

struct NullProfile {
  ScalarField u;
  Mask domain;
  double radius = 0.0;
  double volume = 0.0;  // exact |B_R|
};

/// Closed-form solution of (Delta + k^2) u = chi_B, u = |grad u| = 0 outside, on the ball of
/// radius j_{n/2,m}/k about the origin.
NullProfile null_qd_profile(const Grid& g, double k, int m);

struct PompeiuReport {
  double volume = 0.0;
  double grad_norm2 = 0.0, grad_target = 0.0;
  double l2_term = 0.0, l2_target = 0.0;  // k^2 ||u||^2 and (n+2)/(2k^2)|D|
  double integral = 0.0, integral_target = 0.0;
  double max_rel_error = 0.0;
  bool holds = false;  // all within 2%
};

/// Energy identities of a solution vanishing to first order on the boundary of D. Throws
/// ErrorCode::Hypothesis when u is not small near the boundary of D.
PompeiuReport pompeiu_identities(const ScalarField& u, const Mask& D, double k,
                                 std::optional<double> exact_volume = std::nullopt);

/// grad^2 - k^2 U^2 + 2U integrated over the box.
double saddle_functional(const ScalarField& U, double k);

struct SaddleScan {
  std::vector<double> t, value, target;
  double max_rel_dev = 0.0;  // relative to |D|/k^2
  double argmax_t = 0.0;
  bool peak_at_one = false;
};

SaddleScan saddle_scan(const ScalarField& u, const Mask& D, double k, const std::vector<double>& t_values,
                       std::optional<double> exact_volume = std::nullopt);

struct SaddleDirection {
  std::array<int, 3> mode{};  // sine-product mode numbers
  double k0 = 0.0;            // sqrt of its discrete eigenvalue
  double linear_coeff = 0.0;  // (k0^2 - k^2) <u, phi> + int phi
  std::vector<double> t, increment;
  bool one_sided = false;     // increment >= 0 on the side selected by the sign of linear_coeff
  bool sign_change = false;
};

/// Perturbation of u along the lowest box sine mode whose eigenvalue exceeds k^2.
SaddleDirection saddle_direction(const ScalarField& u, double k);

} // namespace qdom
