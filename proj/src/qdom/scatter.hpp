#pragma once

#include "qdom/grid.hpp"
#include "qdom/linsolve.hpp"
#include "qdom/twophase.hpp"

#include <string>
#include <vector>

namespace qdom {

enum class IncidentKind { Herglotz, Radial };

struct IncidentSpec {
  IncidentKind kind = IncidentKind::Radial;
  std::vector<Point> directions;  // Herglotz
  std::vector<double> weights;    // Herglotz, one per direction
  Point center{};                 // radial
  double scale = 1.0;             // radial amplitude
  int sign = -1;                  // radial sign
};

/// Herglotz spec with n_dirs equispaced directions (Fibonacci lattice in 3D) and weights |S^{n-1}|/n_dirs.
IncidentSpec uniform_herglotz(int n, int n_dirs);

struct IncidentField {
  double k0 = 0.0;
  IncidentSpec spec;
  ScalarField field;
  double gate_residual = 0.0;

  double evaluate(const Point& x) const;
};

/// Throws ErrorCode::Resolution when the interior residual exceeds 0.1 k0^4 h^2 max|u0|.
IncidentField make_incident(const Grid& g, double k0, const IncidentSpec& spec);

struct AdmissibilityReport {
  double max_on_boundary = 0.0;  // max u0 over 1-cell collars of the boundaries of D+ and D-
  double delta = 0.0;
  bool vacuous = false;
  bool passed = false;
};

AdmissibilityReport admissibility_check(const IncidentField& u0, const TwoPhaseResult& tp);

struct ContrastSpec {
  double lambda_plus = 1.0, lambda_minus = 1.0;
  double k_plus = 0.0, k_minus = 0.0;
  const GridMeasure* mu_plus = nullptr;   // absorbed into the source term when given
  const GridMeasure* mu_minus = nullptr;
};

struct InterfaceLimit {
  std::size_t node_plus = 0, node_minus = 0;
  double rho_plus = 0.0, rho_minus = 0.0;
  double expected_plus = 0.0, expected_minus = 0.0;  // -lambda/u0 at the edge midpoint
};

struct ScatterResult {
  ScalarField h;      // source of (Delta + k0^2) u~ on D
  ScalarField total;  // u0 + u~
  ScalarField rho_plus, rho_minus;
  ScalarField q;      // rho+ chi_{D+} - rho- chi_{D-}
  std::vector<InterfaceLimit> boundary_limits;
  double max_limit_error = 0.0;  // relative, over interface edges
  double min_abs_total = 0.0;    // over D
  double identity_error = 0.0;   // max |q (u0 + u~) + h| over D
  bool free_boundary_signs = true;
};

/// Throws ErrorCode::Hypothesis when u0 is not admissible and ErrorCode::Division when the
/// total field comes within 1e-3 max|u0| of zero on D.
ScatterResult build_contrasts(const TwoPhaseResult& tp, const IncidentField& u0, const ContrastSpec& spec);

struct NonscatterReport {
  double residual = 0.0;     // max |(Delta_h + k0^2 + q) u| off 2-cell interface collars and the box edge
  double margin_max = 0.0;   // max |u~| on the 2-cell box margin
  bool compact_support = false;
  ScalarField field;
};

NonscatterReport nonscattering_residual(const ScatterResult& res, const IncidentField& u0, const TwoPhaseResult& tp);

struct Permittivity {
  ScalarField epsilon;  // 1/psi^2 on the disk, 1 outside
  ScalarField psi;
  Mask disk;
  double min_psi = 0.0;
  double self_residual = 0.0;  // max |Delta_h psi + q psi| on the disk
  bool normal_equations = false;
};

/// Solves Delta psi + q psi = 0 on the disk of radius R about the origin with psi = 1 outside
/// and returns epsilon = psi^{-2}. 2D only.
Permittivity reconstruct_permittivity(const ScalarField& q, double R, const SolverConfig& cfg = {});

} // namespace qdom
