#pragma once

#include "qdom/balayage.hpp"
#include "qdom/grid.hpp"
#include "qdom/linsolve.hpp"

#include <string>
#include <vector>

namespace qdom {

/// Outcome of one hypothesis check; `source` names the condition being tested.
struct HypothesisCheck {
  std::string name;
  std::string source;
  bool passed = false;
  std::string detail;
};

struct TwoPhaseDiagnostics {
  double residual_max = 0.0;  // PDE residual away from interface collars
  double energy = 0.0;        // scalar two-phase energy (minimization route)
  int iterations = 0;
  bool converged = false;
  bool monotone = true;       // balayage route: positive masks shrink after the first sweep
  std::vector<HypothesisCheck> checks;
};

struct TwoPhaseResult {
  ScalarField u;
  Mask D_plus;
  Mask D_minus;
  std::string method;  // "minimization" or "balayage"
  double tol_phase = 0.0;
  TwoPhaseDiagnostics diagnostics;
};

/// Scalar two-phase energy
///   |grad_h U|^2 - k1^2 |U+|^2 - k2^2 |U-|^2 - 2 int f1 U+ - 2 int f2 U-.
double two_phase_energy(const ScalarField& U, double k1, double k2, const ScalarField& f1, const ScalarField& f2);

/// Residual of Delta_h U + k1^2 U+ - k2^2 U- + f1 chi_{D+} - f2 chi_{D-}; the max is taken
/// off 2-cell collars of the phase boundaries and off the 2-cell box margin.
struct ResidualReport {
  ScalarField field;
  double max = 0.0;
};
ResidualReport two_phase_residual(const ScalarField& U, double k1, double k2, const ScalarField& f1,
                                  const ScalarField& f2, const Mask& Dp, const Mask& Dm);

/// Block coordinate descent on the scalar energy: alternately solve the obstacle problem
/// for U+ with U- frozen (and vice versa), starting from the segregated one-phase minimizers.
TwoPhaseResult minimize_scalar_two_phase(double k1, double k2, const ScalarField& f1, const ScalarField& f2,
                                         const SolverConfig& cfg = {}, int max_sweeps = 200);

/// Everything the balayage construction computes along the way.
struct TwoPhaseConstruction {
  TwoPhaseResult result;
  BalayageResult plus;          // full-space balayage of mu+
  BalayageResult minus;         // full-space balayage of mu-
  BalayageResult plus_outside;  // mu+ restricted to the complement of the closure of omega(mu-)
  BalayageResult minus_outside; // mu- restricted to the complement of the closure of omega(mu+)
  ScalarField cand_u;           // W^{mu+} - W^{mu-}_{outside closure omega(mu+)}
  ScalarField cand_v;           // W^{mu+}_{outside closure omega(mu-)} - W^{mu-}
};

/// Two-phase quadrature domain from partial balayage. Throws ErrorCode::Hypothesis on a
/// capacity, disjointness or support-condition failure.
TwoPhaseConstruction construct_two_phase_balayage(const GridMeasure& mu_plus, const GridMeasure& mu_minus, double k,
                                                  const SolverConfig& cfg = {}, int max_iterations = 50);

/// eta(u, mu) = ((mu+ - 1)_+ - (mu+ - 1)_- chi_{u>tol}) - ((mu- - 1)_+ - (mu- - 1)_- chi_{u<-tol}).
ScalarField eta_measure(const ScalarField& u, const GridMeasure& mu_plus, const GridMeasure& mu_minus, double tol = 0.0);

struct TauReport {
  std::size_t pde_violations = 0;       // -(Delta_h + k^2) w < eta off 3-cell interface collars
  std::size_t lower_violations = 0;     // w < -W^{mu-}
  std::size_t sandwich_violations = 0;  // w outside [-W^{mu-}, W^{mu+}]
  double worst_pde = 0.0;
  bool member = false;
};

TauReport tau_membership(const ScalarField& w, const GridMeasure& mu_plus, const GridMeasure& mu_minus, double k,
                         const ScalarField& W_plus, const ScalarField& W_minus, double tol);

struct CrossReport {
  std::size_t diff_plus = 0;
  std::size_t diff_minus = 0;
  double diff_plus_rel = 0.0;
  double diff_minus_rel = 0.0;
  double l2_rel = 0.0;
  bool within_collar = true;  // every differing cell lies within 2 cells of a phase boundary
};

CrossReport cross_validate(const TwoPhaseResult& a, const TwoPhaseResult& b);

/// Concentration of a mollified atom measure: every atom needs mass / radius^n > 1 / c_n.
/// The dimensional constant is not known in closed form; c_n <= 0 selects 1 / |B_1|.
HypothesisCheck concentration_check(const GridMeasure& mu, const std::string& label, double c_n = 0.0);

} // namespace qdom
