#pragma once

#include "qdom/grid.hpp"

#include <optional>

namespace qdom {

/// A = -Delta_h - k^2 + q on the active nodes of `domain`; every other node is pinned.
struct OperatorSpec {
  double k = 0.0;
  std::optional<ScalarField> q;
  Mask domain;
};

OperatorSpec full_box_operator(const Grid& g, double k);

struct SolverConfig {
  double tol_rel = 1e-9;
  long max_iter = 0;        // 0 selects 200 * max(cells)
  double relaxation = 1.7;  // PSOR over-relaxation in (0, 2)
  int check_every = 10;     // PSOR sweeps between residual checks
  bool reverse_order = false;

  long iteration_cap(const Grid& g) const { return max_iter > 0 ? max_iter : 200L * g.max_cells(); }
};

/// Throws ErrorCode::Config unless k^2 h^2 < 2n, the diagonal stays positive and
/// the solver settings are in range.
void validate_operator(const OperatorSpec& op, const SolverConfig& cfg);

struct SolveResult {
  ScalarField u;
  long iterations = 0;
  double residual = 0.0;  // final residual relative to the right-hand side
};

/// Solves A u = rhs on the active nodes with u = boundary elsewhere; `boundary`
/// also serves as the initial guess. Throws ErrorCode::Indefinite when A is not
/// positive definite on the domain.
SolveResult cg_solve(const OperatorSpec& op, const ScalarField& rhs, const ScalarField& boundary,
                     const SolverConfig& cfg = {});

/// Projected SOR for the LCP u >= lower, A u - rhs >= 0, (u - lower)(A u - rhs) = 0 on
/// the active nodes; `lower` defaults to 0. Inactive nodes keep the value of
/// `initial` (default 0), which also seeds the iteration.
SolveResult psor_lcp(const OperatorSpec& op, const ScalarField& rhs, const ScalarField* lower,
                     const SolverConfig& cfg = {}, const ScalarField* initial = nullptr);

/// Applies A (including pinned values of u on inactive nodes) at active nodes; zero elsewhere.
ScalarField apply_operator(const OperatorSpec& op, const ScalarField& u);

struct EigenResult {
  double lambda = 0.0;  // smallest eigenvalue of -Delta_h on the mask
  double k_star = 0.0;  // sqrt(lambda)
  ScalarField field;    // positive, unit L2 norm
  int iterations = 0;
};

/// Inverse power iteration with CG inner solves.
EigenResult min_eigenvalue(const Mask& domain, const SolverConfig& cfg = {});

} // namespace qdom
