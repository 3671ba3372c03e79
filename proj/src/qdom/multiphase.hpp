#pragma once

#include "qdom/grid.hpp"
#include "qdom/linsolve.hpp"
#include "qdom/twophase.hpp"

#include <optional>
#include <string>
#include <vector>

namespace qdom {

struct PhaseSpec {
  double k = 0.0;
  double lambda = 1.0;
  std::optional<ScalarField> lambda_field;  // overrides `lambda` when present
  GridMeasure mu;
  std::string label;

  /// f = mu.density - lambda, nodewise.
  ScalarField forcing() const;
};

struct SegregatedState {
  std::vector<ScalarField> fields;
  std::vector<Mask> masks;
  double tol_phase = 0.0;
  double energy = 0.0;
  std::vector<double> energy_history;
  int sweeps = 0;
  bool converged = false;
  bool energy_monotone = true;
  std::string path;  // "one-phase", "scalar two-phase" or "gauss-seidel"
};

double energy(const ScalarField& u, const PhaseSpec& spec);
double energy(const std::vector<ScalarField>& fields, const std::vector<PhaseSpec>& specs);

/// Unique nonnegative minimizer of the one-phase energy with zero boundary values.
ScalarField minimize_one_phase(const PhaseSpec& spec, const SolverConfig& cfg = {});

SegregatedState minimize_segregated(const std::vector<PhaseSpec>& specs, const SolverConfig& cfg = {},
                                    int max_sweeps = 200);

/// Residual of Delta_h(u_i - u_j) + k_i^2 u_i - k_j^2 u_j + f_i chi_i - f_j chi_j. The field is
/// zero on nodes within 2 cells of another phase or of the box edge; the max also skips
/// 2-cell collars of the boundaries of phases i and j.
ResidualReport local_pde_residual(const SegregatedState& state, const std::vector<PhaseSpec>& specs, std::size_t i,
                                  std::size_t j);

struct PhaseSupportEntry {
  std::string label;
  std::size_t outside_one_phase = 0;    // cells of Omega_i outside the one-phase positivity set (1-cell slack)
  double max_excess = 0.0;              // max(u_i - v_i), should vanish
  std::optional<bool> hypothesis_met;   // unset when no open set was supplied
  std::size_t outside_support = 0;      // cells of U_i outside supp u_i (1-cell slack)
};

struct SupportReport {
  std::vector<PhaseSupportEntry> phases;
  bool passed = true;
};

/// Comparison with one-phase minimizers and the open-set support condition. Requires equal
/// wavenumbers across phases.
SupportReport support_checks(const SegregatedState& state, const std::vector<PhaseSpec>& specs,
                             const std::vector<std::optional<Mask>>& open_sets = {}, const SolverConfig& cfg = {});

} // namespace qdom
