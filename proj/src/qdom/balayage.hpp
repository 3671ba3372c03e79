#pragma once

#include "qdom/grid.hpp"
#include "qdom/linsolve.hpp"

#include <string>

namespace qdom {

/// Direct-summation potential U(x) = sum_y Psi_k(x - y) density(y) h^n. Lattice
/// offsets are tabulated by squared integer distance; the self cell uses the
/// average of Psi_k over the disk/ball of equal volume.
ScalarField potential(const GridMeasure& mu, double k);

enum class CapacityStatus { Strict, Weak, Violated };
const char* capacity_status_name(CapacityStatus s);

/// Compares the total mass with c_k(R_k) (absolute tolerance 1e-12).
CapacityStatus capacity_guard(double total_mass, int n, double k);

struct BalayageOptions {
  const ScalarField* potential = nullptr;  // reuse a precomputed U
  const ScalarField* initial = nullptr;    // warm start for W
  bool check_margin = true;
};

struct BalayageResult {
  ScalarField U;
  ScalarField V;
  ScalarField W;
  Mask omega;
  ScalarField bal_density;
  double boundary_excess = 0.0;
  Mask domain;
  double tol_phase = 0.0;
  long sweeps = 0;
  CapacityStatus capacity = CapacityStatus::Strict;
};

/// Discrete partial balayage of mu onto density 1 inside D (the whole box when D is null).
BalayageResult partial_balayage(const GridMeasure& mu, double k, const Mask* D = nullptr,
                                const SolverConfig& cfg = {}, const BalayageOptions& opt = {});

/// tol_phase = max(1e-8, 10 tol ||U||_inf).
double phase_tolerance(const SolverConfig& cfg, double scale);

/// Throws ErrorCode::BoxTooSmall if f exceeds tol on the `cells`-wide box margin.
void require_margin(const ScalarField& f, double tol, int cells, const char* what);

/// Throws ErrorCode::Hypothesis unless k^2 is below the first Dirichlet eigenvalue of the box.
void require_below_box_eigenvalue(const Grid& g, double k);

struct StructureReport {
  double max_dev_inside = 0.0;   // max |bal - 1| on omega
  double max_dev_outside = 0.0;  // max |bal - mu| away from omega and from the boundary of D
  double min_remainder = 0.0;    // min (bal - mu) off omega
  bool excess_localized = true;  // positive excess outside D lies within 3 cells of its boundary
  bool passed = false;
};

StructureReport structure_check(const BalayageResult& r, const GridMeasure& mu);

/// Radius of the disk/ball with the same volume as the mask.
double equivalent_radius(const Mask& m);

/// Grows the box by doubling its extent about the centre (h fixed) until omega keeps a
/// 4-cell margin. Throws ErrorCode::Hypothesis if k reaches the box eigenvalue first.
struct AdaptiveBalayage {
  Grid grid;
  GridMeasure mu;
  BalayageResult result;
  int doublings = 0;
};
AdaptiveBalayage partial_balayage_adaptive(const Grid& start, const std::vector<Atom>& atoms, double radius, double k,
                                           const SolverConfig& cfg = {}, int max_doublings = 4);

} // namespace qdom
