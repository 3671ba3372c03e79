#include "qdom/multiphase.hpp"

#include "qdom/balayage.hpp"
#include "qdom/error.hpp"
#include "qdom/pairwise.hpp"

#include <algorithm>
#include <cmath>

namespace qdom {

namespace {

void validate_spec(const PhaseSpec& s, const Grid& g) {
  if (!(s.k >= 0.0) || !std::isfinite(s.k)) fail(ErrorCode::Config, "phase '" + s.label + "': k must be >= 0");
  if (s.lambda_field) {
    require_same_grid(g, s.lambda_field->grid, "phase lambda");
    double lo = *std::min_element(s.lambda_field->v.begin(), s.lambda_field->v.end());
    if (!(lo > 0.0)) fail(ErrorCode::Config, "phase '" + s.label + "': lambda field must be bounded below by c > 0");
  } else if (!(s.lambda > 0.0)) {
    fail(ErrorCode::Config, "phase '" + s.label + "': lambda must be > 0");
  }
  require_below_box_eigenvalue(g, s.k);
}

void project_largest(std::vector<ScalarField>& u) {
  std::size_t N = u[0].size();
  for (std::size_t p = 0; p < N; ++p) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < u.size(); ++i)
      if (u[i].v[p] > u[best].v[p]) best = i;
    for (std::size_t i = 0; i < u.size(); ++i)
      if (i != best) u[i].v[p] = 0.0;
  }
}

} // namespace

ScalarField PhaseSpec::forcing() const {
  ScalarField f = mu.density;
  for (std::size_t i = 0; i < f.size(); ++i) f.v[i] -= lambda_field ? lambda_field->v[i] : lambda;
  return f;
}

double energy(const ScalarField& u, const PhaseSpec& spec) {
  ScalarField f = spec.forcing();
  require_same_grid(u.grid, f.grid, "energy");
  double k2 = spec.k * spec.k;
  double pot = pairwise_sum(0, u.size(), [&](std::size_t i) { return -k2 * u.v[i] * u.v[i] - 2.0 * f.v[i] * u.v[i]; });
  return gradient_norm2(u) + pot * u.grid.cell_volume();
}

double energy(const std::vector<ScalarField>& fields, const std::vector<PhaseSpec>& specs) {
  if (fields.size() != specs.size()) fail(ErrorCode::Config, "energy: field and phase counts differ");
  double e = 0.0;
  for (std::size_t i = 0; i < fields.size(); ++i) e += energy(fields[i], specs[i]);
  return e;
}

ScalarField minimize_one_phase(const PhaseSpec& spec, const SolverConfig& cfg) {
  const Grid& g = spec.mu.density.grid;
  validate_spec(spec, g);
  return psor_lcp(full_box_operator(g, spec.k), spec.forcing(), nullptr, cfg).u;
}

SegregatedState minimize_segregated(const std::vector<PhaseSpec>& specs, const SolverConfig& cfg, int max_sweeps) {
  if (specs.empty()) fail(ErrorCode::Config, "minimize_segregated: no phases");
  if (specs.size() > 6) fail(ErrorCode::Config, "minimize_segregated: at most 6 phases");
  const Grid& g = specs[0].mu.density.grid;
  for (const auto& s : specs) {
    require_same_grid(g, s.mu.density.grid, "minimize_segregated");
    validate_spec(s, g);
  }
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (std::size_t j = i + 1; j < specs.size(); ++j)
      if (!mask_and(support(specs[i].mu.density), support(specs[j].mu.density)).empty())
        fail(ErrorCode::Hypothesis, "supports of phases '" + specs[i].label + "' and '" + specs[j].label + "' overlap");

  SegregatedState st;
  if (specs.size() == 1) {
    st.path = "one-phase";
    st.fields.push_back(minimize_one_phase(specs[0], cfg));
    st.tol_phase = phase_tolerance(cfg, st.fields[0].max_abs());
    st.converged = true;
  } else if (specs.size() == 2) {
    st.path = "scalar two-phase";
    TwoPhaseResult r =
        minimize_scalar_two_phase(specs[0].k, specs[1].k, specs[0].forcing(), specs[1].forcing(), cfg, max_sweeps);
    ScalarField up(g), um(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      up.v[i] = std::max(r.u.v[i], 0.0);
      um.v[i] = std::max(-r.u.v[i], 0.0);
    }
    st.fields = {up, um};
    st.tol_phase = r.tol_phase;
    st.sweeps = r.diagnostics.iterations;
    st.converged = r.diagnostics.converged;
  } else {
    st.path = "gauss-seidel";
    std::vector<ScalarField> f;
    for (const auto& s : specs) {
      f.push_back(s.forcing());
      st.fields.push_back(minimize_one_phase(s, cfg));
    }
    double scale = 0.0;
    for (const auto& u : st.fields) scale = std::max(scale, u.max_abs());
    st.tol_phase = phase_tolerance(cfg, scale);
    project_largest(st.fields);
    double E = energy(st.fields, specs);
    st.energy_history.push_back(E);
    std::vector<Mask> masks;
    for (const auto& u : st.fields) masks.push_back(threshold(u, st.tol_phase));
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
      for (std::size_t i = 0; i < specs.size(); ++i) {
        Mask others(g);
        for (std::size_t j = 0; j < specs.size(); ++j)
          if (j != i) others = mask_or(others, threshold(st.fields[j], st.tol_phase));
        OperatorSpec op = full_box_operator(g, specs[i].k);
        op.domain = complement(others);
        ScalarField init = st.fields[i];
        for (std::size_t p = 0; p < g.size(); ++p)
          if (others.f[p]) init.v[p] = 0.0;
        st.fields[i] = psor_lcp(op, f[i], nullptr, cfg, &init).u;
        project_largest(st.fields);
      }
      double En = energy(st.fields, specs);
      if (En > E + 1e-9 * std::max(1.0, std::fabs(E))) st.energy_monotone = false;
      st.energy_history.push_back(En);
      std::vector<Mask> nm;
      for (const auto& u : st.fields) nm.push_back(threshold(u, st.tol_phase));
      bool same = true;
      for (std::size_t i = 0; i < nm.size(); ++i) same = same && count_xor(nm[i], masks[i]) == 0;
      double drop = E - En;
      masks = std::move(nm);
      E = En;
      st.sweeps = sweep;
      if (same && std::fabs(drop) < 1e-10 * std::max(std::fabs(E), 1e-300)) {
        st.converged = true;
        break;
      }
    }
  }
  for (const auto& u : st.fields) st.masks.push_back(threshold(u, st.tol_phase));
  st.energy = energy(st.fields, specs);
  if (st.energy_history.empty()) st.energy_history.push_back(st.energy);
  for (const auto& u : st.fields) require_margin(u, st.tol_phase, 2, "segregated state");
  return st;
}

ResidualReport local_pde_residual(const SegregatedState& state, const std::vector<PhaseSpec>& specs, std::size_t i,
                                  std::size_t j) {
  if (i >= specs.size() || j >= specs.size() || state.fields.size() != specs.size())
    fail(ErrorCode::Config, "local_pde_residual: phase index out of range");
  const Grid& g = state.fields[i].grid;
  ResidualReport r;
  r.field = ScalarField(g);
  if (i == j) return r;
  ScalarField d(g);
  for (std::size_t p = 0; p < g.size(); ++p) d.v[p] = state.fields[i].v[p] - state.fields[j].v[p];
  ScalarField lap = helmholtz_apply(d, 0.0);
  ScalarField fi = specs[i].forcing(), fj = specs[j].forcing();
  Mask others(g);
  for (std::size_t l = 0; l < specs.size(); ++l)
    if (l != i && l != j) others = mask_or(others, state.masks[l]);
  Mask region = complement(mask_or(dilate(others, 2), box_margin(g, 2)));
  Mask collar = mask_or(boundary_collar(state.masks[i], 2), boundary_collar(state.masks[j], 2));
  double ki2 = specs[i].k * specs[i].k, kj2 = specs[j].k * specs[j].k;
  for (std::size_t p = 0; p < g.size(); ++p) {
    if (!region.f[p]) continue;
    double v = lap.v[p] + ki2 * state.fields[i].v[p] - kj2 * state.fields[j].v[p];
    if (state.masks[i].f[p]) v += fi.v[p];
    if (state.masks[j].f[p]) v -= fj.v[p];
    r.field.v[p] = v;
    if (!collar.f[p]) r.max = std::max(r.max, std::fabs(v));
  }
  return r;
}

SupportReport support_checks(const SegregatedState& state, const std::vector<PhaseSpec>& specs,
                             const std::vector<std::optional<Mask>>& open_sets, const SolverConfig& cfg) {
  if (state.fields.size() != specs.size()) fail(ErrorCode::Config, "support_checks: field and phase counts differ");
  for (const auto& s : specs)
    if (s.k != specs[0].k) fail(ErrorCode::Hypothesis, "support checks require equal wavenumbers across phases");
  SupportReport rep;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    PhaseSupportEntry e;
    e.label = specs[i].label;
    ScalarField v = minimize_one_phase(specs[i], cfg);
    Mask vpos = dilate(threshold(v, state.tol_phase), 1);
    e.outside_one_phase = mask_minus(state.masks[i], vpos).count();
    for (std::size_t p = 0; p < v.size(); ++p) e.max_excess = std::max(e.max_excess, state.fields[i].v[p] - v.v[p]);
    if (i < open_sets.size() && open_sets[i]) {
      const Mask& U = *open_sets[i];
      ScalarField f = specs[i].forcing();
      bool met = !U.empty();
      for (std::size_t p = 0; p < U.f.size(); ++p)
        if (U.f[p] && !(f.v[p] > 0.0)) met = false;
      e.hypothesis_met = met;
      if (met) e.outside_support = mask_minus(U, dilate(state.masks[i], 1)).count();
    }
    double tol = std::max(10.0 * state.tol_phase, 1e-7 * std::max(1.0, v.max_abs()));
    bool ok = e.outside_one_phase == 0 && e.max_excess <= tol && e.outside_support == 0;
    rep.passed = rep.passed && ok;
    rep.phases.push_back(e);
  }
  return rep;
}

} // namespace qdom
