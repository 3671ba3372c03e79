#include "qdom/linsolve.hpp"

#include "qdom/error.hpp"
#include "qdom/pairwise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qdom {

namespace {

struct Stencil {
  const Grid& g;
  double ih2;
  double base_diag;
  const std::vector<double>* q;
  const std::vector<std::uint8_t>& active;
  std::size_t stride[3];

  Stencil(const OperatorSpec& op)
      : g(op.domain.grid), ih2(1.0 / (op.domain.grid.h * op.domain.grid.h)),
        base_diag(2.0 * op.domain.grid.n * ih2 - op.k * op.k), q(op.q ? &op.q->v : nullptr),
        active(op.domain.f) {
    stride[0] = 1;
    stride[1] = (std::size_t)g.cells[0];
    stride[2] = (std::size_t)g.cells[0] * g.cells[1];
  }

  double diag(std::size_t idx) const { return q ? base_diag + (*q)[idx] : base_diag; }

  double neighbours(const std::vector<double>& u, std::size_t idx, int i, int j, int k) const {
    double s = 0.0;
    if (i > 0) s += u[idx - 1];
    if (i < g.cells[0] - 1) s += u[idx + 1];
    if (j > 0) s += u[idx - stride[1]];
    if (j < g.cells[1] - 1) s += u[idx + stride[1]];
    if (g.n == 3) {
      if (k > 0) s += u[idx - stride[2]];
      if (k < g.cells[2] - 1) s += u[idx + stride[2]];
    }
    return s;
  }

  double apply_at(const std::vector<double>& u, std::size_t idx, int i, int j, int k) const {
    return diag(idx) * u[idx] - ih2 * neighbours(u, idx, i, j, k);
  }
};

double dot_active(const std::vector<double>& a, const std::vector<double>& b, const std::vector<std::uint8_t>& act) {
  return pairwise_sum(0, a.size(), [&](std::size_t i) { return act[i] ? a[i] * b[i] : 0.0; });
}

} // namespace

OperatorSpec full_box_operator(const Grid& g, double k) {
  OperatorSpec op;
  op.k = k;
  op.domain = Mask(g, true);
  return op;
}

void validate_operator(const OperatorSpec& op, const SolverConfig& cfg) {
  const Grid& g = op.domain.grid;
  if (g.size() == 0) fail(ErrorCode::Config, "operator domain has no grid");
  if (!(cfg.tol_rel > 0.0)) fail(ErrorCode::Config, "tol_rel must be positive");
  if (!(cfg.relaxation > 0.0 && cfg.relaxation < 2.0)) fail(ErrorCode::Config, "relaxation must lie in (0, 2)");
  if (cfg.check_every < 1) fail(ErrorCode::Config, "check_every must be at least 1");
  if (!(op.k * op.k * g.h * g.h < 2.0 * g.n))
    fail(ErrorCode::Config, "M-matrix guard violated: k^2 h^2 must be below 2n; refine the grid");
  if (op.q) {
    require_same_grid(op.q->grid, g, "operator coefficient");
    Stencil st(op);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (op.domain.f[i] && !(st.diag(i) > 0.0))
        fail(ErrorCode::Config, "operator diagonal must stay positive; refine the grid");
  }
}

ScalarField apply_operator(const OperatorSpec& op, const ScalarField& u) {
  require_same_grid(op.domain.grid, u.grid, "apply_operator");
  Stencil st(op);
  const Grid& g = st.g;
  ScalarField out(g);
  for (int k = 0; k < g.cells[2]; ++k)
    for (int j = 0; j < g.cells[1]; ++j)
      for (int i = 0; i < g.cells[0]; ++i) {
        std::size_t idx = g.index(i, j, k);
        if (st.active[idx]) out.v[idx] = st.apply_at(u.v, idx, i, j, k);
      }
  return out;
}

SolveResult cg_solve(const OperatorSpec& op, const ScalarField& rhs, const ScalarField& boundary,
                     const SolverConfig& cfg) {
  validate_operator(op, cfg);
  const Grid& g = op.domain.grid;
  require_same_grid(g, rhs.grid, "cg_solve rhs");
  require_same_grid(g, boundary.grid, "cg_solve boundary");
  const auto& act = op.domain.f;
  Stencil st(op);

  SolveResult res;
  res.u = boundary;
  std::vector<double>& x = res.u.v;
  std::size_t N = g.size();

  // effective right-hand side: rhs minus the coupling to pinned nodes
  ScalarField pinned = boundary;
  for (std::size_t i = 0; i < N; ++i)
    if (act[i]) pinned.v[i] = 0.0;
  ScalarField ap = apply_operator(op, pinned);
  std::vector<double> beff(N, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    if (act[i]) beff[i] = rhs.v[i] - ap.v[i];
  double bnorm = std::sqrt(dot_active(beff, beff, act));

  ScalarField ax = apply_operator(op, res.u);
  std::vector<double> r(N, 0.0), z(N, 0.0), p(N, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    if (act[i]) r[i] = rhs.v[i] - ax.v[i];
  double rnorm = std::sqrt(dot_active(r, r, act));
  if (bnorm == 0.0) {
    if (rnorm == 0.0) return res;
    bnorm = rnorm;
  }
  if (rnorm <= cfg.tol_rel * bnorm) {
    res.residual = rnorm / bnorm;
    return res;
  }
  for (std::size_t i = 0; i < N; ++i)
    if (act[i]) z[i] = r[i] / st.diag(i);
  p = z;
  double rz = dot_active(r, z, act);
  long cap = cfg.iteration_cap(g);
  std::vector<double> q(N, 0.0);
  for (long it = 1; it <= cap; ++it) {
    for (int kk = 0; kk < g.cells[2]; ++kk)
      for (int j = 0; j < g.cells[1]; ++j)
        for (int i = 0; i < g.cells[0]; ++i) {
          std::size_t idx = g.index(i, j, kk);
          q[idx] = act[idx] ? st.apply_at(p, idx, i, j, kk) : 0.0;
        }
    double pq = dot_active(p, q, act);
    if (!(pq > 0.0))
      fail(ErrorCode::Indefinite,
           "operator is not positive definite on the domain: k is at or above the first Dirichlet eigenvalue");
    double alpha = rz / pq;
    for (std::size_t i = 0; i < N; ++i)
      if (act[i]) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
    rnorm = std::sqrt(dot_active(r, r, act));
    res.iterations = it;
    if (rnorm <= cfg.tol_rel * bnorm) {
      res.residual = rnorm / bnorm;
      return res;
    }
    for (std::size_t i = 0; i < N; ++i)
      if (act[i]) z[i] = r[i] / st.diag(i);
    double rz_new = dot_active(r, z, act);
    double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < N; ++i) p[i] = act[i] ? z[i] + beta * p[i] : 0.0;
  }
  fail(ErrorCode::Indefinite, "CG did not converge in " + std::to_string(cap) +
                                  " iterations; the operator may be indefinite (k near the first Dirichlet eigenvalue)");
}

SolveResult psor_lcp(const OperatorSpec& op, const ScalarField& rhs, const ScalarField* lower,
                     const SolverConfig& cfg, const ScalarField* initial) {
  validate_operator(op, cfg);
  const Grid& g = op.domain.grid;
  require_same_grid(g, rhs.grid, "psor_lcp rhs");
  if (lower) require_same_grid(g, lower->grid, "psor_lcp lower");
  if (initial) require_same_grid(g, initial->grid, "psor_lcp initial");
  const auto& act = op.domain.f;
  Stencil st(op);
  std::size_t N = g.size();

  SolveResult res;
  res.u = initial ? *initial : ScalarField(g);
  std::vector<double>& u = res.u.v;
  auto lo = [&](std::size_t i) { return lower ? lower->v[i] : 0.0; };
  for (std::size_t i = 0; i < N; ++i)
    if (act[i]) u[i] = std::max(u[i], lo(i));

  double scale = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    if (act[i]) scale = std::max(scale, std::fabs(rhs.v[i]));
  if (scale == 0.0) scale = 1.0;
  double omega = cfg.relaxation;

  // With a zero obstacle, nodes that are zero, have nonpositive data and only zero
  // neighbours cannot change; the sweep is restricted to a window around the rest.
  int win_lo[3] = {0, 0, 0}, win_hi[3] = {g.cells[0] - 1, g.cells[1] - 1, g.cells[2] - 1};
  int src_lo[3] = {g.cells[0], g.cells[1], g.cells[2]}, src_hi[3] = {-1, -1, -1};
  bool windowed = lower == nullptr;
  auto grow = [&](int* blo, int* bhi, std::size_t idx) {
    auto c = g.unindex(idx);
    for (int a = 0; a < 3; ++a) {
      blo[a] = std::min(blo[a], c[a]);
      bhi[a] = std::max(bhi[a], c[a]);
    }
  };
  auto set_window = [&](const int* blo, const int* bhi) {
    for (int a = 0; a < 3; ++a) {
      win_lo[a] = std::max(0, std::min(blo[a], src_lo[a]) - 1);
      win_hi[a] = std::min(g.cells[a] - 1, std::max(bhi[a], src_hi[a]) + 1);
    }
  };
  if (windowed) {
    for (std::size_t i = 0; i < N; ++i)
      if (act[i] && rhs.v[i] > 0.0) grow(src_lo, src_hi, i);
    int blo[3] = {g.cells[0], g.cells[1], g.cells[2]}, bhi[3] = {-1, -1, -1};
    for (std::size_t i = 0; i < N; ++i)
      if (u[i] != 0.0) grow(blo, bhi, i);
    set_window(blo, bhi);
  }

  auto natural_residual = [&]() {
    double m = 0.0;
    for (int k = win_lo[2]; k <= win_hi[2]; ++k)
      for (int j = win_lo[1]; j <= win_hi[1]; ++j)
        for (int i = win_lo[0]; i <= win_hi[0]; ++i) {
          std::size_t idx = g.index(i, j, k);
          if (!act[idx]) continue;
          double eq = st.apply_at(u, idx, i, j, k) - rhs.v[idx];
          double nr = std::min(u[idx] - lo(idx), eq);
          m = std::max(m, std::fabs(nr));
        }
    return m / scale;
  };

  long cap = cfg.iteration_cap(g);
  double r = natural_residual();
  if (r <= cfg.tol_rel) {
    res.residual = r;
    return res;
  }
  for (long sweep = 1; sweep <= cap; ++sweep) {
    int blo[3] = {g.cells[0], g.cells[1], g.cells[2]}, bhi[3] = {-1, -1, -1};
    auto visit = [&](int i, int j, int k) {
      std::size_t idx = g.index(i, j, k);
      if (act[idx]) {
        double d = st.diag(idx);
        double gs = (rhs.v[idx] + st.ih2 * st.neighbours(u, idx, i, j, k)) / d;
        double cand = (1.0 - omega) * u[idx] + omega * gs;
        u[idx] = std::max(lo(idx), cand);
      }
      if (windowed && u[idx] != 0.0) {
        blo[0] = std::min(blo[0], i); bhi[0] = std::max(bhi[0], i);
        blo[1] = std::min(blo[1], j); bhi[1] = std::max(bhi[1], j);
        blo[2] = std::min(blo[2], k); bhi[2] = std::max(bhi[2], k);
      }
    };
    if (!cfg.reverse_order) {
      for (int k = win_lo[2]; k <= win_hi[2]; ++k)
        for (int j = win_lo[1]; j <= win_hi[1]; ++j)
          for (int i = win_lo[0]; i <= win_hi[0]; ++i) visit(i, j, k);
    } else {
      for (int k = win_hi[2]; k >= win_lo[2]; --k)
        for (int j = win_hi[1]; j >= win_lo[1]; --j)
          for (int i = win_hi[0]; i >= win_lo[0]; --i) visit(i, j, k);
    }
    if (windowed) set_window(blo, bhi);
    res.iterations = sweep;
    if (sweep % cfg.check_every == 0 || sweep == cap) {
      r = natural_residual();
      if (r <= cfg.tol_rel) {
        res.residual = r;
        return res;
      }
    }
  }
  fail(ErrorCode::SolverFailure, "PSOR did not reach tolerance in " + std::to_string(cap) +
                                     " sweeps (residual " + std::to_string(r) + ")");
}

EigenResult min_eigenvalue(const Mask& domain, const SolverConfig& cfg) {
  const Grid& g = domain.grid;
  if (domain.empty()) fail(ErrorCode::Domain, "min_eigenvalue: empty domain");
  OperatorSpec op;
  op.k = 0.0;
  op.domain = domain;
  SolverConfig inner = cfg;
  inner.tol_rel = std::min(cfg.tol_rel, 1e-10);

  auto normalise = [&](ScalarField& f) {
    double s = std::sqrt(integrate_product(f, f));
    for (auto& x : f.v) x /= s;
  };
  ScalarField x(g);
  for (std::size_t i = 0; i < g.size(); ++i) x.v[i] = domain.f[i] ? 1.0 : 0.0;
  normalise(x);
  EigenResult er;
  double lam_old = 0.0;
  for (int it = 1; it <= 200; ++it) {
    ScalarField guess(g);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (domain.f[i]) guess.v[i] = lam_old > 0.0 ? x.v[i] / lam_old : 0.0;
    // pinned nodes are zero; the guess only seeds active nodes
    SolveResult sr = cg_solve(op, x, guess, inner);
    ScalarField y = sr.u;
    double yy = integrate_product(y, y);
    double xy = integrate_product(x, y);
    double lam = xy / yy;  // Rayleigh quotient of A at y, since A y = x
    normalise(y);
    x = y;
    er.iterations = it;
    if (lam_old > 0.0 && std::fabs(lam - lam_old) <= 1e-11 * lam) {
      lam_old = lam;
      break;
    }
    lam_old = lam;
  }
  double sum = 0.0;
  for (double v : x.v) sum += v;
  if (sum < 0.0)
    for (auto& v : x.v) v = -v;
  er.lambda = lam_old;
  er.k_star = std::sqrt(lam_old);
  er.field = x;
  return er;
}

} // namespace qdom
