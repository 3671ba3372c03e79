#include "qdom/verify.hpp"

#include "qdom/error.hpp"
#include "qdom/pairwise.hpp"
#include "qdom/specfun.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qdom {

namespace {

const double pi = std::numbers::pi;

double dot(const Point& a, const Point& b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

double dist(const Point& a, const Point& b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

std::vector<Point> directions(int n, int count) {
  std::vector<Point> d;
  if (n == 2) {
    for (int j = 0; j < count; ++j) {
      double a = 2.0 * pi * j / count;
      d.push_back({std::cos(a), std::sin(a), 0.0});
    }
  } else {
    double golden = pi * (3.0 - std::sqrt(5.0));
    for (int j = 0; j < count; ++j) {
      double z = 1.0 - (2.0 * j + 1.0) / count;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      d.push_back({r * std::cos(golden * j), r * std::sin(golden * j), z});
    }
  }
  return d;
}

double max_abs_over(const ScalarField& f, const Mask& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (m.f[i]) s = std::max(s, std::fabs(f.v[i]));
  return s;
}

double pairing_analytic(const GridMeasure& mu, const FamilyMember& w, double k, int n) {
  double s = 0.0;
  double factor = ball_capacity(n, k, mu.radius) / ball_volume(n, mu.radius);
  for (const auto& a : mu.atoms) s += a.mass * w.evaluate(k, n, a.point) * factor;
  return s;
}

} // namespace

double FamilyMember::evaluate(double k, int n, const Point& x) const {
  switch (kind) {
  case MemberKind::PlaneCos: return std::cos(k * dot(x, direction, n));
  case MemberKind::PlaneSin: return std::sin(k * dot(x, direction, n));
  case MemberKind::Radial: return radial_helmholtz(n, k, dist(x, center, n));
  case MemberKind::Sampled: break;
  }
  fail(ErrorCode::Config, "sampled test member " + descriptor + " has no analytic evaluator");
}

TestFamily helmholtz_test_family(const Grid& g, double k, int n_dirs, const std::vector<Point>& centers) {
  if (!(k > 0.0)) fail(ErrorCode::Config, "test family requires k > 0");
  if (n_dirs < 1) fail(ErrorCode::Config, "test family requires at least one direction");
  TestFamily fam;
  fam.k = k;
  fam.n = g.n;
  auto add = [&](FamilyMember m) {
    m.field = ScalarField(g);
    for (std::size_t i = 0; i < g.size(); ++i) m.field.v[i] = m.evaluate(k, g.n, g.node(i));
    ScalarField r = helmholtz_apply(m.field, k);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.cells_to_edge(i) > 1) m.gate_residual = std::max(m.gate_residual, std::fabs(r.v[i]));
    double bound = 0.1 * std::pow(k, 4) * g.h * g.h * std::max(m.field.max_abs(), 1e-300);
    if (m.gate_residual > bound)
      fail(ErrorCode::Resolution, "test member " + m.descriptor + " fails the discrete Helmholtz gate");
    fam.members.push_back(std::move(m));
  };
  for (const Point& d : directions(g.n, n_dirs)) {
    std::string dir = "(" + std::to_string(d[0]) + "," + std::to_string(d[1]) + (g.n == 3 ? "," + std::to_string(d[2]) : "") + ")";
    add(FamilyMember{MemberKind::PlaneCos, d, {}, "cos" + dir, {}, 0.0});
    add(FamilyMember{MemberKind::PlaneSin, d, {}, "sin" + dir, {}, 0.0});
  }
  for (const Point& c : centers) {
    std::string at = "(" + std::to_string(c[0]) + "," + std::to_string(c[1]) + (g.n == 3 ? "," + std::to_string(c[2]) : "") + ")";
    add(FamilyMember{MemberKind::Radial, {}, c, "radial" + at, {}, 0.0});
  }
  return fam;
}

void set_verification_ball(TestFamily& fam, const std::vector<const Mask*>& masks) {
  Point c{};
  std::size_t cnt = 0;
  for (const Mask* m : masks)
    for (std::size_t i = 0; i < m->f.size(); ++i)
      if (m->f[i]) {
        Point p = m->grid.node(i);
        for (int a = 0; a < 3; ++a) c[a] += p[a];
        ++cnt;
      }
  if (cnt == 0) return;
  for (auto& x : c) x /= (double)cnt;
  double r = 0.0;
  for (const Mask* m : masks)
    for (std::size_t i = 0; i < m->f.size(); ++i)
      if (m->f[i]) r = std::max(r, dist(m->grid.node(i), c, m->grid.n) + 0.5 * std::sqrt((double)m->grid.n) * m->grid.h);
  fam.ball_center = c;
  fam.ball_radius = 1.1 * r;
}

QuadratureReport quadrature_residual(const Mask& D_plus, const Mask* D_minus, const GridMeasure& mu_plus,
                                     const GridMeasure* mu_minus, const TestFamily& fam) {
  const Grid& g = D_plus.grid;
  require_same_grid(g, mu_plus.density.grid, "quadrature_residual");
  Mask none(g);
  const Mask& Dm = D_minus ? *D_minus : none;
  require_same_grid(g, Dm.grid, "quadrature_residual");
  Mask uni = mask_or(D_plus, Dm);
  QuadratureReport rep;
  rep.scale = uni.volume();
  Mask where = mask_or(uni, support(mu_plus.density));
  if (mu_minus) where = mask_or(where, support(mu_minus->density));
  for (const auto& m : fam.members) {
    require_same_grid(g, m.field.grid, "quadrature_residual");
    MemberResidual r;
    r.descriptor = m.descriptor;
    r.domain_integral = integrate(m.field, &D_plus) - integrate(m.field, &Dm);
    r.pairing_density = integrate_product(mu_plus.density, m.field);
    if (mu_minus) r.pairing_density -= integrate_product(mu_minus->density, m.field);
    auto from_atoms = [](const GridMeasure& mu) { return mu.total_mass == 0.0 || !mu.atoms.empty(); };
    r.analytic_pairing = m.kind != MemberKind::Sampled && from_atoms(mu_plus) && (!mu_minus || from_atoms(*mu_minus)) &&
                         (!mu_plus.atoms.empty() || (mu_minus && !mu_minus->atoms.empty()));
    if (r.analytic_pairing) {
      r.pairing = pairing_analytic(mu_plus, m, fam.k, g.n);
      if (mu_minus) r.pairing -= pairing_analytic(*mu_minus, m, fam.k, g.n);
    } else {
      r.pairing = r.pairing_density;
    }
    r.residual = r.domain_integral - r.pairing;
    double wmax = max_abs_over(m.field, where);
    double denom = wmax * rep.scale;
    r.normalized = denom > 0.0 ? std::fabs(r.residual) / denom : std::fabs(r.residual);
    rep.max_normalized = std::max(rep.max_normalized, r.normalized);
    rep.members.push_back(r);
  }
  return rep;
}

NullProfile null_qd_profile(const Grid& g, double k, int m) {
  if (!(k > 0.0)) fail(ErrorCode::Config, "null profile requires k > 0");
  if (m < 1) fail(ErrorCode::Config, "null profile requires m >= 1");
  NullProfile p;
  p.radius = bessel_zero(BesselOrder::capacity(g.n), m) / k;
  p.volume = ball_volume(g.n, p.radius);
  for (int a = 0; a < g.n; ++a) {
    double lo = g.origin[a], hi = g.origin[a] + g.extent[a];
    if (-p.radius - 2 * g.h < lo || p.radius + 2 * g.h > hi)
      fail(ErrorCode::BoxTooSmall, "box does not contain the null-QD ball of radius " + std::to_string(p.radius));
  }
  double edge = radial_helmholtz(g.n, k, p.radius);
  p.u = ScalarField(g);
  p.domain = Mask(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    double r = dist(g.node(i), Point{}, g.n);
    if (r < p.radius) {
      p.u.v[i] = (edge - radial_helmholtz(g.n, k, r)) / (k * k * edge);
      p.domain.f[i] = 1;
    }
  }
  return p;
}

PompeiuReport pompeiu_identities(const ScalarField& u, const Mask& D, double k, std::optional<double> exact_volume) {
  const Grid& g = u.grid;
  require_same_grid(g, D.grid, "pompeiu_identities");
  if (!(k > 0.0)) fail(ErrorCode::Config, "pompeiu identities require k > 0");
  double umax = u.max_abs();
  Mask collar = mask_and(boundary_collar(D, 1), complement(D));
  double edge = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (collar.f[i] || !D.f[i]) edge = std::max(edge, std::fabs(u.v[i]));
  if (umax == 0.0 || edge > 0.02 * umax)
    fail(ErrorCode::Hypothesis, "pompeiu identities: field does not vanish on the boundary of D");
  PompeiuReport r;
  r.volume = exact_volume ? *exact_volume : D.volume();
  double k2 = k * k;
  r.grad_norm2 = gradient_norm2(u);
  r.grad_target = g.n / (2.0 * k2) * r.volume;
  r.l2_term = k2 * integrate_product(u, u, &D);
  r.l2_target = (g.n + 2.0) / (2.0 * k2) * r.volume;
  r.integral = integrate(u, &D);
  r.integral_target = r.volume / k2;
  r.max_rel_error = std::max({std::fabs(r.grad_norm2 / r.grad_target - 1.0), std::fabs(r.l2_term / r.l2_target - 1.0),
                              std::fabs(r.integral / r.integral_target - 1.0)});
  r.holds = r.max_rel_error <= 0.02;
  return r;
}

double saddle_functional(const ScalarField& U, double k) {
  double rest = pairwise_sum(0, U.size(), [&](std::size_t i) { return -k * k * U.v[i] * U.v[i] + 2.0 * U.v[i]; });
  return gradient_norm2(U) + rest * U.grid.cell_volume();
}

SaddleScan saddle_scan(const ScalarField& u, const Mask& D, double k, const std::vector<double>& t_values,
                       std::optional<double> exact_volume) {
  require_same_grid(u.grid, D.grid, "saddle_scan");
  SaddleScan s;
  double peak = (exact_volume ? *exact_volume : D.volume()) / (k * k);
  double best = -1e300;
  for (double t : t_values) {
    ScalarField tu = u;
    for (auto& x : tu.v) x *= t;
    double val = saddle_functional(tu, k);
    double target = (-t * t + 2.0 * t) * peak;
    s.t.push_back(t);
    s.value.push_back(val);
    s.target.push_back(target);
    s.max_rel_dev = std::max(s.max_rel_dev, std::fabs(val - target) / peak);
    if (val > best) {
      best = val;
      s.argmax_t = t;
    }
  }
  s.peak_at_one = !t_values.empty() && s.argmax_t == 1.0;
  return s;
}

SaddleDirection saddle_direction(const ScalarField& u, double k) {
  const Grid& g = u.grid;
  SaddleDirection d;
  auto lam1 = [&](int a, int p) {
    double s = std::sin(pi * p / (2.0 * (g.cells[a] + 1)));
    return 4.0 / (g.h * g.h) * s * s;
  };
  double best = 1e300;
  int top = 64;
  std::array<int, 3> p{1, 1, 1};
  for (p[0] = 1; p[0] <= std::min(top, g.cells[0]); ++p[0])
    for (p[1] = 1; p[1] <= std::min(top, g.cells[1]); ++p[1])
      for (p[2] = 1; p[2] <= (g.n == 3 ? std::min(top, g.cells[2]) : 1); ++p[2]) {
        double lam = 0.0;
        for (int a = 0; a < g.n; ++a) lam += lam1(a, p[a]);
        if (lam > k * k && lam < best) {
          best = lam;
          d.mode = p;
        }
      }
  if (best == 1e300) fail(ErrorCode::Resolution, "no box mode with eigenvalue above k^2");
  d.k0 = std::sqrt(best);
  ScalarField phi(g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto c = g.unindex(i);
    double v = 1.0;
    for (int a = 0; a < g.n; ++a) v *= std::sin(pi * d.mode[a] * (c[a] + 1.0) / (g.cells[a] + 1.0));
    phi.v[i] = v;
  }
  double nrm = std::sqrt(integrate_product(phi, phi));
  for (auto& x : phi.v) x /= nrm;
  d.linear_coeff = (best - k * k) * integrate_product(u, phi) + integrate(phi);
  double base = saddle_functional(u, k);
  double scale = std::max(u.max_abs(), 1.0) * std::sqrt(std::max(u.grid.cell_volume() * (double)g.size(), 1e-300));
  bool pos_ok = true, neg_ok = true, any_neg = false;
  for (double s : {-1.0, -0.1, -0.01, -0.001, 0.001, 0.01, 0.1, 1.0}) {
    double t = s * scale;
    ScalarField w = u;
    for (std::size_t i = 0; i < g.size(); ++i) w.v[i] += t * phi.v[i];
    double inc = saddle_functional(w, k) - base;
    d.t.push_back(t);
    d.increment.push_back(inc);
    double slack = 1e-9 * std::max(1.0, std::fabs(base));
    if (t > 0 && inc < -slack) pos_ok = false;
    if (t < 0 && inc < -slack) neg_ok = false;
    if (inc < -slack) any_neg = true;
  }
  d.one_sided = d.linear_coeff >= 0.0 ? pos_ok : neg_ok;
  d.sign_change = any_neg && (pos_ok || neg_ok);
  return d;
}

} // namespace qdom
