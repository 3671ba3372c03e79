#include "qdom/pipeline.hpp"

#include "qdom/balayage.hpp"
#include "qdom/error.hpp"
#include "qdom/field_io.hpp"
#include "qdom/multiphase.hpp"
#include "qdom/scatter.hpp"
#include "qdom/specfun.hpp"
#include "qdom/twophase.hpp"
#include "qdom/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace qdom {

namespace fs = std::filesystem;

const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names = {"balayage", "one-phase", "two-phase", "multi-phase",
                                                 "verify-null", "pompeiu", "scatter", "permittivity"};
  return names;
}

namespace {

// ---------------------------------------------------------------- schema helpers

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void allow_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) throw SchemaError(join(path, it.key()), "unknown key");
  }
}

const Json& need(const Json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(join(path, key), "missing");
  return *it;
}

double as_number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) throw SchemaError(path, "expected a finite number");
  return x;
}

long as_integer(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected an integer");
  return v.get<long>();
}

bool as_bool(const Json& v, const std::string& path) {
  if (!v.is_boolean()) throw SchemaError(path, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& path) {
  if (!v.is_string()) throw SchemaError(path, "expected a string");
  return v.get<std::string>();
}

double number_or(const Json& obj, const char* key, const std::string& path, double fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_number(*it, join(path, key));
}

Point as_point(const Json& v, int n, const std::string& path) {
  if (!v.is_array() || (int)v.size() != n) throw SchemaError(path, "expected an array of " + std::to_string(n) + " numbers");
  Point p{0, 0, 0};
  for (int a = 0; a < n; ++a) p[a] = as_number(v[a], at(path, a));
  return p;
}

Grid parse_grid(const Json& j) {
  const std::string path = "grid";
  allow_keys(j, path, {"n", "origin", "extent", "cells"});
  long n = as_integer(need(j, "n", path), "grid.n");
  if (n != 2 && n != 3) throw SchemaError("grid.n", "must be 2 or 3");
  Point origin = as_point(need(j, "origin", path), (int)n, "grid.origin");
  Point extent = as_point(need(j, "extent", path), (int)n, "grid.extent");
  const Json& c = need(j, "cells", path);
  if (!c.is_array() || (long)c.size() != n) throw SchemaError("grid.cells", "expected an array of n integers");
  std::array<int, 3> cells{1, 1, 1};
  for (long a = 0; a < n; ++a) {
    long v = as_integer(c[a], at("grid.cells", a));
    if (v < 1 || v > 100000) throw SchemaError(at("grid.cells", a), "out of range");
    cells[a] = (int)v;
  }
  try {
    return make_grid((int)n, origin, extent, cells);
  } catch (const Error& e) {
    throw SchemaError("grid", e.what());
  }
}

PhaseConfig parse_phase(const Json& j, const Grid& g, const std::string& path, std::size_t idx) {
  allow_keys(j, path, {"k", "lambda", "atoms", "mollify_radius", "label"});
  PhaseConfig p;
  p.k = as_number(need(j, "k", path), join(path, "k"));
  if (p.k <= 0) throw SchemaError(join(path, "k"), "must be positive");
  p.lambda = number_or(j, "lambda", path, 1.0);
  if (p.lambda <= 0) throw SchemaError(join(path, "lambda"), "must be positive");
  p.mollify_radius = number_or(j, "mollify_radius", path, 0.0);
  if (p.mollify_radius < 0) throw SchemaError(join(path, "mollify_radius"), "must be nonnegative");
  p.label = j.contains("label") ? as_string(j["label"], join(path, "label")) : "phase" + std::to_string(idx);
  if (auto it = j.find("atoms"); it != j.end()) {
    std::string ap = join(path, "atoms");
    if (!it->is_array()) throw SchemaError(ap, "expected an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      const Json& a = (*it)[i];
      std::string p_i = at(ap, i);
      allow_keys(a, p_i, {"point", "mass"});
      Atom atom;
      atom.point = as_point(need(a, "point", p_i), g.n, join(p_i, "point"));
      atom.mass = as_number(need(a, "mass", p_i), join(p_i, "mass"));
      if (atom.mass <= 0) throw SchemaError(join(p_i, "mass"), "must be positive");
      for (int d = 0; d < g.n; ++d)
        if (atom.point[d] <= g.origin[d] || atom.point[d] >= g.origin[d] + g.extent[d])
          throw SchemaError(join(p_i, "point"), "outside the grid box");
      p.atoms.push_back(atom);
    }
  }
  return p;
}

SolverConfig parse_solver(const Json& j, int& max_sweeps) {
  const std::string path = "solver";
  allow_keys(j, path, {"tol_rel", "max_iter", "relaxation", "check_every", "max_sweeps"});
  SolverConfig s;
  s.tol_rel = number_or(j, "tol_rel", path, s.tol_rel);
  if (!(s.tol_rel > 0 && s.tol_rel < 1)) throw SchemaError("solver.tol_rel", "must lie in (0, 1)");
  if (j.contains("max_iter")) {
    s.max_iter = as_integer(j["max_iter"], "solver.max_iter");
    if (s.max_iter < 0) throw SchemaError("solver.max_iter", "must be nonnegative");
  }
  s.relaxation = number_or(j, "relaxation", path, s.relaxation);
  if (!(s.relaxation > 0 && s.relaxation < 2)) throw SchemaError("solver.relaxation", "must lie in (0, 2)");
  if (j.contains("check_every")) {
    long c = as_integer(j["check_every"], "solver.check_every");
    if (c < 1 || c > 1000) throw SchemaError("solver.check_every", "out of range");
    s.check_every = (int)c;
  }
  if (j.contains("max_sweeps")) {
    long m = as_integer(j["max_sweeps"], "solver.max_sweeps");
    if (m < 1 || m > 100000) throw SchemaError("solver.max_sweeps", "out of range");
    max_sweeps = (int)m;
  }
  return s;
}

OutputConfig parse_output(const Json& j) {
  const std::string path = "output";
  allow_keys(j, path, {"directory", "formats", "heatmap"});
  OutputConfig o;
  if (j.contains("directory")) o.directory = as_string(j["directory"], "output.directory");
  if (j.contains("formats")) {
    const Json& f = j["formats"];
    if (!f.is_array()) throw SchemaError("output.formats", "expected an array");
    o.csv = o.raster = false;
    for (std::size_t i = 0; i < f.size(); ++i) {
      std::string s = as_string(f[i], at("output.formats", i));
      if (s == "csv") o.csv = true;
      else if (s == "raster") o.raster = true;
      else throw SchemaError(at("output.formats", i), "expected \"csv\" or \"raster\"");
    }
  }
  if (j.contains("heatmap")) o.heatmap = as_bool(j["heatmap"], "output.heatmap");
  return o;
}

void check_options(const RunConfig& c) {
  const Json& o = c.options;
  const std::string& t = c.task;
  if (t == "balayage" || t == "multi-phase") allow_keys(o, "options", {});
  else if (t == "one-phase") allow_keys(o, "options", {"radius_tolerance"});
  else if (t == "two-phase") allow_keys(o, "options", {"method", "max_iterations", "concentration_constant"});
  else if (t == "verify-null") allow_keys(o, "options", {"m", "directions", "centers"});
  else if (t == "pompeiu") allow_keys(o, "options", {"m", "t_values"});
  else if (t == "scatter") allow_keys(o, "options", {"method", "max_iterations", "concentration_constant", "incident"});
  else if (t == "permittivity") allow_keys(o, "options", {"method", "max_iterations", "concentration_constant", "incident", "radius"});

  if (o.contains("method")) {
    std::string m = as_string(o["method"], "options.method");
    std::set<std::string> ok = {"auto", "minimization", "balayage"};
    if (t == "two-phase") ok.insert("both");
    if (!ok.count(m)) throw SchemaError("options.method", "unknown method \"" + m + "\"");
  }
  if (o.contains("max_iterations") && as_integer(o["max_iterations"], "options.max_iterations") < 1)
    throw SchemaError("options.max_iterations", "must be positive");
  if (o.contains("concentration_constant") &&
      !(as_number(o["concentration_constant"], "options.concentration_constant") > 0.0))
    throw SchemaError("options.concentration_constant", "must be positive");
  if (o.contains("m") && as_integer(o["m"], "options.m") < 1) throw SchemaError("options.m", "must be positive");
  if (o.contains("directions")) {
    long d = as_integer(o["directions"], "options.directions");
    if (d < 1 || d > 256) throw SchemaError("options.directions", "out of range");
  }
  if (o.contains("centers")) {
    if (!o["centers"].is_array()) throw SchemaError("options.centers", "expected an array");
    for (std::size_t i = 0; i < o["centers"].size(); ++i) as_point(o["centers"][i], c.grid.n, at("options.centers", i));
  }
  if (o.contains("t_values")) {
    const Json& tv = o["t_values"];
    if (!tv.is_array() || tv.empty()) throw SchemaError("options.t_values", "expected a nonempty array");
    for (std::size_t i = 0; i < tv.size(); ++i) as_number(tv[i], at("options.t_values", i));
  }
  if (o.contains("radius_tolerance") && as_number(o["radius_tolerance"], "options.radius_tolerance") <= 0)
    throw SchemaError("options.radius_tolerance", "must be positive");
  if (o.contains("radius") && as_number(o["radius"], "options.radius") <= 0)
    throw SchemaError("options.radius", "must be positive");
  if (o.contains("incident")) {
    const Json& in = o["incident"];
    allow_keys(in, "options.incident", {"kind", "k0", "scale", "sign", "center", "directions"});
    if (in.contains("kind")) {
      std::string k = as_string(in["kind"], "options.incident.kind");
      if (k != "radial" && k != "herglotz") throw SchemaError("options.incident.kind", "expected \"radial\" or \"herglotz\"");
    }
    if (in.contains("k0") && as_number(in["k0"], "options.incident.k0") <= 0)
      throw SchemaError("options.incident.k0", "must be positive");
    if (in.contains("scale") && as_number(in["scale"], "options.incident.scale") <= 0)
      throw SchemaError("options.incident.scale", "must be positive");
    if (in.contains("sign")) {
      long s = as_integer(in["sign"], "options.incident.sign");
      if (s != 1 && s != -1) throw SchemaError("options.incident.sign", "must be 1 or -1");
    }
    if (in.contains("center")) as_point(in["center"], c.grid.n, "options.incident.center");
    if (in.contains("directions")) {
      long d = as_integer(in["directions"], "options.incident.directions");
      if (d < 1 || d > 4096) throw SchemaError("options.incident.directions", "out of range");
    }
  }
  if (t == "permittivity" && c.grid.n != 2) throw SchemaError("grid.n", "permittivity reconstruction is 2D only");
}

void check_phase_count(const RunConfig& c) {
  std::size_t m = c.phases.size();
  auto require = [&](bool ok, const std::string& what) {
    if (!ok) throw SchemaError("phases", "task " + c.task + " needs " + what);
  };
  if (c.task == "balayage" || c.task == "one-phase" || c.task == "verify-null" || c.task == "pompeiu")
    require(m == 1, "exactly one phase");
  else if (c.task == "two-phase" || c.task == "scatter" || c.task == "permittivity")
    require(m == 2, "exactly two phases (positive first)");
  else
    require(m >= 1 && m <= 6, "between one and six phases");
  std::set<std::string> labels;
  for (std::size_t i = 0; i < m; ++i)
    if (!labels.insert(c.phases[i].label).second) throw SchemaError(at("phases", i) + ".label", "duplicate label");
}

// ---------------------------------------------------------------- report helpers

Json point_json(const Point& p, int n) {
  Json a = Json::array();
  for (int d = 0; d < n; ++d) a.push_back(p[d]);
  return a;
}

Json grid_json(const Grid& g) {
  Json c = Json::array();
  for (int d = 0; d < g.n; ++d) c.push_back(g.cells[d]);
  return Json{{"n", g.n}, {"origin", point_json(g.origin, g.n)}, {"extent", point_json(g.extent, g.n)},
              {"cells", c}, {"h", g.h}};
}

Json check_json(const HypothesisCheck& c) {
  return Json{{"name", c.name}, {"source", c.source}, {"passed", c.passed}, {"detail", c.detail}};
}

// JSON has no representation for non-finite numbers; keep them readable.
Json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

std::string utc_timestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Artifacts {
public:
  Artifacts(fs::path dir, const OutputConfig& out) : dir_(std::move(dir)), out_(out) {}

  void field(const std::string& name, const ScalarField& f) {
    if (out_.csv) write(name + ".csv", [&](const std::string& p) { write_csv(f, p); });
    if (out_.raster) write(name + ".raw", [&](const std::string& p) { write_raster(f, p); });
    heatmap(name, f);
  }

  void mask(const std::string& name, const Mask& m) { field(name, mask_to_field(m)); }

  void heatmap(const std::string& name, const ScalarField& f) {
    if (!out_.heatmap) return;
    if (f.grid.n == 2) {
      write(name + ".pgm", [&](const std::string& p) { write_pgm(f, p); });
      return;
    }
    for (int a = 0; a < 3; ++a)
      write(name + "_x" + std::to_string(a) + ".pgm", [&](const std::string& p) { write_pgm(axis_slice(f, a), p); });
  }

  const Json& list() const { return list_; }

private:
  template <class F> void write(const std::string& file, F&& writer) {
    writer((dir_ / file).string());
    list_.push_back(file);
  }

  fs::path dir_;
  OutputConfig out_;
  Json list_ = Json::array();
};

struct Context {
  const RunConfig& cfg;
  Artifacts& art;
  Json results = Json::object();
  Json checks = Json::array();
  Json residuals = Json::object();
  Json assertions = Json::array();

  void check(const HypothesisCheck& c) { checks.push_back(check_json(c)); }

  void assert_le(const std::string& name, double value, double limit) {
    assertions.push_back(Json{{"name", name}, {"passed", value <= limit}, {"value", num(value)}, {"limit", limit}});
  }
  void assert_true(const std::string& name, bool ok) {
    assertions.push_back(Json{{"name", name}, {"passed", ok}});
  }
  bool all_passed() const {
    for (const auto& a : assertions)
      if (!a["passed"].get<bool>()) return false;
    return true;
  }
};

// ---------------------------------------------------------------- task helpers

GridMeasure phase_measure(const Grid& g, const PhaseConfig& p) {
  if (p.atoms.empty()) return zero_measure(g);
  double r = p.mollify_radius > 0 ? p.mollify_radius : 4.0 * g.h;
  return deposit_measure(g, p.atoms, r);
}

void guard_wavenumber(Context& c, const PhaseConfig& p) {
  const Grid& g = c.cfg.grid;
  double lam = box_min_eigenvalue(g);
  HypothesisCheck h;
  h.name = "wavenumber_below_box_eigenvalue[" + p.label + "]";
  h.source = "k-maximum principle: k^2 below the first Dirichlet eigenvalue of the box";
  h.passed = p.k * p.k < lam;
  std::ostringstream d;
  d << "k = " << p.k << ", k_* = " << std::sqrt(lam);
  h.detail = d.str();
  c.check(h);
  if (!h.passed) require_below_box_eigenvalue(g, p.k);
}

std::string capacity_source() { return "capacity: total mass below c_k(R_k)"; }

double max_diff(const ScalarField& a, const ScalarField& b) {
  double m = -INFINITY;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, a.v[i] - b.v[i]);
  return m;
}

Json two_phase_json(const TwoPhaseResult& r) {
  const auto& d = r.diagnostics;
  return Json{{"method", r.method},
              {"iterations", d.iterations},
              {"converged", d.converged},
              {"monotone", d.monotone},
              {"energy", num(d.energy)},
              {"residual_max", num(d.residual_max)},
              {"tol_phase", r.tol_phase},
              {"volume_plus", r.D_plus.volume()},
              {"volume_minus", r.D_minus.volume()},
              {"cells_plus", r.D_plus.count()},
              {"cells_minus", r.D_minus.count()}};
}

void write_two_phase(Context& c, const TwoPhaseResult& r, const std::string& prefix) {
  c.art.field(prefix + "u", r.u);
  c.art.mask(prefix + "D_plus", r.D_plus);
  c.art.mask(prefix + "D_minus", r.D_minus);
  c.art.field(prefix + "phases", sign_field(r.u, r.tol_phase));
}

struct TwoPhaseRun {
  GridMeasure mu_plus, mu_minus;
  TwoPhaseResult primary;
};

bool balayage_applicable(const RunConfig& cfg) {
  const auto& p = cfg.phases;
  return p[0].k == p[1].k && p[0].lambda == 1.0 && p[1].lambda == 1.0;
}

ScalarField phase_forcing(const GridMeasure& mu, double lambda) {
  ScalarField f = mu.density;
  for (auto& x : f.v) x -= lambda;
  return f;
}

TwoPhaseResult run_minimization(Context& c, const TwoPhaseRun& tp) {
  const auto& p = c.cfg.phases;
  TwoPhaseResult m = minimize_scalar_two_phase(p[0].k, p[1].k, phase_forcing(tp.mu_plus, p[0].lambda),
                                               phase_forcing(tp.mu_minus, p[1].lambda), c.cfg.solver,
                                               c.cfg.max_sweeps);
  c.results["minimization"] = two_phase_json(m);
  c.residuals["minimization_pde"] = num(m.diagnostics.residual_max);
  c.assert_true("minimization_converged", m.diagnostics.converged);
  return m;
}

TwoPhaseResult run_balayage_route(Context& c, const TwoPhaseRun& tp) {
  const auto& p = c.cfg.phases;
  if (!balayage_applicable(c.cfg))
    fail(ErrorCode::Config, "the balayage route needs equal wavenumbers and lambda = 1 in both phases");
  int iters = c.cfg.options.value("max_iterations", 50);
  double c_n = c.cfg.options.value("concentration_constant", 0.0);
  c.check(concentration_check(tp.mu_plus, p[0].label, c_n));
  c.check(concentration_check(tp.mu_minus, p[1].label, c_n));
  TwoPhaseConstruction con;
  try {
    con = construct_two_phase_balayage(tp.mu_plus, tp.mu_minus, p[0].k, c.cfg.solver, iters);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Hypothesis) {
      HypothesisCheck h{"balayage_construction", "two-phase balayage construction hypotheses", false, e.what()};
      c.check(h);
    }
    throw;
  }
  const TwoPhaseResult& r = con.result;
  for (const auto& h : r.diagnostics.checks) c.check(h);
  Json j = two_phase_json(r);
  double scale = std::max(con.plus.W.max_abs(), con.minus.W.max_abs());
  TauReport tau = tau_membership(r.u, tp.mu_plus, tp.mu_minus, p[0].k, con.plus.W, con.minus.W,
                                 std::max(r.tol_phase, 1e-6 * scale));
  j["tau"] = Json{{"member", tau.member},
                  {"pde_violations", tau.pde_violations},
                  {"lower_violations", tau.lower_violations},
                  {"sandwich_violations", tau.sandwich_violations},
                  {"worst_pde", num(tau.worst_pde)}};
  j["excess_over_cand_u"] = num(max_diff(r.u, con.cand_u));
  j["excess_over_cand_v"] = num(max_diff(r.u, con.cand_v));
  j["plus_capacity"] = capacity_status_name(con.plus.capacity);
  j["minus_capacity"] = capacity_status_name(con.minus.capacity);
  c.results["balayage"] = j;
  c.residuals["balayage_pde"] = num(r.diagnostics.residual_max);
  c.assert_true("balayage_converged", r.diagnostics.converged);
  bool all = true;
  for (const auto& h : r.diagnostics.checks) all = all && h.passed;
  c.assert_true("balayage_hypotheses", all);
  return r;
}

void cross_json(Context& c, const TwoPhaseResult& a, const TwoPhaseResult& b) {
  CrossReport x = cross_validate(a, b);
  c.results["cross_validation"] = Json{{"l2_rel", num(x.l2_rel)},
                                       {"diff_plus", x.diff_plus},
                                       {"diff_minus", x.diff_minus},
                                       {"diff_plus_rel", num(x.diff_plus_rel)},
                                       {"diff_minus_rel", num(x.diff_minus_rel)},
                                       {"within_collar", x.within_collar}};
  c.assert_le("cross_validation_l2", x.l2_rel, 0.05);
  c.assert_true("cross_validation_masks_within_collar", x.within_collar);
}

TwoPhaseRun two_phase_stage(Context& c, const std::string& method_in, bool write) {
  const RunConfig& cfg = c.cfg;
  for (const auto& p : cfg.phases) guard_wavenumber(c, p);
  TwoPhaseRun tp;
  tp.mu_plus = phase_measure(cfg.grid, cfg.phases[0]);
  tp.mu_minus = phase_measure(cfg.grid, cfg.phases[1]);
  std::string method = method_in;
  if (method == "auto") method = balayage_applicable(cfg) ? "balayage" : "minimization";
  c.results["method"] = method;
  c.results["mass_plus"] = tp.mu_plus.total_mass;
  c.results["mass_minus"] = tp.mu_minus.total_mass;

  if (method == "minimization") {
    tp.primary = run_minimization(c, tp);
  } else if (method == "balayage") {
    tp.primary = run_balayage_route(c, tp);
  } else {
    tp.primary = run_balayage_route(c, tp);
    TwoPhaseResult m = run_minimization(c, tp);
    cross_json(c, m, tp.primary);
    if (write) write_two_phase(c, m, "minimization_");
  }
  if (write) write_two_phase(c, tp.primary, "");
  return tp;
}

// ---------------------------------------------------------------- tasks

void task_balayage(Context& c) {
  const RunConfig& cfg = c.cfg;
  const PhaseConfig& p = cfg.phases[0];
  guard_wavenumber(c, p);
  GridMeasure mu = phase_measure(cfg.grid, p);
  CapacityStatus cap = capacity_guard(mu.total_mass, cfg.grid.n, p.k);
  HypothesisCheck h{"capacity", capacity_source(), cap != CapacityStatus::Violated, capacity_status_name(cap)};
  c.check(h);
  BalayageResult r = partial_balayage(mu, p.k, nullptr, cfg.solver);
  StructureReport s = structure_check(r, mu);
  c.results["balayage"] = Json{{"mass", mu.total_mass},
                               {"capacity", capacity_status_name(r.capacity)},
                               {"sweeps", r.sweeps},
                               {"tol_phase", r.tol_phase},
                               {"omega_cells", r.omega.count()},
                               {"omega_volume", r.omega.volume()},
                               {"equivalent_radius", equivalent_radius(r.omega)},
                               {"boundary_excess", num(r.boundary_excess)}};
  c.results["structure"] = Json{{"max_dev_inside", num(s.max_dev_inside)},
                                {"max_dev_outside", num(s.max_dev_outside)},
                                {"min_remainder", num(s.min_remainder)},
                                {"excess_localized", s.excess_localized},
                                {"passed", s.passed}};
  c.residuals["balayage_inside"] = num(s.max_dev_inside);
  c.assert_true("balayage_structure", s.passed);
  c.art.field("U", r.U);
  c.art.field("V", r.V);
  c.art.field("W", r.W);
  c.art.field("balayage_density", r.bal_density);
  c.art.mask("omega", r.omega);
}

void task_one_phase(Context& c) {
  const RunConfig& cfg = c.cfg;
  const PhaseConfig& p = cfg.phases[0];
  guard_wavenumber(c, p);
  PhaseSpec spec;
  spec.k = p.k;
  spec.lambda = p.lambda;
  spec.mu = phase_measure(cfg.grid, p);
  spec.label = p.label;
  ScalarField u = minimize_one_phase(spec, cfg.solver);
  double tol = phase_tolerance(cfg.solver, u.max_abs());
  Mask pos = threshold(u, tol);
  Json j{{"mass", spec.mu.total_mass},
         {"energy", num(energy(u, spec))},
         {"tol_phase", tol},
         {"cells", pos.count()},
         {"volume", pos.volume()},
         {"equivalent_radius", equivalent_radius(pos)}};
  if (p.lambda == 1.0 && !p.atoms.empty()) {
    BalayageResult b = partial_balayage(spec.mu, p.k, nullptr, cfg.solver);
    Mask collar = boundary_collar(pos, 2);
    bool within = true;
    for (std::size_t i = 0; i < pos.f.size(); ++i)
      if (pos.f[i] != b.omega.f[i] && !collar.f[i]) within = false;
    j["balayage_mismatch_cells"] = count_xor(pos, b.omega);
    j["balayage_within_collar"] = within;
    c.assert_true("balayage_agreement_within_collar", within);
  }
  if (p.atoms.size() == 1) {
    double r = equivalent_radius(pos);
    double a = p.atoms[0].mass;
    double err = std::fabs(ball_capacity(cfg.grid.n, p.k, r) - a) / a;
    j["capacity_radius_error"] = num(err);
    if (cfg.options.contains("radius_tolerance"))
      c.assert_le("capacity_radius", err, cfg.options["radius_tolerance"].get<double>());
  }
  c.results["one_phase"] = j;
  c.art.field("u", u);
  c.art.mask("positivity", pos);
}

void task_two_phase(Context& c) {
  std::string method = c.cfg.options.value("method", std::string("auto"));
  if (method == "auto") method = balayage_applicable(c.cfg) ? "both" : "minimization";
  two_phase_stage(c, method, true);
}

void task_multi_phase(Context& c) {
  const RunConfig& cfg = c.cfg;
  std::vector<PhaseSpec> specs;
  for (const auto& p : cfg.phases) {
    guard_wavenumber(c, p);
    PhaseSpec s;
    s.k = p.k;
    s.lambda = p.lambda;
    s.mu = phase_measure(cfg.grid, p);
    s.label = p.label;
    specs.push_back(std::move(s));
  }
  SegregatedState st = minimize_segregated(specs, cfg.solver, cfg.max_sweeps);
  Json hist = Json::array();
  for (double e : st.energy_history) hist.push_back(num(e));
  Json phases = Json::array();
  for (std::size_t i = 0; i < specs.size(); ++i)
    phases.push_back(Json{{"label", specs[i].label},
                          {"mass", specs[i].mu.total_mass},
                          {"cells", st.masks[i].count()},
                          {"volume", st.masks[i].volume()},
                          {"energy", num(energy(st.fields[i], specs[i]))}});
  c.results["segregated"] = Json{{"path", st.path},
                                 {"sweeps", st.sweeps},
                                 {"converged", st.converged},
                                 {"energy", num(st.energy)},
                                 {"energy_monotone", st.energy_monotone},
                                 {"tol_phase", st.tol_phase},
                                 {"energy_history", hist},
                                 {"phases", phases}};
  c.assert_true("segregated_converged", st.converged);
  c.assert_true("energy_monotone", st.energy_monotone);

  Json pairs = Json::array();
  for (std::size_t i = 0; i < specs.size(); ++i)
    for (std::size_t j = i + 1; j < specs.size(); ++j) {
      ResidualReport r = local_pde_residual(st, specs, i, j);
      pairs.push_back(Json{{"phases", Json::array({specs[i].label, specs[j].label})}, {"max", num(r.max)}});
    }
  c.residuals["local_pde"] = pairs;

  bool equal_k = std::all_of(specs.begin(), specs.end(), [&](const PhaseSpec& s) { return s.k == specs[0].k; });
  if (equal_k) {
    SupportReport sr = support_checks(st, specs, {}, cfg.solver);
    Json entries = Json::array();
    for (const auto& e : sr.phases)
      entries.push_back(Json{{"label", e.label},
                             {"outside_one_phase", e.outside_one_phase},
                             {"max_excess", num(e.max_excess)}});
    c.results["support"] = Json{{"passed", sr.passed}, {"phases", entries}};
    HypothesisCheck h{"segregated_below_one_phase", "comparison with one-phase minimizers at equal wavenumbers",
                      sr.passed, sr.passed ? "" : "a phase extends beyond its one-phase positivity set"};
    c.check(h);
    c.assert_true("support_comparison", sr.passed);
  }

  ScalarField labels(cfg.grid);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    c.art.field("u_" + specs[i].label, st.fields[i]);
    c.art.mask("mask_" + specs[i].label, st.masks[i]);
    for (std::size_t n = 0; n < labels.size(); ++n)
      if (st.masks[i].f[n]) labels.v[n] = (double)(i + 1);
  }
  c.art.field("labels", labels);
}

NullProfile null_profile_stage(Context& c) {
  const RunConfig& cfg = c.cfg;
  double k = cfg.phases[0].k;
  int m = cfg.options.value("m", 1);
  NullProfile p = null_qd_profile(cfg.grid, k, m);
  c.results["profile"] = Json{{"k", k}, {"m", m}, {"radius", p.radius}, {"volume", p.volume},
                              {"cells", p.domain.count()}, {"max", p.u.max_abs()}};
  c.art.field("u", p.u);
  c.art.mask("domain", p.domain);
  return p;
}

void task_verify_null(Context& c) {
  const RunConfig& cfg = c.cfg;
  NullProfile p = null_profile_stage(c);
  double k = cfg.phases[0].k;
  int dirs = cfg.options.value("directions", 4);
  std::vector<Point> centers;
  if (cfg.options.contains("centers")) {
    for (const auto& x : cfg.options["centers"]) centers.push_back(as_point(x, cfg.grid.n, "options.centers"));
  } else {
    centers = {Point{0.2 * p.radius, -0.1 * p.radius, 0}, Point{0.5 * p.radius, 0.25 * p.radius, 0}};
  }
  TestFamily fam = helmholtz_test_family(cfg.grid, k, dirs, centers);
  GridMeasure none = zero_measure(cfg.grid);
  QuadratureReport q = quadrature_residual(p.domain, nullptr, none, nullptr, fam);
  Json members = Json::array();
  for (const auto& mr : q.members)
    members.push_back(Json{{"member", mr.descriptor},
                           {"domain_integral", num(mr.domain_integral)},
                           {"residual", num(mr.residual)},
                           {"normalized", num(mr.normalized)}});
  c.results["quadrature"] = Json{{"members", members}, {"scale", q.scale}, {"max_normalized", num(q.max_normalized)}};
  c.residuals["null_quadrature"] = num(q.max_normalized);
  c.assert_le("null_quadrature", q.max_normalized, 0.02);
}

void task_pompeiu(Context& c) {
  const RunConfig& cfg = c.cfg;
  NullProfile p = null_profile_stage(c);
  double k = cfg.phases[0].k;
  PompeiuReport r = pompeiu_identities(p.u, p.domain, k, p.volume);
  c.results["identities"] = Json{{"volume", r.volume},
                                 {"grad_norm2", r.grad_norm2},
                                 {"grad_target", r.grad_target},
                                 {"l2_term", r.l2_term},
                                 {"l2_target", r.l2_target},
                                 {"integral", r.integral},
                                 {"integral_target", r.integral_target},
                                 {"max_rel_error", num(r.max_rel_error)}};
  c.assert_le("pompeiu_identities", r.max_rel_error, 0.02);

  std::vector<double> t = {0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0};
  if (cfg.options.contains("t_values")) t = cfg.options["t_values"].get<std::vector<double>>();
  SaddleScan s = saddle_scan(p.u, p.domain, k, t, p.volume);
  Json rows = Json::array();
  for (std::size_t i = 0; i < s.t.size(); ++i)
    rows.push_back(Json{{"t", s.t[i]}, {"value", num(s.value[i])}, {"target", num(s.target[i])}});
  c.results["saddle_scan"] = Json{{"rows", rows}, {"max_rel_dev", num(s.max_rel_dev)}, {"argmax_t", s.argmax_t},
                                  {"peak_at_one", s.peak_at_one}};
  c.assert_le("saddle_scan", s.max_rel_dev, 0.02);
  c.assert_true("saddle_peak_at_one", s.peak_at_one);

  SaddleDirection d = saddle_direction(p.u, k);
  Json mode = Json::array();
  for (int a = 0; a < cfg.grid.n; ++a) mode.push_back(d.mode[a]);
  c.results["saddle_direction"] = Json{{"mode", mode}, {"k0", d.k0}, {"linear_coeff", num(d.linear_coeff)},
                                       {"one_sided", d.one_sided}, {"sign_change", d.sign_change}};
}

IncidentField incident_stage(Context& c) {
  const RunConfig& cfg = c.cfg;
  Json in = cfg.options.value("incident", Json::object());
  IncidentSpec spec;
  std::string kind = in.value("kind", std::string("radial"));
  double k0 = in.value("k0", cfg.phases[0].k);
  if (kind == "herglotz") {
    spec = uniform_herglotz(cfg.grid.n, in.value("directions", 64));
  } else {
    spec.kind = IncidentKind::Radial;
    spec.scale = in.value("scale", 4.0);
    spec.sign = in.value("sign", -1);
    if (in.contains("center")) spec.center = as_point(in["center"], cfg.grid.n, "options.incident.center");
  }
  IncidentField u0 = make_incident(cfg.grid, k0, spec);
  c.results["incident"] = Json{{"kind", kind}, {"k0", k0}, {"max", u0.field.max_abs()},
                               {"gate_residual", num(u0.gate_residual)}};
  c.art.field("incident", u0.field);
  return u0;
}

double min_on(const ScalarField& f, const Mask& m) {
  double v = INFINITY;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (m.f[i]) v = std::min(v, f.v[i]);
  return v;
}

ScatterResult scatter_stage(Context& c, TwoPhaseRun& tp, IncidentField& u0) {
  const RunConfig& cfg = c.cfg;
  tp = two_phase_stage(c, cfg.options.value("method", std::string("auto")), true);
  u0 = incident_stage(c);
  AdmissibilityReport adm = admissibility_check(u0, tp.primary);
  std::ostringstream d;
  d << "max u0 on boundaries " << adm.max_on_boundary << ", delta " << adm.delta << (adm.vacuous ? " (vacuous)" : "");
  c.check(HypothesisCheck{"admissibility", "incident field negative on the boundaries of D+ and D-", adm.passed, d.str()});

  ContrastSpec spec;
  spec.lambda_plus = cfg.phases[0].lambda;
  spec.lambda_minus = cfg.phases[1].lambda;
  spec.k_plus = cfg.phases[0].k;
  spec.k_minus = cfg.phases[1].k;
  spec.mu_plus = &tp.mu_plus;
  spec.mu_minus = &tp.mu_minus;
  ScatterResult r = build_contrasts(tp.primary, u0, spec);
  NonscatterReport ns = nonscattering_residual(r, u0, tp.primary);

  Mask in_plus = mask_and(boundary_collar(tp.primary.D_plus, 2), tp.primary.D_plus);
  Mask in_minus = mask_and(boundary_collar(tp.primary.D_minus, 2), tp.primary.D_minus);
  double min_rp = min_on(r.rho_plus, in_plus), min_rm = min_on(r.rho_minus, in_minus);
  c.results["contrast"] = Json{{"interface_edges", r.boundary_limits.size()},
                               {"max_limit_error", num(r.max_limit_error)},
                               {"min_abs_total", num(r.min_abs_total)},
                               {"identity_error", num(r.identity_error)},
                               {"free_boundary_signs", r.free_boundary_signs},
                               {"min_rho_plus_collar", num(in_plus.empty() ? 0.0 : min_rp)},
                               {"min_rho_minus_collar", num(in_minus.empty() ? 0.0 : min_rm)}};
  c.results["nonscattering"] = Json{{"residual", num(ns.residual)}, {"margin_max", num(ns.margin_max)},
                                    {"compact_support", ns.compact_support}};
  c.residuals["nonscattering"] = num(ns.residual);
  c.residuals["contrast_identity"] = num(r.identity_error);
  if (!in_plus.empty()) c.assert_true("rho_plus_positive_on_collar", min_rp > 0.0);
  if (!in_minus.empty()) c.assert_true("rho_minus_positive_on_collar", min_rm > 0.0);
  if (!r.boundary_limits.empty()) c.assert_le("interface_limits", r.max_limit_error, 0.05);
  c.assert_true("free_boundary_signs", r.free_boundary_signs);
  c.assert_true("scattered_field_compactly_supported", ns.compact_support);

  c.art.field("total", r.total);
  c.art.field("rho_plus", r.rho_plus);
  c.art.field("rho_minus", r.rho_minus);
  c.art.field("q", r.q);
  c.art.field("nonscattering_residual", ns.field);
  return r;
}

void task_scatter(Context& c) {
  TwoPhaseRun tp;
  IncidentField u0;
  scatter_stage(c, tp, u0);
}

void task_permittivity(Context& c) {
  const RunConfig& cfg = c.cfg;
  TwoPhaseRun tp;
  IncidentField u0;
  ScatterResult r = scatter_stage(c, tp, u0);
  double R = 0.0;
  if (cfg.options.contains("radius")) {
    R = cfg.options["radius"].get<double>();
  } else {
    for (std::size_t i = 0; i < r.q.size(); ++i)
      if (r.q.v[i] != 0.0) {
        Point x = cfg.grid.node(i);
        R = std::max(R, std::hypot(x[0], x[1]));
      }
    R += 3.0 * cfg.grid.h;
  }
  Permittivity p = reconstruct_permittivity(r.q, R, cfg.solver);
  double eps_min = INFINITY, eps_max = -INFINITY;
  for (double e : p.epsilon.v) {
    eps_min = std::min(eps_min, e);
    eps_max = std::max(eps_max, e);
  }
  c.results["permittivity"] = Json{{"radius", R},
                                   {"min_psi", num(p.min_psi)},
                                   {"epsilon_min", num(eps_min)},
                                   {"epsilon_max", num(eps_max)},
                                   {"self_residual", num(p.self_residual)},
                                   {"normal_equations", p.normal_equations}};
  c.residuals["permittivity_self"] = num(p.self_residual);
  c.assert_true("psi_positive", p.min_psi > 0.0);
  c.assert_le("permittivity_self_residual", p.self_residual, cfg.grid.h);
  c.art.field("psi", p.psi);
  c.art.field("epsilon", p.epsilon);
}

ExitCode exit_for(ErrorCode e) {
  switch (e) {
  case ErrorCode::Config:
  case ErrorCode::Domain:
  case ErrorCode::Grid:
  case ErrorCode::Placement: return ExitCode::Schema;
  case ErrorCode::Hypothesis: return ExitCode::Hypothesis;
  default: return ExitCode::Solver;
  }
}

const char* status_name(ExitCode c) {
  switch (c) {
  case ExitCode::Ok: return "ok";
  case ExitCode::AssertionFailed: return "assertion failed";
  case ExitCode::Schema: return "config error";
  case ExitCode::Hypothesis: return "hypothesis violation";
  case ExitCode::Solver: return "solver failure";
  }
  return "unknown";
}

std::string resolve_output(const RunConfig& cfg, const std::string& out_override) {
  if (!out_override.empty()) return out_override;
  if (const char* env = std::getenv("QDOM_OUT"); env && *env) return env;
  return cfg.output.directory;
}

RunOutcome execute(const RunConfig& cfg, const std::string& out_override) {
  RunOutcome out;
  fs::path dir = resolve_output(cfg, out_override);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    out.code = ExitCode::Solver;
    out.message = "cannot create output directory " + dir.string();
    return out;
  }
  Artifacts art(dir, cfg.output);
  Context c{cfg, art};
  Json error = nullptr;
  try {
    if (cfg.task == "balayage") task_balayage(c);
    else if (cfg.task == "one-phase") task_one_phase(c);
    else if (cfg.task == "two-phase") task_two_phase(c);
    else if (cfg.task == "multi-phase") task_multi_phase(c);
    else if (cfg.task == "verify-null") task_verify_null(c);
    else if (cfg.task == "pompeiu") task_pompeiu(c);
    else if (cfg.task == "scatter") task_scatter(c);
    else task_permittivity(c);
    out.code = c.all_passed() ? ExitCode::Ok : ExitCode::AssertionFailed;
    out.message = c.all_passed() ? "all assertions passed" : "some assertions failed";
  } catch (const Error& e) {
    out.code = exit_for(e.code());
    out.message = e.what();
    error = Json{{"code", error_code_name(e.code())}, {"message", e.what()}};
  } catch (const std::exception& e) {
    out.code = ExitCode::Solver;
    out.message = e.what();
    error = Json{{"code", "internal"}, {"message", e.what()}};
  }

  Json& r = out.report;
  r["program"] = "qdom";
  r["version"] = QDOM_VERSION;
  r["task"] = cfg.task;
  r["status"] = status_name(out.code);
  r["exit_code"] = (int)out.code;
  if (!error.is_null()) r["error"] = error;
  r["grid"] = grid_json(cfg.grid);
  r["hypothesis_checks"] = c.checks;
  r["assertions"] = c.assertions;
  r["residuals"] = c.residuals;
  r["results"] = c.results;
  r["artifacts"] = art.list();
  r["config"] = cfg.echo;
  r["timestamp"] = utc_timestamp();

  fs::path rp = dir / "report.json";
  std::ofstream f(rp, std::ios::binary);
  f << report_text(r);
  if (!f) {
    out.code = ExitCode::Solver;
    out.message = "cannot write " + rp.string();
    return out;
  }
  out.report_path = rp.string();
  return out;
}

} // namespace

RunConfig parse_config(const Json& doc) {
  allow_keys(doc, "", {"task", "grid", "phases", "solver", "output", "options"});
  RunConfig c;
  c.echo = doc;
  c.task = as_string(need(doc, "task", ""), "task");
  const auto& names = task_names();
  if (std::find(names.begin(), names.end(), c.task) == names.end())
    throw SchemaError("task", "unknown task \"" + c.task + "\"");
  c.grid = parse_grid(need(doc, "grid", ""));
  const Json& ph = need(doc, "phases", "");
  if (!ph.is_array()) throw SchemaError("phases", "expected an array");
  for (std::size_t i = 0; i < ph.size(); ++i) c.phases.push_back(parse_phase(ph[i], c.grid, at("phases", i), i));
  if (doc.contains("solver")) c.solver = parse_solver(doc["solver"], c.max_sweeps);
  if (doc.contains("output")) c.output = parse_output(doc["output"]);
  if (doc.contains("options")) c.options = doc["options"];
  if (!c.options.is_object()) throw SchemaError("options", "expected an object");
  check_phase_count(c);
  check_options(c);
  return c;
}

RunConfig parse_config_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError("", std::string("malformed JSON: ") + e.what());
  }
  return parse_config(doc);
}

std::string report_text(const Json& report) { return report.dump(2) + "\n"; }

RunOutcome run_config_text(const std::string& text, const std::string& out_override) {
  RunConfig cfg;
  try {
    cfg = parse_config_text(text);
  } catch (const SchemaError& e) {
    RunOutcome out;
    out.code = ExitCode::Schema;
    out.message = e.what();
    return out;
  }
  return execute(cfg, out_override);
}

RunOutcome run_config(const std::string& config_path, const std::string& out_override) {
  std::ifstream in(config_path, std::ios::binary);
  if (!in) {
    RunOutcome out;
    out.code = ExitCode::Schema;
    out.message = "cannot read config " + config_path;
    return out;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return run_config_text(ss.str(), out_override);
}

} // namespace qdom
