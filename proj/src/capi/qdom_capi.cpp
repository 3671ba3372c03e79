#include "qdom/qdom.h"

#include "qdom/error.hpp"
#include "qdom/field_io.hpp"
#include "qdom/pipeline.hpp"
#include "qdom/specfun.hpp"

#include <exception>
#include <string>

struct qdom_run {
  qdom::RunOutcome outcome;
  std::string report;
};

struct qdom_field {
  qdom::ScalarField f;
};

namespace {

thread_local std::string last_error;

qdom_status set_error(qdom_status s, const std::string& what) {
  last_error = what;
  return s;
}

qdom_status from_error(const qdom::Error& e) {
  switch (e.code()) {
  case qdom::ErrorCode::Io: return set_error(QDOM_IO_ERROR, e.what());
  case qdom::ErrorCode::Domain:
  case qdom::ErrorCode::Singularity: return set_error(QDOM_DOMAIN_ERROR, e.what());
  default: return set_error(QDOM_INVALID_ARGUMENT, e.what());
  }
}

template <class F> qdom_status guarded(F&& body) {
  try {
    return body();
  } catch (const qdom::Error& e) {
    return from_error(e);
  } catch (const std::exception& e) {
    return set_error(QDOM_INVALID_ARGUMENT, e.what());
  } catch (...) {
    return set_error(QDOM_INVALID_ARGUMENT, "unknown error");
  }
}

qdom_status finish_run(qdom::RunOutcome o, qdom_run** run) {
  auto* r = new qdom_run{std::move(o), {}};
  if (!r->outcome.report.is_null()) r->report = qdom::report_text(r->outcome.report);
  *run = r;
  auto s = (qdom_status)(int)r->outcome.code;
  if (s != QDOM_OK) last_error = r->outcome.message;
  return s;
}

} // namespace

extern "C" {

const char* qdom_version(void) { return QDOM_VERSION; }

const char* qdom_last_error(void) { return last_error.c_str(); }

qdom_status qdom_run_file(const char* config_path, const char* out_dir, qdom_run** run) {
  if (!config_path || !run) return set_error(QDOM_INVALID_ARGUMENT, "null argument");
  return guarded([&] { return finish_run(qdom::run_config(config_path, out_dir ? out_dir : ""), run); });
}

qdom_status qdom_run_json(const char* config_json, const char* out_dir, qdom_run** run) {
  if (!config_json || !run) return set_error(QDOM_INVALID_ARGUMENT, "null argument");
  return guarded([&] { return finish_run(qdom::run_config_text(config_json, out_dir ? out_dir : ""), run); });
}

qdom_status qdom_run_status(const qdom_run* run) {
  return run ? (qdom_status)(int)run->outcome.code : QDOM_INVALID_ARGUMENT;
}

const char* qdom_run_message(const qdom_run* run) { return run ? run->outcome.message.c_str() : ""; }

const char* qdom_run_report_path(const qdom_run* run) { return run ? run->outcome.report_path.c_str() : ""; }

const char* qdom_run_report(const qdom_run* run) { return run ? run->report.c_str() : ""; }

void qdom_run_free(qdom_run* run) { delete run; }

qdom_status qdom_field_load(const char* path, qdom_field** field) {
  if (!path || !field) return set_error(QDOM_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *field = new qdom_field{qdom::read_field(path)};
    return QDOM_OK;
  });
}

int qdom_field_dim(const qdom_field* field) { return field ? field->f.grid.n : 0; }

int qdom_field_cells(const qdom_field* field, int axis) {
  if (!field || axis < 0 || axis >= field->f.grid.n) return 0;
  return field->f.grid.cells[axis];
}

double qdom_field_spacing(const qdom_field* field) { return field ? field->f.grid.h : 0.0; }

double qdom_field_origin(const qdom_field* field, int axis) {
  if (!field || axis < 0 || axis >= field->f.grid.n) return 0.0;
  return field->f.grid.origin[axis];
}

size_t qdom_field_size(const qdom_field* field) { return field ? field->f.size() : 0; }

const double* qdom_field_data(const qdom_field* field) { return field ? field->f.v.data() : nullptr; }

void qdom_field_free(qdom_field* field) { delete field; }

qdom_status qdom_render(const char* field_path, const char* out_path) {
  if (!field_path || !out_path) return set_error(QDOM_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    qdom::render_heatmap(field_path, out_path);
    return QDOM_OK;
  });
}

qdom_status qdom_bessel_j(int twice_nu, double x, double* out) {
  if (!out) return set_error(QDOM_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = qdom::bessel_j(qdom::BesselOrder(twice_nu), x);
    return QDOM_OK;
  });
}

qdom_status qdom_bessel_zero(int twice_nu, int m, double* out) {
  if (!out) return set_error(QDOM_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = qdom::bessel_zero(qdom::BesselOrder(twice_nu), m);
    return QDOM_OK;
  });
}

qdom_status qdom_ball_capacity(int n, double k, double r, double* out) {
  if (!out) return set_error(QDOM_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *out = qdom::ball_capacity(n, k, r);
    return QDOM_OK;
  });
}

} // extern "C"
