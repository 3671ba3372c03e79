#include "qdom/error.hpp"

namespace qdom {

const char* error_code_name(ErrorCode c) {
  switch (c) {
  case ErrorCode::Config: return "config";
  case ErrorCode::Domain: return "domain";
  case ErrorCode::Singularity: return "singularity";
  case ErrorCode::Grid: return "grid";
  case ErrorCode::Placement: return "placement";
  case ErrorCode::Indefinite: return "indefinite";
  case ErrorCode::SolverFailure: return "solver_failure";
  case ErrorCode::BoxTooSmall: return "box_too_small";
  case ErrorCode::Hypothesis: return "hypothesis";
  case ErrorCode::Resolution: return "resolution";
  case ErrorCode::Division: return "division";
  case ErrorCode::PhysicalValidity: return "physical_validity";
  case ErrorCode::Io: return "io";
  }
  return "unknown";
}

} // namespace qdom
