#pragma once

#include <stdexcept>
#include <string>

namespace qdom {

enum class ErrorCode {
  Config = 1,
  Domain,
  Singularity,
  Grid,
  Placement,
  Indefinite,
  SolverFailure,
  BoxTooSmall,
  Hypothesis,
  Resolution,
  Division,
  PhysicalValidity,
  Io,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

} // namespace qdom
