#pragma once

#include "qdom/grid.hpp"
#include "qdom/linsolve.hpp"

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace qdom {

using Json = nlohmann::ordered_json;

/// Process exit codes of `qdom run`.
enum class ExitCode : int {
  Ok = 0,
  AssertionFailed = 1,
  Schema = 2,
  Hypothesis = 3,
  Solver = 4,
};

/// Malformed JSON or a config that does not match the schema; `path` locates the offending key.
class SchemaError : public std::runtime_error {
public:
  SchemaError(const std::string& path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

private:
  std::string path_;
};

struct PhaseConfig {
  double k = 0.0;
  double lambda = 1.0;
  std::vector<Atom> atoms;
  double mollify_radius = 0.0;  // 0 selects 4h
  std::string label;
};

struct OutputConfig {
  std::string directory = "qdom_out";
  bool csv = true;
  bool raster = true;
  bool heatmap = true;
};

struct RunConfig {
  std::string task;
  Grid grid;
  std::vector<PhaseConfig> phases;
  SolverConfig solver;
  int max_sweeps = 200;
  OutputConfig output;
  Json options = Json::object();
  Json echo;  // the config exactly as parsed
};

const std::vector<std::string>& task_names();

/// Validates the document against the schema. Throws SchemaError.
RunConfig parse_config(const Json& doc);
RunConfig parse_config_text(const std::string& text);

struct RunOutcome {
  ExitCode code = ExitCode::Ok;
  std::string message;
  std::string report_path;  // empty when no report was written
  Json report;
};

/// Runs the configured task and writes its artifacts and report.json into the output
/// directory (`out_override` wins over the config when non-empty). Never throws.
RunOutcome run_config(const std::string& config_path, const std::string& out_override = "");
RunOutcome run_config_text(const std::string& text, const std::string& out_override = "");

/// The report serialised as written to disk.
std::string report_text(const Json& report);

} // namespace qdom
