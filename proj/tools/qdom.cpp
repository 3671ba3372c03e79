// Command-line front end; talks to the library only through the C API.
#include "qdom/qdom.h"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

namespace {

int run_command(const std::string& config, const std::string& out_dir) {
  qdom_run* run = nullptr;
  qdom_status s = qdom_run_file(config.c_str(), out_dir.empty() ? nullptr : out_dir.c_str(), &run);
  if (!run) {
    std::fprintf(stderr, "qdom: %s\n", qdom_last_error());
    return 2;
  }
  const char* report = qdom_run_report_path(run);
  if (s == QDOM_OK)
    std::printf("%s\n", qdom_run_message(run));
  else
    std::fprintf(stderr, "qdom: %s\n", qdom_run_message(run));
  if (*report) std::printf("report: %s\n", report);
  qdom_run_free(run);
  return (int)s;
}

int render_command(const std::string& field, const std::string& out) {
  if (qdom_render(field.c_str(), out.c_str()) != QDOM_OK) {
    std::fprintf(stderr, "qdom: %s\n", qdom_last_error());
    return 2;
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadrature domains for the Helmholtz operator"};
  app.require_subcommand(1);

  std::string config, out_dir;
  auto* run = app.add_subcommand("run", "Run the pipeline named in a JSON config");
  run->add_option("config", config, "config file")->required();
  run->add_option("-o,--out", out_dir, "output directory (overrides QDOM_OUT and the config)");

  std::string field, image;
  auto* render = app.add_subcommand("render", "Write a PGM heatmap of a field file");
  render->add_option("field", field, "field file (CSV or raster)")->required();
  render->add_option("out", image, "output PGM path")->required();

  app.add_subcommand("version", "Print the library version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (run->parsed()) return run_command(config, out_dir);
  if (render->parsed()) return render_command(field, image);
  std::printf("qdom %s\n", qdom_version());
  return 0;
}
