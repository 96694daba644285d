#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "rbfplast/cli.hpp"

namespace cli = rbfplast::cli;

int main(int argc, char** argv) {
  CLI::App app{"RBF-FD elasto-plastic solver for the pressurized thick-walled cylinder"};
  app.set_help_flag("--help", "print this help and exit");
  std::string kind, config, sweep, export_path, out;
  double h = 0.0, pressure = 0.0;
  long long seed = 0;
  int n_load = 0;
  app.add_option("--case", kind, "elastic, perfect-plastic, linear-hardening, irregular or custom");
  app.add_option("--config", config, "key = value configuration file")->check(CLI::ExistingFile);
  auto* h_opt = app.add_option("--h", h, "nominal node spacing [mm]");
  auto* seed_opt = app.add_option("--seed", seed, "node generation seed");
  auto* n_load_opt = app.add_option("--n-load", n_load, "number of load steps");
  auto* p_opt = app.add_option("--pressure", pressure, "inner pressure [GPa]");
  app.add_option("--out", out, "output directory");
  app.add_option("--sweep", sweep, "axis=v1,v2,... with axis h, seed or n_load");
  app.add_option("--export-matrix", export_path, "write the assembled system in Matrix Market format");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? cli::kExitSuccess : cli::kExitConfigError;
  }

  try {
    cli::KeyValues file = config.empty() ? cli::KeyValues{} : cli::read_config_file(config);
    cli::KeyValues overrides;
    if (!kind.empty()) overrides.emplace_back("case", kind);
    if (*h_opt) overrides.emplace_back("h", std::to_string(h));
    if (*seed_opt) overrides.emplace_back("seed", std::to_string(seed));
    if (*n_load_opt) overrides.emplace_back("n_load", std::to_string(n_load));
    if (*p_opt) overrides.emplace_back("pressure", std::to_string(pressure));
    if (!out.empty()) overrides.emplace_back("out", out);
    if (!export_path.empty()) overrides.emplace_back("export_matrix", export_path);
    const cli::RunConfig cfg = cli::parse_config(file, overrides);

    if (!sweep.empty()) {
      const auto [axis, values] = cli::parse_sweep(sweep);
      const auto rows = cli::sweep(cfg, axis, values);
      const std::string path = cfg.out_dir + "/sweep_" + cli::to_string(axis) + ".csv";
      cli::write_sweep(path, axis, rows);
      std::cout << "wrote " << path << "\n";
      for (const auto& r : rows)
        if (!r.converged) return cli::kExitSolverFailure;
      return cli::kExitSuccess;
    }
    return cli::run_case(cfg, std::cout);
  } catch (const cli::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return cli::kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::kExitSolverFailure;
  }
}
