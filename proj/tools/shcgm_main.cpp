#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "shcgm/harness.hpp"

int main(int argc, char** argv) {
  CLI::App app{"projection-free stochastic convex optimization runner"};
  app.require_subcommand(1);

  std::string config_path;
  std::string trace_path;
  std::string column;
  double k_min = 0.0;
  double k_max = 0.0;

  CLI::App* run = app.add_subcommand("run", "run a solver from a config file");
  run->add_option("config", config_path, "key = value config file")->required();

  CLI::App* slope =
      app.add_subcommand("slope", "fit a log-log slope over a trace column");
  slope->add_option("trace", trace_path, "trace CSV written by run")->required();
  slope->add_option("column", column, "column name, e.g. residual")->required();
  slope->add_option("kmin", k_min, "window lower bound")->required();
  slope->add_option("kmax", k_max, "window upper bound")->required();

  CLI::App* validate =
      app.add_subcommand("validate", "check a config file and echo it canonically");
  validate->add_option("config", config_path, "key = value config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return shcgm::run_command(config_path, std::cout, std::cerr);
    if (slope->parsed()) {
      const auto table = shcgm::read_trace_csv(trace_path);
      const auto fit = shcgm::fit_loglog_slope(table, column, k_min, k_max);
      std::printf("slope=%.12g intercept=%.12g r2=%.12g used=%lld skipped=%lld\n",
                  fit.slope, fit.intercept, fit.r2,
                  static_cast<long long>(fit.used),
                  static_cast<long long>(fit.skipped));
      return 0;
    }
    const auto cfg = shcgm::load_config_file(config_path);
    shcgm::validate_config(cfg);
    std::cout << shcgm::serialize_config(cfg);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
