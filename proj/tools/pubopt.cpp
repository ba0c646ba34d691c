// Command-line driver: pubopt --config run.json [--seed N] [--out DIR]
// [--threads N] [--experiment NAME]

#include <CLI11.hpp>
#include <iostream>

#include "pubopt/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Two-class ISP pricing experiments"};
  std::string config_path, out_dir, experiment;
  std::uint64_t seed = 0;
  int threads = -1;
  app.add_option("--config", config_path, "JSON scenario config (defaults apply when omitted)");
  auto* seed_opt = app.add_option("--seed", seed, "population seed, overrides the config");
  app.add_option("--out", out_dir, "output directory, overrides the config");
  app.add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  app.add_option("--experiment", experiment,
                 "RateEq, CpGame, MonopolySweep, Duopoly, Oligopoly, BestResponse or Validate");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    pubopt::ScenarioConfig cfg;
    if (!config_path.empty()) {
      cfg = pubopt::load_config(config_path);
      if (!experiment.empty()) {
        // Switch experiment but keep everything the file set explicitly.
        cfg.experiment = pubopt::experiment_from_string(experiment);
        const auto d = pubopt::default_config(cfg.experiment);
        if (cfg.grids.kappa.empty()) cfg.grids.kappa = d.grids.kappa;
        if (cfg.grids.c.empty()) cfg.grids.c = d.grids.c;
        if (cfg.grids.nu.empty()) cfg.grids.nu = d.grids.nu;
        if (cfg.isps.empty()) cfg.isps = d.isps;
      }
    } else {
      cfg = pubopt::default_config(experiment.empty() ? pubopt::Experiment::Validate
                                                      : pubopt::experiment_from_string(experiment));
    }
    if (*seed_opt) cfg.seed = seed;
    if (!out_dir.empty()) cfg.output_path = out_dir;
    if (threads >= 0) cfg.threads = threads;
    pubopt::validate_config(cfg);

    const auto r = pubopt::run(cfg, std::cout);
    for (const auto& f : r.files) std::cout << "wrote " << f << "\n";
    return r.exit_code;
  } catch (const pubopt::ConfigError& e) {
    std::cerr << "config error:\n";
    for (const auto& p : e.problems()) std::cerr << "  " << p << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pubopt::exit_code_for(e);
  }
}
