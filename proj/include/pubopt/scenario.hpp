#pragma once

// JSON-configured experiment runs: one experiment per invocation, CSV
// outputs plus a manifest.json in the output directory.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pubopt/isp_multi.hpp"
#include "pubopt/population.hpp"

namespace pubopt {

inline constexpr const char* kVersion = "0.1.0";

enum class Experiment { RateEq, CpGame, MonopolySweep, Duopoly, Oligopoly, BestResponse, Validate };

std::string to_string(Experiment e);
/// Throws ValidationError on an unknown name.
Experiment experiment_from_string(const std::string& name);

struct Grids {
  std::vector<double> kappa;
  std::vector<double> c;
  std::vector<double> nu;
};

struct ScenarioConfig {
  /// Generated population, or the path of a population CSV.
  std::variant<PopulationSpec, std::string> population = default_population_spec();
  Experiment experiment = Experiment::MonopolySweep;
  Grids grids;
  std::vector<IspProfile> isps;
  int focal_id = 0;           ///< BestResponse/Duopoly: the ISP whose strategy is searched
  double total_m = 1.0;       ///< M; each grid nu runs with mu = nu M
  std::string output_path = "out";
  std::uint64_t seed = 1;     ///< population seed and Validate's random stream
  int threads = 0;            ///< 0 = OpenMP default
};

/// Every problem found while reading a config, one entry per field.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Defaults for an experiment: grids, ISP profiles and the default population.
ScenarioConfig default_config(Experiment e);

/// Parses a JSON config. Missing fields take default_config(experiment)
/// values. Throws ConfigError listing every offending field.
ScenarioConfig parse_config(std::string_view json_text);
ScenarioConfig load_config(const std::string& path);

/// Canonical JSON echo of a config (written into the manifest).
std::string config_to_json(const ScenarioConfig& cfg);

/// Throws ConfigError unless grids, shares and ids fit the experiment.
void validate_config(const ScenarioConfig& cfg);

struct RunResult {
  int exit_code = 0;  ///< 0 ok, 1 validation failure, 2 config error, 3 solver failure
  std::vector<std::string> files;
};

/// Runs the experiment, writing CSVs and manifest.json under
/// cfg.output_path (created if missing). Progress and the Validate table go
/// to `log`. Throws ConfigError, ValidationError or SolverError on fatal
/// errors; exit_code_for maps them.
RunResult run(const ScenarioConfig& cfg, std::ostream& log);

int exit_code_for(const std::exception& e);

}  // namespace pubopt
