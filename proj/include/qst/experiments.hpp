#pragma once

// Experiment driver: JSON configuration, CSV emission, ensemble sweeps and
// the power-law fit.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "qst/xsector.hpp"

namespace qst {

inline constexpr const char* kVersion = QST_VERSION;

/// Schema or parse failure; the message carries a line number or a field path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string experiment;
  std::string preset = "heisenberg";  // heisenberg | xy | engineered | custom
  int n = 20;
  double j = 1.0;
  double b = 0.0;
  std::vector<double> hops;
  std::vector<double> onsite;
  std::map<std::string, double> protocol;  // experiment-specific numeric parameters
  int samples = 10;
  std::uint64_t seed = 1;
  std::string output;
  double dt = 0.0;     // 0 -> default_dt
  double t_max = 0.0;  // 0 -> experiment default
  std::string raw;     // resolved config, echoed into CSV headers

  ChainSpec chain() const;
  double param(const std::string& key, double fallback) const;
};

/// Known experiment names, in CLI order.
const std::vector<std::string>& experiment_names();

/// Parses and validates a JSON document; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text, const std::string& experiment_hint = "");
ExperimentConfig load_config(const std::string& path, const std::string& experiment_hint = "");
/// Config with all defaults for an experiment.
ExperimentConfig default_config(const std::string& experiment);
/// JSON echo of the resolved configuration.
std::string resolved_json(const ExperimentConfig& cfg);

struct CsvTable {
  std::vector<std::string> comments;  // written as '# ...' lines
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

void write_csv(std::ostream& os, const CsvTable& table);
/// Parses a table written by write_csv; throws std::runtime_error on malformed input.
CsvTable read_csv(std::istream& is);
/// Column names fixed per experiment.
std::vector<std::string> csv_columns(const std::string& experiment);

struct ScalingPoint {
  int n = 0;
  double p = 0.0;  // failure probability
  double t = 0.0;
};

struct FitResult {
  double a = 0.0;
  double b = 0.0;
  double residual_rms = 0.0;
  int n_min = 0;
  int n_max = 0;
  std::size_t points = 0;
};

/// Least squares on log t = log a + b log N + log|ln P|.
FitResult fit_scaling(const std::vector<ScalingPoint>& points);

struct Realization {
  std::uint64_t seed = 0;
  double t = 0.0;
  int m = 0;
  double failure = 1.0;
  bool reached = false;
};

struct DisorderStats {
  double mean_t = 0.0, std_t = 0.0;
  double mean_m = 0.0, std_m = 0.0;
  int unreached = 0;
  std::vector<Realization> runs;  // in index order
};

struct DisorderOptions {
  int n = 20;
  double j = 1.0;
  double delta = 0.05;
  double c = 0.5;
  int samples = 10;
  double target_failure = 0.01;
  double window = 0.0;  // 0 -> N/J
  int max_steps = 2000;
  std::uint64_t seed = 1;
  int workers = 1;
};

/// Two independently disordered Heisenberg chains per realization (seed
/// derive_seed(seed, i)); std is the sample standard deviation over reached runs.
DisorderStats disorder_table(const DisorderOptions& opt);

/// Clean dual-rail time to reach failure P on two identical Heisenberg chains.
Realization clean_dual_rail(int n, double target_failure, double window = 0.0);

struct RunResult {
  CsvTable table;
  int exit_code = 0;  // 0 ok, 3 target unreached
  std::string message;
};

/// Runs one experiment; `workers` is used by ensemble experiments only.
RunResult run_experiment(const ExperimentConfig& cfg, int workers = 1);

}  // namespace qst
