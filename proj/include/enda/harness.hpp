#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "enda/filter.hpp"
#include "enda/metrics.hpp"
#include "enda/observation.hpp"

namespace enda::harness {

inline constexpr const char* kVersion = "enda 0.1.0";

/// Everything a run needs, resolved to concrete values.
struct ExperimentConfig {
  // [system]
  int dimension = 40;
  double forcing = 8.0;
  double dt = 0.01;
  double spin_up_seconds = 9.0;
  int n_cycles = 100;

  // [observation]
  observation::ObservationModel observation;

  // [filter]
  filter::FilterConfig filter;
  double initial_offset = 0.0;  // added to the truth at assimilation start
  double initial_spread = 1.0;  // std of the iid Gaussian initial ensemble

  // top level
  std::uint64_t seed = 0;

  // [output]
  std::string csv_path;      // per-cycle CSV; empty = derive from out dir
  std::string summary_path;  // summary table; empty = derive from out dir
  int window_begin = 1;      // first cycle of the summary window, 1-based
  int window_end = 0;        // last cycle inclusive; 0 = last

  std::string preset_name;  // provenance only

  bool operator==(const ExperimentConfig&) const = default;
};

/// A config plus which defaultable fields were given explicitly, so that
/// finalize() can resolve per-variant defaults (NS inflation 1.05, R from
/// the Gaussian noise variance) only where the user left them open.
struct ParsedConfig {
  ExperimentConfig config;
  bool variant_set = false;
  bool inflation_set = false;
  bool obs_noise_var_set = false;
};

/// Parses the flat key-value config format:
///   seed = 42
///   [system]
///   dimension = 40
/// '#' and ';' start comments. Unknown sections, keys, or malformed values
/// are ConfigErrors.
ParsedConfig parse_config(const std::string& text);

/// Named experiment presets. The filter variant is still chosen separately
/// (config file or --variant).
ParsedConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Resolves defaults and checks every invariant; throws ConfigError with a
/// descriptive message. The vanilla variant is rejected off linear-identity
/// + Gaussian observations unless allow_misspecified is set.
ExperimentConfig finalize(const ParsedConfig& parsed);

enum class RunOutcome { completed, diverged };

struct RunReport {
  ExperimentConfig config;  // echo of the exact configuration used
  metrics::MetricSeries metrics;
  RunOutcome status = RunOutcome::completed;
  int diverged_cycle = 0;  // valid when status == diverged
  std::string version = kVersion;
};

/// Runs one experiment: spin-up, truth generation, initial ensemble, filter
/// loop, metrics and wallclock. Divergence is reported in the status, not
/// thrown. Bit-reproducible for a fixed seed and thread count.
RunReport run_experiment(const ExperimentConfig& cfg);

/// Per-cycle CSV: header "cycle,time,frmse,armse,fcrps,acrps", one row per
/// recorded cycle, 12 significant digits, LF line endings.
void emit_csv(const RunReport& report, std::ostream& out);
void emit_csv(const RunReport& report, const std::string& path);

/// Summary table over one or more runs: plain-text aligned columns plus a
/// machine-readable CSV twin. Rows are ordered by observation kind
/// (linear, exponential, bimodal, cubic, pareto) then variant (CG, NS, V).
/// Diverged runs show "diverged@k" in the metric cells.
std::string summary_table(const std::vector<RunReport>& reports);
std::string summary_csv(const std::vector<RunReport>& reports);
void emit_summary(const std::vector<RunReport>& reports,
                  const std::string& table_path, const std::string& csv_path);

/// Truth trajectory for a config (spin-up applied), for the `truth` command.
model::Trajectory make_truth(const ExperimentConfig& cfg);
void emit_trajectory_csv(const model::Trajectory& traj, std::ostream& out);

std::string variant_name(filter::Variant v);  // CG-EnKF / NS-EnKF / V-EnKF
std::string observation_name(const observation::ObservationModel& m);

}  // namespace enda::harness
