#pragma once

// Run drivers behind the command-line front end: single runs with CSV/JSON
// artifacts, self-convergence sweeps, and suites of configs.

#include <optional>
#include <string>
#include <vector>

#include "htrt/integrator.hpp"
#include "htrt/problems.hpp"

namespace htrt {

struct Snapshot {
  double t = 0.0;
  long steps = 0;  // cumulative
  DgField field;
  std::optional<ErrorNorms> error;
  /// Table references only: RMS of (numeric - table) over the table's peak.
  std::optional<double> rms_over_peak;
};

struct RunResult {
  ProblemSetup setup;
  std::vector<Snapshot> snapshots;  // one per schedule() entry
  long steps = 0;
  double dt = 0.0;
  double wall_seconds = 0.0;
  double energy_initial = 0.0;
  double energy_final = 0.0;
  StepBudget budget;
  /// (final - initial - inflow - source) / max(|initial|, |final|, inputs).
  double conservation_drift = 0.0;
};

/// Runs a setup through its output schedule, scoring each snapshot against
/// the setup's analytic or tabulated reference when it has one. Throws
/// ConfigError for invalid setups and SolverError on solver failure.
RunResult run_setup(const ProblemSetup& setup,
                    Execution execution = Execution::parallel);

/// Errors of the final snapshot against the setup's reference.
std::optional<ErrorNorms> score_snapshot(const ProblemSetup& setup,
                                         const Closure& closure,
                                         const DgField& field, double t,
                                         std::optional<double>* rms_over_peak);

struct ConvergencePoint {
  int cells = 0;
  double l2 = 0.0;
  double linf = 0.0;
};

struct ConvergenceResult {
  ProblemSetup setup;
  int reference_cells = 0;
  std::vector<ConvergencePoint> points;
  /// Least-squares slope of -log2(L2) against log2(cells).
  double slope = 0.0;
  double wall_seconds = 0.0;
};

/// Self-convergence of the cell-averaged material temperature at t_end:
/// each coarse run is compared to the reference run coarsened by pairwise
/// averaging. Every entry of convergence_cells must equal reference_cells
/// divided by a power of two (ConfigError otherwise). Runs use up to `jobs`
/// worker threads.
ConvergenceResult run_convergence(const ProblemSetup& setup, int jobs = 1);

/// Least-squares slope of log2(errors) against log2(cells), negated.
double fitted_slope(const std::vector<int>& cells,
                    const std::vector<double>& errors);

/// Writes `z,E_over_a,theta,theta_rad` at both nodes of every cell.
/// theta_rad is NaN where E < 0.
void write_profile_csv(const std::string& path, const DgField& field,
                       const Closure& closure,
                       const PhysicalConstants& constants);

/// Writes `z,u0,...,u{M-1}` at both nodes of every cell.
void write_moments_csv(const std::string& path, const DgField& field);

std::string summary_json(const RunResult& result,
                         const std::vector<std::string>& csv_files);
std::string convergence_json(const ConvergenceResult& result);

/// Reads a config file, applies `key=value` overrides (dotted keys address
/// nested objects; values parse as JSON, falling back to strings) and
/// returns the setup plus the CLI-only options found in the file.
struct RunConfig {
  ProblemSetup setup;
  bool dump_moments = false;
  std::string mode = "run";  // "run" or "convergence", used by suites
  std::string source_path;
};
RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;

struct CommandOptions {
  std::string output_dir = ".";
  int jobs = 0;  // 0 = hardware threads
  std::vector<std::string> overrides;
  bool quiet = false;
};

int command_run(const std::string& config_path, const CommandOptions& options);
int command_convergence(const std::string& config_path,
                        const CommandOptions& options);
int command_suite(const std::string& directory, const CommandOptions& options);

}  // namespace htrt
