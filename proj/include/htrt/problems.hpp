#pragma once

// Benchmark configurations, their reference solutions, error norms, and the
// coarsening projection used for self-convergence studies.

#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "htrt/integrator.hpp"
#include "htrt/materials.hpp"
#include "htrt/mesh_dg.hpp"
#include "htrt/velocity.hpp"

namespace htrt {

inline const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names = {
      "bilateral",         "vacuum",       "su_olson",
      "marshak_diffusive", "marshak_thin", "marshak_smooth"};
  return names;
}

/// One piece of an intensity field I(z, mu), active on [z_lo, z_hi].
struct IntensityPiece {
  enum class Kind {
    isotropic,     // I = value
    forward_beam,  // I = value * delta(mu - 1)
    smooth_front   // I = value * [1 - depth (1 + tanh(steepness (z - center)))]
  };
  Kind kind = Kind::isotropic;
  double value = 0.0;
  double z_lo = -std::numeric_limits<double>::infinity();
  double z_hi = std::numeric_limits<double>::infinity();
  double depth = 0.498;
  double steepness = 50.0;
  double center = 0.25;

  bool covers(double z) const { return z >= z_lo && z <= z_hi; }
  /// value times the spatial shape at z, or 0 outside [z_lo, z_hi].
  double amplitude(double z) const;
  /// Angular dependence with unit amplitude.
  AngularIntensity angular_shape() const;
  /// E(z) / a implied by this piece.
  double energy_over_a(double z, const PhysicalConstants& constants) const;
};

struct BoundarySetup {
  enum class Kind { vacuum, reflective, periodic, inflow };
  Kind kind = Kind::vacuum;
  /// Outside intensity for `inflow`, sampled at the boundary position.
  IntensityPiece inflow;
};

struct TemperatureSetup {
  enum class Kind {
    uniform,     // theta = theta0
    equilibrium  // theta = (E / a)^(1/4) of the initial radiation
  };
  Kind kind = Kind::uniform;
  double theta0 = 0.0;
};

enum class ReferenceKind {
  none,
  bilateral,  // exact piecewise E/a
  vacuum,     // exact 1 - z/(ct)
  table,      // tabulated (ct, z, E/a, theta) dataset
  self        // finer run of the same setup
};

enum class NormScaling {
  unit,   // weight 1 / N
  length  // weight length / N
};

struct ProblemSetup {
  std::string name;
  double z_left = 0.0;
  double z_right = 1.0;
  int cells = 100;
  int bands = 2;
  int order = 2;
  bool allow_zero_eigenvalue = false;
  MaterialModel material;
  SourceModel source;
  BoundarySetup left;
  BoundarySetup right;
  std::vector<IntensityPiece> initial_intensity;
  TemperatureSetup initial_temperature;
  double t_end = 0.0;                // s
  std::vector<double> output_times;  // s; t_end is always written
  StepControl control;
  ReferenceKind reference = ReferenceKind::none;
  std::string reference_table;  // file name, resolved against the data dir
  NormScaling norm = NormScaling::unit;
  /// Self-convergence: finest mesh and the coarse meshes compared to it.
  int reference_cells = 0;
  std::vector<int> convergence_cells;
  PhysicalConstants constants;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  Mesh1D mesh() const { return {z_left, z_right, cells}; }
  Closure closure() const;
  BoundarySpec boundary_spec(const Closure& closure) const;
  /// Output times in ascending order, ending with t_end.
  std::vector<double> schedule() const;
};

/// Throws ConfigError for an unknown name.
ProblemSetup setup_benchmark(std::string_view name);

/// Serializes every field, so parse_setup(serialize_setup(s)) reproduces s.
std::string serialize_setup(const ProblemSetup& setup);

/// Parses a JSON document. A "benchmark" key selects the starting setup;
/// every other recognized key overrides one field. Times may be given in
/// seconds ("t_end", "output_times") or as ct in cm ("ct_end", "output_ct").
/// Unknown keys are rejected.
ProblemSetup parse_setup(std::string_view json);

/// Per-cell L2 projection of the initial intensity and temperature onto the
/// nodal P1 basis.
DgField initial_field(const ProblemSetup& setup, const Closure& closure);

/// Exact E/a of the bilateral problem. Throws DomainError unless
/// 0 < ct < 0.3.
double exact_bilateral_E(double t, double z, double c);

/// Exact E/a of vacuum streaming from an isotropic left inflow.
double exact_vacuum_E(double t, double z, double c);

struct ErrorNorms {
  double l2 = 0.0;
  double linf = 0.0;
};

/// L2 = sqrt(weight * sum (diff/scale)^2) and Linf = max |diff|/scale, with
/// weight = 1/N (unit) or length/N (length).
ErrorNorms error_norms(const std::vector<double>& numeric,
                       const std::vector<double>& reference,
                       double scale = 1.0, NormScaling scaling = NormScaling::unit,
                       double length = 1.0);

/// Pairwise averages of an even-length array.
std::vector<double> coarsen_reference(const std::vector<double>& fine);

/// (E/a)^(1/4). Throws DomainError for E < 0.
double radiation_temperature(double E, double a);

/// A tabulated reference: rows grouped by time slice, ascending z.
struct ReferenceTable {
  struct Slice {
    double ct = 0.0;
    std::vector<double> z;
    std::vector<double> e_over_a;
    std::vector<double> theta;
  };
  std::vector<Slice> slices;

  /// Slice whose ct is closest to the requested one.
  const Slice& nearest(double ct) const;
};

/// Reads `ct z E_over_a theta` rows. Throws ConfigError for a missing file,
/// malformed rows, or a slice that is not strictly increasing in z.
ReferenceTable load_reference_table(const std::string& path);

/// Directory holding bundled datasets: $HTRT_DATA_DIR if set, else the
/// source tree's data/ directory.
std::string data_directory();

/// Resolves a table name: absolute or existing paths are kept, otherwise it
/// is looked up in data_directory().
std::string resolve_data_path(const std::string& name);

/// Evaluates the piecewise-linear DG solution at z (average of the two
/// traces on a cell interface).
double sample_energy_over_a(const DgField& field, const Closure& closure,
                            const PhysicalConstants& constants, double z);

/// E/a at node 0 (left end) or node 1 (right end) of every cell.
std::vector<double> node_energy_over_a(const DgField& field,
                                       const Closure& closure,
                                       const PhysicalConstants& constants,
                                       int node);

/// Cell averages of theta.
std::vector<double> cell_temperature(const DgField& field);

}  // namespace htrt
