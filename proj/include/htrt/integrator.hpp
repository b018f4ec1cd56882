#pragma once

// Two-stage semi-implicit time stepping: explicit RK2 predictor/corrector for
// streaming, backward Euler for absorption/emission with a closed-form
// temperature linearization, and a double-minmod slope limiter.

#include <optional>
#include <span>
#include <vector>

#include "htrt/materials.hpp"
#include "htrt/mesh_dg.hpp"
#include "htrt/velocity.hpp"

namespace htrt {

enum class LimiterMode {
  per_stage,  // after the predictor and after the corrector
  per_step,   // after the corrector only
  off
};

/// Extra limiting of each stage's explicit part before the node solves.
enum class ExplicitLimiting {
  off,
  everywhere,
  negative_cells  // only cells with a negative band energy at either node
};

/// Temperature at which the frozen opacity of a node is evaluated.
enum class OpacityEvaluation {
  node,         // the node's own temperature
  cell_average  // the mean of the cell's two nodal temperatures
};

struct StepControl {
  double cfl = 0.3;
  double limiter_alpha = 2.0;
  LimiterMode limiter = LimiterMode::per_stage;
  ExplicitLimiting explicit_limiting = ExplicitLimiting::negative_cells;
  OpacityEvaluation opacity_at = OpacityEvaluation::cell_average;
};

/// Delta t = CFL * dz / (c * rho(A)).
double compute_dt(const Mesh1D& mesh, const Closure& closure, double cfl,
                  const PhysicalConstants& constants);

struct ImplicitNodeProblem {
  /// Everything in the stage update except the collision term.
  std::span<const double> explicit_part;
  double theta_n = 0.0;
  double sigma = 0.0;
  double dt = 0.0;
  Stage stage = Stage::full;
};

/// Solves U = b + c tau (-sigma U + sigma a c theta~^4 e~) for one node, with
/// theta~^4 = p + q * sum_l U_0^(l). Higher moments decouple; the first
/// moments couple only through their sum, which is eliminated in closed form.
/// Writes U into `out` and returns theta~^4.
double implicit_node_solve(const ImplicitNodeProblem& problem,
                           const Closure& closure,
                           const HeatCapacityModel& heat_capacity,
                           const PhysicalConstants& constants,
                           std::span<double> out);

/// sign(a) min(|a|,|b|,|c|) when all three share a sign, else 0.
double minmod(double a, double b, double c);

/// Double-minmod limiting of every moment component, preserving cell
/// averages. Boundary cells see ghost averages built from the boundary
/// conditions. Temperatures are not limited.
void limit(DgField& field, const BoundarySpec& bc, const Closure& closure,
           double alpha);

/// Limits only cells in which some band's zeroth moment is negative at
/// either node.
void limit_negative_cells(DgField& field, const BoundarySpec& bc,
                          const Closure& closure, double alpha);

namespace reference {
void limit(DgField& field, const BoundarySpec& bc, const Closure& closure,
           double alpha);
void limit_negative_cells(DgField& field, const BoundarySpec& bc,
                          const Closure& closure, double alpha);
}  // namespace reference

enum class Execution { parallel, serial };

/// Energy that entered the domain during the last step (erg / cm^2).
struct StepBudget {
  double boundary_inflow = 0.0;
  double source_input = 0.0;
};

class SemiImplicitStepper {
 public:
  SemiImplicitStepper(const Closure& closure, BoundarySpec bc,
                      MaterialModel material, SourceModel source,
                      PhysicalConstants constants, StepControl control,
                      Execution execution = Execution::parallel);

  /// Advances `field` from t to t + dt in place.
  void step(DgField& field, double t, double dt);

  /// Steps from t0 to t1 at the CFL time step, shortening the last step to
  /// land on t1 exactly. Returns the number of steps taken.
  long advance(DgField& field, double t0, double t1);

  double stable_dt(const Mesh1D& mesh) const;

  const StepBudget& last_budget() const { return budget_; }
  /// Cumulative budget over all steps taken by this stepper.
  const StepBudget& total_budget() const { return total_; }

  const Closure& closure() const { return *closure_; }
  const BoundarySpec& boundaries() const { return streaming_.boundaries(); }
  const MaterialModel& material() const { return material_; }
  const PhysicalConstants& constants() const { return constants_; }

 private:
  void prepare(const DgField& field);
  void streaming(const DgField& field, std::span<double> rhs);
  void stage_solve(const DgField& base, std::span<const double> rhs,
                   double source_time, double dt, Stage stage,
                   DgField& out, double t);
  void apply_limiter(DgField& field);
  void limit_explicit(DgField& field);

  const Closure* closure_;
  StreamingOperator streaming_;
  MaterialModel material_;
  SourceModel source_;
  PhysicalConstants constants_;
  StepControl control_;
  Execution execution_;

  std::vector<double> rhs_;
  std::vector<double> sigma_;
  std::vector<double> source_shape_;
  std::optional<DgField> half_;
  std::optional<DgField> explicit_;
  StepBudget budget_;
  StepBudget total_;
};

/// Total radiation plus material energy per unit area (erg / cm^2).
double total_energy(const DgField& field, const Closure& closure,
                    const HeatCapacityModel& heat_capacity,
                    const PhysicalConstants& constants);

}  // namespace htrt
