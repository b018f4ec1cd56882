#include "htrt/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>

#include "htrt/errors.hpp"

namespace htrt {

double compute_dt(const Mesh1D& mesh, const Closure& closure, double cfl,
                  const PhysicalConstants& constants) {
  return cfl * mesh.dz() / (constants.c * closure.spectral_radius());
}

double implicit_node_solve(const ImplicitNodeProblem& problem,
                           const Closure& closure,
                           const HeatCapacityModel& heat_capacity,
                           const PhysicalConstants& constants,
                           std::span<double> out) {
  const int n = closure.block_size();
  const int bands = closure.bands();
  const std::span<const double> b = problem.explicit_part;
  const double tau = stage_length(problem.stage, problem.dt);
  const double relax = constants.c * tau * problem.sigma;
  const double gain = 1.0 + relax;
  const double ac = constants.a * constants.c;

  const EmissionLaw emission =
      emission_law(heat_capacity, problem.theta_n, problem.sigma, problem.dt,
                   problem.stage, closure.delta_mu(), constants);

  double b_sum = 0.0;
  for (int j = 0; j < bands; ++j) b_sum += b[j * n];
  const double denom = 1.0 + relax * emission.retained;
  if (!(denom > 0.0)) {
    throw SolverError("implicit node solve: non-positive coupling denominator " +
                      format_number(denom));
  }
  const double moment_sum =
      (b_sum + bands * relax * ac * emission.constant) / denom;
  const double theta4 = emission(moment_sum);
  const double emitted = relax * ac * theta4;

  for (int j = 0; j < bands; ++j) {
    out[j * n] = (b[j * n] + emitted) / gain;
    for (int k = 1; k < n; ++k) out[j * n + k] = b[j * n + k] / gain;
  }
  return theta4;
}

double minmod(double a, double b, double c) {
  if (a > 0.0 && b > 0.0 && c > 0.0) return std::min({a, b, c});
  if (a < 0.0 && b < 0.0 && c < 0.0) return std::max({a, b, c});
  return 0.0;
}

namespace {

// Cell averages plus one ghost average on each side: row i + 1 holds cell i.
std::vector<double> padded_averages(const DgField& field, const BoundarySpec& bc,
                                    const Closure& closure) {
  const int cells = field.cells();
  const int m = field.moments();
  std::vector<double> avg(static_cast<size_t>(cells + 2) * m);
  for (int i = 0; i < cells; ++i) {
    const auto u1 = field.at(i, 0);
    const auto u2 = field.at(i, 1);
    for (int k = 0; k < m; ++k) avg[(i + 1) * m + k] = 0.5 * (u1[k] + u2[k]);
  }
  const std::span<double> all(avg);
  const bool periodic = bc.left.kind == BoundaryCondition::Kind::periodic;
  ghost_state(all.subspan((periodic ? cells : 1) * m, m), Side::left, bc.left,
              closure, all.subspan(0, m));
  ghost_state(all.subspan((periodic ? 1 : cells) * m, m), Side::right, bc.right,
              closure, all.subspan((cells + 1) * m, m));
  return avg;
}

void limit_cell(DgField& field, const std::vector<double>& avg, int i, int m,
                double alpha) {
  auto u1 = field.at(i, 0);
  auto u2 = field.at(i, 1);
  const double* prev = avg.data() + static_cast<size_t>(i) * m;
  const double* mid = prev + m;
  const double* next = mid + m;
  for (int k = 0; k < m; ++k) {
    const double slope = minmod(u2[k] - u1[k], alpha * (mid[k] - prev[k]),
                                alpha * (next[k] - mid[k]));
    u1[k] = mid[k] - 0.5 * slope;
    u2[k] = mid[k] + 0.5 * slope;
  }
}

bool has_negative_energy(const DgField& field, const Closure& closure, int i) {
  const int n = closure.block_size();
  for (int node = 0; node < 2; ++node) {
    const auto u = field.at(i, node);
    for (int j = 0; j < closure.bands(); ++j) {
      if (u[j * n] < 0.0) return true;
    }
  }
  return false;
}

}  // namespace

void limit(DgField& field, const BoundarySpec& bc, const Closure& closure,
           double alpha) {
  const std::vector<double> avg = padded_averages(field, bc, closure);
  const int cells = field.cells();
  const int m = field.moments();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < cells; ++i) limit_cell(field, avg, i, m, alpha);
}

void limit_negative_cells(DgField& field, const BoundarySpec& bc,
                          const Closure& closure, double alpha) {
  const std::vector<double> avg = padded_averages(field, bc, closure);
  const int cells = field.cells();
  const int m = field.moments();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < cells; ++i) {
    if (has_negative_energy(field, closure, i)) limit_cell(field, avg, i, m, alpha);
  }
}

namespace reference {

void limit(DgField& field, const BoundarySpec& bc, const Closure& closure,
           double alpha) {
  const std::vector<double> avg = padded_averages(field, bc, closure);
  for (int i = 0; i < field.cells(); ++i) {
    limit_cell(field, avg, i, field.moments(), alpha);
  }
}

void limit_negative_cells(DgField& field, const BoundarySpec& bc,
                          const Closure& closure, double alpha) {
  const std::vector<double> avg = padded_averages(field, bc, closure);
  for (int i = 0; i < field.cells(); ++i) {
    if (has_negative_energy(field, closure, i)) {
      limit_cell(field, avg, i, field.moments(), alpha);
    }
  }
}

}  // namespace reference

SemiImplicitStepper::SemiImplicitStepper(const Closure& closure,
                                         BoundarySpec bc,
                                         MaterialModel material,
                                         SourceModel source,
                                         PhysicalConstants constants,
                                         StepControl control,
                                         Execution execution)
    : closure_(&closure),
      streaming_(closure, std::move(bc)),
      material_(material),
      source_(source),
      constants_(constants),
      control_(control),
      execution_(execution) {
  if (!(control_.cfl > 0.0)) throw ConfigError("CFL must be positive");
  if (control_.limiter_alpha < 0.0 || control_.limiter_alpha > 2.0) {
    throw ConfigError("limiter alpha must lie in [0, 2]");
  }
}

double SemiImplicitStepper::stable_dt(const Mesh1D& mesh) const {
  return compute_dt(mesh, *closure_, control_.cfl, constants_);
}

void SemiImplicitStepper::prepare(const DgField& field) {
  const int cells = field.cells();
  const size_t nodes = static_cast<size_t>(cells) * 2;
  rhs_.resize(nodes * field.moments());
  sigma_.resize(nodes);
  if (!half_ || half_->cells() != cells ||
      half_->mesh().z_left() != field.mesh().z_left() ||
      half_->mesh().dz() != field.mesh().dz()) {
    half_.emplace(field.mesh(), field.moments());
    explicit_.emplace(field.mesh(), field.moments());

    // Source enters as its cell average at both nodes.
    source_shape_.assign(nodes, 0.0);
    if (source_.active) {
      const Mesh1D& mesh = field.mesh();
      for (int i = 0; i < cells; ++i) {
        const double lo = std::max(mesh.node(i, 0), source_.z_lo);
        const double hi = std::min(mesh.node(i, 1), source_.z_hi);
        const double fraction = std::max(0.0, hi - lo) / mesh.dz();
        source_shape_[2 * i] = fraction;
        source_shape_[2 * i + 1] = fraction;
      }
    }
  }
  const std::vector<double>& theta = field.temperature_data();
  for (size_t p = 0; p < nodes; ++p) {
    const double at =
        control_.opacity_at == OpacityEvaluation::node
            ? theta[p]
            : 0.5 * (theta[p & ~size_t{1}] + theta[p | size_t{1}]);
    sigma_[p] = opacity(material_.opacity, std::max(at, kThetaFloor));
  }
}

void SemiImplicitStepper::streaming(const DgField& field,
                                    std::span<double> rhs) {
  if (execution_ == Execution::serial) {
    reference::streaming_rhs(field, streaming_.boundaries(), *closure_, rhs);
  } else {
    streaming_.apply(field, rhs);
  }
}

void SemiImplicitStepper::apply_limiter(DgField& field) {
  if (execution_ == Execution::serial) {
    reference::limit(field, streaming_.boundaries(), *closure_,
                     control_.limiter_alpha);
  } else {
    limit(field, streaming_.boundaries(), *closure_, control_.limiter_alpha);
  }
}

void SemiImplicitStepper::limit_explicit(DgField& field) {
  if (control_.limiter == LimiterMode::off) return;
  switch (control_.explicit_limiting) {
    case ExplicitLimiting::off:
      return;
    case ExplicitLimiting::everywhere:
      apply_limiter(field);
      return;
    case ExplicitLimiting::negative_cells:
      if (execution_ == Execution::serial) {
        reference::limit_negative_cells(field, streaming_.boundaries(), *closure_,
                                        control_.limiter_alpha);
      } else {
        limit_negative_cells(field, streaming_.boundaries(), *closure_,
                             control_.limiter_alpha);
      }
      return;
  }
}

void SemiImplicitStepper::stage_solve(const DgField& base,
                                      std::span<const double> rhs,
                                      double source_time, double dt,
                                      Stage stage, DgField& out, double t) {
  const int m = base.moments();
  const int n = closure_->block_size();
  const int bands = closure_->bands();
  const long nodes = static_cast<long>(base.cells()) * 2;
  const double c_tau = constants_.c * stage_length(stage, dt);
  const double amplitude =
      source_.on(source_time) ? source_.amplitude : 0.0;
  const bool update_temperature = stage == Stage::full;
  const bool serial = execution_ == Execution::serial;

  DgField& b_field = *explicit_;
  double* b_data = b_field.moment_data().data();
  const double* u_data = base.moment_data().data();
#pragma omp parallel for schedule(static) if (!serial)
  for (long p = 0; p < nodes; ++p) {
    const double* u = u_data + p * m;
    const double* r = rhs.data() + p * m;
    double* b = b_data + p * m;
    for (int k = 0; k < m; ++k) b[k] = u[k] + c_tau * r[k];
    const double s = amplitude * source_shape_[p];
    if (s != 0.0) {
      for (int j = 0; j < bands; ++j) b[j * n] += c_tau * s;
    }
  }
  limit_explicit(b_field);

  std::exception_ptr failure;
  long failed_node = -1;

  auto solve_node = [&](long p) {
    std::span<const double> b(b_data + p * m, static_cast<size_t>(m));
    const double theta_n = base.temperature_data()[p];
    std::span<double> dest(out.moment_data().data() + p * m,
                           static_cast<size_t>(m));
    const double sigma = sigma_[p];
    implicit_node_solve({b, theta_n, sigma, dt, stage}, *closure_,
                        material_.heat_capacity, constants_, dest);
    if (update_temperature) {
      double moment_sum = 0.0;
      for (int j = 0; j < bands; ++j) moment_sum += dest[j * n];
      out.temperature_data()[p] =
          temperature_update(theta_n, moment_sum, sigma, dt,
                             material_.heat_capacity, closure_->delta_mu(),
                             constants_);
    } else {
      out.temperature_data()[p] = theta_n;
    }
  };

  if (serial) {
    for (long p = 0; p < nodes; ++p) {
      try {
        solve_node(p);
      } catch (...) {
        failure = std::current_exception();
        failed_node = p;
        break;
      }
    }
  } else {
#pragma omp parallel for schedule(static)
    for (long p = 0; p < nodes; ++p) {
      try {
        solve_node(p);
      } catch (...) {
#pragma omp critical(htrt_stage_failure)
        {
          if (!failure || p < failed_node) {
            failure = std::current_exception();
            failed_node = p;
          }
        }
      }
    }
  }

  if (failure) {
    const int cell = static_cast<int>(failed_node / 2);
    const int node = static_cast<int>(failed_node % 2);
    try {
      std::rethrow_exception(failure);
    } catch (const std::exception& e) {
      throw SolverError(std::string(e.what()) + " at cell " +
                            std::to_string(cell) + ", node " +
                            std::to_string(node) + ", t = " +
                            format_number(t) + " s",
                        cell, node, t);
    }
  }
}

void SemiImplicitStepper::step(DgField& field, double t, double dt) {
  prepare(field);
  DgField& half = *half_;
  const bool limit_stages = control_.limiter == LimiterMode::per_stage;
  const bool limit_end = control_.limiter != LimiterMode::off;

  // Predictor: t -> t + dt/2.
  streaming(field, rhs_);
  stage_solve(field, rhs_, t, dt, Stage::half, half, t);
  if (limit_stages) apply_limiter(half);

  // Corrector: t -> t + dt with streaming evaluated at the half state.
  streaming(half, rhs_);

  // Energy entering through the two boundary faces during this step.
  {
    const int m = field.moments();
    const int n = closure_->block_size();
    std::vector<double> gl(m), gr(m), fl(m), fr(m);
    streaming_.ghosts(half, gl, gr);
    numerical_flux(gl, half.at(0, 0), *closure_, fl);
    numerical_flux(half.at(half.cells() - 1, 1), gr, *closure_, fr);
    double net = 0.0;
    for (int j = 0; j < closure_->bands(); ++j) net += fl[j * n] - fr[j * n];
    budget_.boundary_inflow = dt * 0.5 * closure_->delta_mu() * net;
  }
  {
    const double mid = t + 0.5 * dt;
    double input = 0.0;
    if (source_.on(mid)) {
      for (double s : source_shape_) input += s;
      input *= 0.5 * field.mesh().dz() * source_.amplitude * dt;
    }
    budget_.source_input = input;
  }

  // The corrector's explicit part is built from U^n, so solve into the half
  // buffer's storage and swap afterwards.
  stage_solve(field, rhs_, t + 0.5 * dt, dt, Stage::full, half, t);
  std::swap(field.moment_data(), half.moment_data());
  std::swap(field.temperature_data(), half.temperature_data());
  if (limit_end) apply_limiter(field);

  total_.boundary_inflow += budget_.boundary_inflow;
  total_.source_input += budget_.source_input;
}

long SemiImplicitStepper::advance(DgField& field, double t0, double t1) {
  const double dt = stable_dt(field.mesh());
  long steps = 0;
  double t = t0;
  while (t1 - t > 1e-12 * dt) {
    double h = std::min(dt, t1 - t);
    step(field, t, h);
    ++steps;
    // Land exactly on t1 regardless of accumulated rounding.
    t = (h == t1 - t) ? t1 : t + h;
    if (!field.all_finite()) {
      throw SolverError("non-finite state after step " + std::to_string(steps),
                        -1, -1, t);
    }
  }
  return steps;
}

double total_energy(const DgField& field, const Closure& closure,
                    const HeatCapacityModel& heat_capacity,
                    const PhysicalConstants& constants) {
  double total = 0.0;
  for (int i = 0; i < field.cells(); ++i) {
    for (int node = 0; node < 2; ++node) {
      total += radiation_energy(field.at(i, node), closure, constants.c) +
               material_energy(heat_capacity, field.theta(i, node), constants);
    }
  }
  return 0.5 * field.mesh().dz() * total;
}

}  // namespace htrt
