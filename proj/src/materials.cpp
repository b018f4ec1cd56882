#include "htrt/materials.hpp"

#include <cmath>
#include <string>

#include "htrt/errors.hpp"

namespace htrt {

double opacity(const OpacityModel& model, double theta) {
  if (!(theta > 0.0)) {
    throw DomainError("opacity requested at non-positive temperature " +
                      format_number(theta) + " keV");
  }
  switch (model.kind) {
    case OpacityModel::Kind::constant:
      return model.coefficient;
    case OpacityModel::Kind::power_law:
      return model.coefficient / (theta * theta * theta);
  }
  return 0.0;
}

double material_energy(const HeatCapacityModel& model, double theta,
                       const PhysicalConstants& constants) {
  if (model.kind == HeatCapacityModel::Kind::cubic) {
    const double t2 = theta * theta;
    return constants.a * t2 * t2;
  }
  return model.cv * theta;
}

double SourceModel::at(double t, double z) const {
  if (!on(t) || z < z_lo || z > z_hi) return 0.0;
  return amplitude;
}

double planck_b(double theta, const PhysicalConstants& constants) {
  const double t2 = theta * theta;
  return 0.5 * constants.a * constants.c * t2 * t2;
}

EmissionLaw linearized_emission(double theta_n, double sigma, double dt,
                                Stage stage, double cv, double delta_mu,
                                const PhysicalConstants& constants) {
  const double tau = stage_length(stage, dt);
  const double t3 = theta_n * theta_n * theta_n;
  const double denom =
      cv + 4.0 * tau * constants.a * constants.c * sigma * t3;
  return {cv * t3 * theta_n / denom, 2.0 * tau * delta_mu * sigma * t3 / denom,
          cv / denom};
}

EmissionLaw cubic_emission(double theta_n, double sigma, double dt,
                           Stage stage, double delta_mu,
                           const PhysicalConstants& constants) {
  const double tau = stage_length(stage, dt);
  const double w_n = theta_n * theta_n * theta_n * theta_n;
  const double denom = constants.a + tau * sigma * constants.a * constants.c;
  return {constants.a * w_n / denom, 0.5 * tau * sigma * delta_mu / denom,
          constants.a / denom};
}

EmissionLaw emission_law(const HeatCapacityModel& model, double theta_n,
                         double sigma, double dt, Stage stage,
                         double delta_mu, const PhysicalConstants& constants) {
  if (model.kind == HeatCapacityModel::Kind::cubic) {
    return cubic_emission(theta_n, sigma, dt, stage, delta_mu, constants);
  }
  return linearized_emission(theta_n, sigma, dt, stage, model.cv, delta_mu,
                             constants);
}

double linearized_theta4(double theta_n, double moment_sum, double sigma,
                         double dt, Stage stage, double cv, double delta_mu,
                         const PhysicalConstants& constants) {
  return linearized_emission(theta_n, sigma, dt, stage, cv, delta_mu,
                             constants)(moment_sum);
}

double exact_theta4_cubic(double theta_n, double moment_sum, double sigma,
                          double dt, Stage stage, double delta_mu,
                          const PhysicalConstants& constants) {
  return cubic_emission(theta_n, sigma, dt, stage, delta_mu,
                        constants)(moment_sum);
}

double temperature_update(double theta_n, double moment_sum_new, double sigma,
                          double dt, const HeatCapacityModel& model,
                          double delta_mu, const PhysicalConstants& constants) {
  if (moment_sum_new < 0.0) return theta_n;
  double theta = 0.0;
  if (model.kind == HeatCapacityModel::Kind::cubic) {
    const double w = exact_theta4_cubic(theta_n, moment_sum_new, sigma, dt,
                                        Stage::full, delta_mu, constants);
    theta = std::sqrt(std::sqrt(w));
  } else {
    const double ac = constants.a * constants.c;
    const double t3 = theta_n * theta_n * theta_n;
    const double imbalance = 0.5 * delta_mu * moment_sum_new - ac * t3 * theta_n;
    theta = theta_n + sigma * dt * imbalance /
                          (model.cv + 4.0 * dt * ac * sigma * t3);
  }
  if (!(theta >= 0.0) || !std::isfinite(theta)) {
    throw SolverError("temperature update produced theta = " +
                      format_number(theta) + " keV");
  }
  return theta;
}

}  // namespace htrt
