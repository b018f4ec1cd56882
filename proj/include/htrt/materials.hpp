#pragma once

// Grey material physics: constants, opacity and heat-capacity laws, Planck
// emission, and the implicit temperature algebra used by the time stepper.
//
// Units: cm, s, keV, erg.

namespace htrt {

struct PhysicalConstants {
  double c = 3.0e10;     // cm / s
  double a = 1.372e14;   // erg / cm^3 / keV^4
};

/// Lower clamp on temperatures fed to 1/theta^3 opacities.
inline constexpr double kThetaFloor = 1e-10;

struct OpacityModel {
  enum class Kind { constant, power_law };
  Kind kind = Kind::constant;
  /// sigma_0 in 1/cm for `constant`, kappa in keV^3/cm for `power_law`.
  double coefficient = 0.0;

  static OpacityModel constant(double sigma) { return {Kind::constant, sigma}; }
  static OpacityModel power_law(double kappa) { return {Kind::power_law, kappa}; }
};

/// sigma(theta). Throws DomainError for theta <= 0.
double opacity(const OpacityModel& model, double theta);

struct HeatCapacityModel {
  enum class Kind {
    constant,  // C_v fixed
    cubic      // C_v = 4 a theta^3, so e = a theta^4
  };
  Kind kind = Kind::constant;
  double cv = 0.3e16;  // erg / cm^3 / keV, used by `constant`

  static HeatCapacityModel constant(double cv) { return {Kind::constant, cv}; }
  static HeatCapacityModel cubic() { return {Kind::cubic, 0.0}; }
};

struct MaterialModel {
  OpacityModel opacity;
  HeatCapacityModel heat_capacity;
};

/// Material energy density e(theta) in erg / cm^3.
double material_energy(const HeatCapacityModel& model, double theta,
                       const PhysicalConstants& constants);

/// Box source s(t, z) = amplitude on [z_lo, z_hi] x [t_lo, t_hi], else 0.
struct SourceModel {
  bool active = false;
  double z_lo = 0.0;
  double z_hi = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double amplitude = 0.0;  // erg / cm^3 / s

  double at(double t, double z) const;
  bool on(double t) const { return active && t >= t_lo && t <= t_hi; }
};

/// B(theta) = a c theta^4 / 2.
double planck_b(double theta, const PhysicalConstants& constants);

/// Implicit stage length: half = Delta t / 2 (predictor), full = Delta t.
enum class Stage { half, full };

inline double stage_length(Stage stage, double dt) {
  return stage == Stage::half ? 0.5 * dt : dt;
}

/// Emission theta~^4 as an affine function of the band first-moment sum S:
/// theta~^4 = constant + slope * S. `retained` equals
/// 1 - (2 a c / delta_mu) * slope, evaluated without cancellation.
struct EmissionLaw {
  double constant = 0.0;
  double slope = 0.0;
  double retained = 1.0;

  double operator()(double moment_sum) const {
    return constant + slope * moment_sum;
  }
};

/// Linearized theta^4 for constant C_v, from the first-order Taylor expansion
/// of theta^4 about theta^n combined with the backward-Euler material update.
EmissionLaw linearized_emission(double theta_n, double sigma, double dt,
                                Stage stage, double cv, double delta_mu,
                                const PhysicalConstants& constants);

/// Exact backward-Euler theta^4 for C_v = 4 a theta^3 (linear in w = theta^4).
EmissionLaw cubic_emission(double theta_n, double sigma, double dt,
                           Stage stage, double delta_mu,
                           const PhysicalConstants& constants);

/// Dispatches on the heat-capacity model.
EmissionLaw emission_law(const HeatCapacityModel& model, double theta_n,
                         double sigma, double dt, Stage stage,
                         double delta_mu, const PhysicalConstants& constants);

double linearized_theta4(double theta_n, double moment_sum, double sigma,
                         double dt, Stage stage, double cv, double delta_mu,
                         const PhysicalConstants& constants);

double exact_theta4_cubic(double theta_n, double moment_sum, double sigma,
                          double dt, Stage stage, double delta_mu,
                          const PhysicalConstants& constants);

/// End-of-step temperature from the already updated first moments. Constant
/// C_v uses the linearized update; cubic C_v takes the fourth root of the
/// exact w. A negative moment sum leaves theta unchanged. Throws SolverError if
/// the result is negative or not finite.
double temperature_update(double theta_n, double moment_sum_new, double sigma,
                          double dt, const HeatCapacityModel& model,
                          double delta_mu, const PhysicalConstants& constants);

}  // namespace htrt
