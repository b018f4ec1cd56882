#include <doctest.h>

#include <cmath>
#include <limits>

#include "htrt/errors.hpp"
#include "htrt/materials.hpp"

using namespace htrt;

namespace {

const PhysicalConstants kConstants;

// Root of the backward-Euler material balance
//   e(theta) - e(theta_n) = tau sigma (c E - a c theta^4)
// by bisection on theta.
double bisected_temperature(const HeatCapacityModel& model, double theta_n,
                            double c_e, double sigma, double tau) {
  const double ac = kConstants.a * kConstants.c;
  auto f = [&](double theta) {
    return material_energy(model, theta, kConstants) -
           material_energy(model, theta_n, kConstants) -
           tau * sigma * (c_e - ac * std::pow(theta, 4));
  };
  double lo = 0.0;
  double hi = 10.0 * (theta_n + 1.0);
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("opacity laws") {
  CHECK(opacity(OpacityModel::constant(4.0), 0.3) == 4.0);
  CHECK(opacity(OpacityModel::power_law(300.0), 0.5) == doctest::Approx(2400.0));
  CHECK_THROWS_AS(opacity(OpacityModel::power_law(3.0), 0.0), DomainError);
  CHECK_THROWS_AS(opacity(OpacityModel::constant(1.0), -1.0), DomainError);
}

TEST_CASE("planck emission and material energy") {
  CHECK(planck_b(1.0, kConstants) ==
        doctest::Approx(0.5 * kConstants.a * kConstants.c));
  CHECK(planck_b(2.0, kConstants) == doctest::Approx(16.0 * planck_b(1.0, kConstants)));
  CHECK(material_energy(HeatCapacityModel::constant(3.0), 2.0, kConstants) == 6.0);
  CHECK(material_energy(HeatCapacityModel::cubic(), 2.0, kConstants) ==
        doctest::Approx(16.0 * kConstants.a));
}

TEST_CASE("box source support") {
  SourceModel s{true, -0.5, 0.5, 0.0, 1.0, 7.0};
  CHECK(s.at(0.5, 0.0) == 7.0);
  CHECK(s.at(0.5, 0.5) == 7.0);
  CHECK(s.at(0.5, 0.51) == 0.0);
  CHECK(s.at(1.5, 0.0) == 0.0);
  s.active = false;
  CHECK(s.at(0.5, 0.0) == 0.0);
}

TEST_CASE("stage lengths") {
  CHECK(stage_length(Stage::half, 2.0) == 1.0);
  CHECK(stage_length(Stage::full, 2.0) == 2.0);
}

TEST_CASE("cubic heat capacity emission solves the nonlinear balance") {
  const auto model = HeatCapacityModel::cubic();
  const double delta_mu = 1.0;
  for (double theta_n : {0.01, 0.3, 1.0}) {
    for (double sigma : {0.1, 1.0, 1e3}) {
      for (double s_factor : {0.0, 0.5, 2.0}) {
        const double dt = 1e-11;
        const double moment_sum = s_factor * kConstants.a * kConstants.c;
        const double c_e = 0.5 * delta_mu * moment_sum;
        const double w = exact_theta4_cubic(theta_n, moment_sum, sigma, dt,
                                            Stage::full, delta_mu, kConstants);
        const double oracle =
            bisected_temperature(model, theta_n, c_e, sigma, dt);
        CHECK(std::pow(w, 0.25) == doctest::Approx(oracle).epsilon(1e-12));
        CHECK(temperature_update(theta_n, moment_sum, sigma, dt, model,
                                 delta_mu, kConstants) ==
              doctest::Approx(oracle).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("linearized update approaches the nonlinear balance as dt shrinks") {
  const auto model = HeatCapacityModel::constant(0.3e16);
  const double delta_mu = 1.0;
  const double theta_n = 0.5;
  const double sigma = 100.0;
  const double moment_sum = 1.5 * kConstants.a * kConstants.c;
  const double c_e = 0.5 * delta_mu * moment_sum;
  double previous = std::numeric_limits<double>::infinity();
  for (double dt : {1e-12, 5e-13, 2.5e-13, 1.25e-13}) {
    const double linear = temperature_update(theta_n, moment_sum, sigma, dt,
                                             model, delta_mu, kConstants);
    const double oracle = bisected_temperature(model, theta_n, c_e, sigma, dt);
    const double err = std::abs(linear - oracle);
    CHECK(err < 0.3 * previous);
    previous = err;
  }
}

TEST_CASE("emission law is consistent with the temperature update") {
  const double delta_mu = 0.5;
  const double dt = 3e-12;
  for (const auto& model :
       {HeatCapacityModel::constant(0.3e16), HeatCapacityModel::cubic()}) {
    for (double theta_n : {1e-3, 0.2, 0.9}) {
      const double sigma = 300.0 / std::pow(theta_n, 3);
      const double s = 0.7 * kConstants.a * kConstants.c;
      const EmissionLaw law = emission_law(model, theta_n, sigma, dt,
                                           Stage::full, delta_mu, kConstants);
      const double theta = temperature_update(theta_n, s, sigma, dt, model,
                                              delta_mu, kConstants);
      double theta4 = 0.0;
      if (model.kind == HeatCapacityModel::Kind::cubic) {
        theta4 = std::pow(theta, 4);
      } else {
        const double t3 = std::pow(theta_n, 3);
        theta4 = t3 * theta_n + 4.0 * t3 * (theta - theta_n);
      }
      CHECK(law(s) == doctest::Approx(theta4).epsilon(1e-12));
    }
  }
}

TEST_CASE("half stage emission uses half the step") {
  const auto model = HeatCapacityModel::constant(1e15);
  const auto half = emission_law(model, 0.4, 50.0, 2e-12, Stage::half, 1.0, kConstants);
  const auto full = emission_law(model, 0.4, 50.0, 1e-12, Stage::full, 1.0, kConstants);
  CHECK(half.constant == doctest::Approx(full.constant));
  CHECK(half.slope == doctest::Approx(full.slope));
  CHECK(linearized_theta4(0.4, 3.0, 50.0, 1e-12, Stage::full, 1e15, 1.0,
                          kConstants) == doctest::Approx(full(3.0)));
}

TEST_CASE("linearized update never drops below three quarters of theta_n") {
  const double theta = temperature_update(1.0, 0.0, 1e6, 1e-6,
                                          HeatCapacityModel::constant(1e-30),
                                          1.0, kConstants);
  CHECK(theta == doctest::Approx(0.75));
}

TEST_CASE("temperature update keeps theta under a negative moment sum") {
  CHECK(temperature_update(0.2, -1e20, 10.0, 1e-12,
                           HeatCapacityModel::constant(1e15), 1.0,
                           kConstants) == 0.2);
  CHECK(temperature_update(0.2, -1e20, 10.0, 1e-12, HeatCapacityModel::cubic(),
                           1.0, kConstants) == 0.2);
  CHECK_THROWS_AS(temperature_update(0.2, std::nan(""), 10.0, 1e-12,
                                     HeatCapacityModel::cubic(), 1.0,
                                     kConstants),
                  SolverError);
}

TEST_CASE("retained fraction complements the emission slope") {
  for (const auto& model :
       {HeatCapacityModel::constant(0.3e16), HeatCapacityModel::cubic()}) {
    for (double delta_mu : {2.0, 1.0, 0.25}) {
      const EmissionLaw law = emission_law(model, 0.3, 40.0, 1e-12, Stage::half,
                                           delta_mu, kConstants);
      const double ac = kConstants.a * kConstants.c;
      CHECK(law.retained ==
            doctest::Approx(1.0 - 2.0 * ac * law.slope / delta_mu).epsilon(1e-12));
    }
  }
}
