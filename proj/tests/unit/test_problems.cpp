#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "htrt/errors.hpp"
#include "htrt/problems.hpp"

using namespace htrt;
namespace fs = std::filesystem;

namespace {

fs::path scratch_file(const std::string& name, const std::string& contents) {
  const fs::path dir = fs::temp_directory_path() / "htrt_unit";
  fs::create_directories(dir);
  const fs::path p = dir / name;
  std::ofstream(p) << contents;
  return p;
}

}  // namespace

TEST_CASE("every benchmark is valid and survives a JSON round trip") {
  for (const auto& name : benchmark_names()) {
    CAPTURE(name);
    const ProblemSetup s = setup_benchmark(name);
    CHECK(s.name == name);
    CHECK_NOTHROW(s.validate());
    CHECK_NOTHROW(s.boundary_spec(s.closure()));
    const std::string text = serialize_setup(s);
    const ProblemSetup back = parse_setup(text);
    CHECK(serialize_setup(back) == text);
  }
  CHECK_THROWS_AS(setup_benchmark("marshak"), ConfigError);
}

TEST_CASE("benchmark parameters") {
  const auto bilateral = setup_benchmark("bilateral");
  CHECK(bilateral.cells == 500);
  CHECK(bilateral.bands == 2);
  CHECK(bilateral.order == 2);
  CHECK(bilateral.constants.c * bilateral.t_end == doctest::Approx(0.1));

  const auto vacuum = setup_benchmark("vacuum");
  CHECK(vacuum.t_end == 2.5e-11);
  CHECK(vacuum.control.cfl == 0.3);

  const auto diffusive = setup_benchmark("marshak_diffusive");
  CHECK(diffusive.cells == 15);
  CHECK(diffusive.control.cfl == 1.7);
  CHECK(diffusive.material.opacity.coefficient == 300.0);
  CHECK(diffusive.initial_temperature.theta0 == 1e-4);
  const auto schedule = diffusive.schedule();
  REQUIRE(schedule.size() == 3);
  CHECK(schedule[0] == 1e-8);
  CHECK(schedule[2] == 1e-7);

  const auto thin = setup_benchmark("marshak_thin");
  CHECK(thin.z_right == 0.35);
  CHECK(thin.material.opacity.coefficient == 3.0);
  CHECK(thin.t_end == 1e-9);

  const auto su = setup_benchmark("su_olson");
  CHECK(su.source.z_lo == -0.5);
  CHECK(su.source.z_hi == 0.5);
  CHECK(su.left.kind == BoundarySetup::Kind::periodic);
}

TEST_CASE("config parsing") {
  SUBCASE("overrides apply on top of a benchmark") {
    const auto s = parse_setup(
        R"({"benchmark": "vacuum", "bands": 4, "order": 3, "cells": 50,
            "material": {"opacity": {"kind": "constant", "coefficient": 2.5}}})");
    CHECK(s.bands == 4);
    CHECK(s.order == 3);
    CHECK(s.cells == 50);
    CHECK(s.material.opacity.coefficient == 2.5);
    CHECK(s.t_end == 2.5e-11);
  }
  SUBCASE("ct units convert with the configured speed of light") {
    const auto s = parse_setup(
        R"({"benchmark": "su_olson", "constants": {"c": 2.0}, "ct_end": 3.0,
            "output_ct": [1.0]})");
    CHECK(s.t_end == 1.5);
    REQUIRE(s.output_times.size() == 1);
    CHECK(s.output_times[0] == 0.5);
  }
  SUBCASE("infinite bounds round trip as strings") {
    const auto s = parse_setup(
        R"({"initial_intensity": [{"kind": "isotropic", "value": 1.0,
            "z_lo": "-inf", "z_hi": 0.5}]})");
    REQUIRE(s.initial_intensity.size() == 1);
    CHECK(std::isinf(s.initial_intensity[0].z_lo));
    CHECK(s.initial_intensity[0].z_hi == 0.5);
  }
  SUBCASE("errors name the offending field") {
    try {
      parse_setup(R"({"material": {"opacity": {"coefficent": 1}}})");
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("coefficent") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_setup(R"({"cells": "many"})"), ConfigError);
    CHECK_THROWS_AS(parse_setup(R"({"cells": 0})"), ConfigError);
    CHECK_THROWS_AS(parse_setup(R"({"t_end": 1, "ct_end": 1})"), ConfigError);
    CHECK_THROWS_AS(parse_setup(R"({"limiter": "sometimes"})"), ConfigError);
    CHECK_THROWS_AS(parse_setup(R"({"benchmark": "nope"})"), ConfigError);
    CHECK_THROWS_AS(parse_setup("{not json"), ConfigError);
    CHECK_THROWS_AS(parse_setup(R"({"left": {"kind": "periodic"}})"), ConfigError);
  }
}

TEST_CASE("initial projection preserves cell means") {
  ProblemSetup s;
  s.cells = 10;
  s.bands = 2;
  s.order = 1;
  IntensityPiece step;
  step.value = 4.0;
  step.z_lo = 0.33;
  s.initial_intensity.push_back(step);
  s.initial_temperature = {TemperatureSetup::Kind::equilibrium, 0.0};
  const Closure closure = s.closure();
  const DgField f = initial_field(s, closure);
  const PhysicalConstants& k = s.constants;
  // Cell 3 covers [0.3, 0.4], of which 0.07 cm is lit.
  const double e_mean =
      0.5 * (node_energy_over_a(f, closure, k, 0)[3] +
             node_energy_over_a(f, closure, k, 1)[3]);
  CHECK(e_mean == doctest::Approx(0.7 * 2.0 * 4.0 / (k.a * k.c)));
  CHECK(node_energy_over_a(f, closure, k, 0)[8] ==
        doctest::Approx(8.0 / (k.a * k.c)));
  CHECK(node_energy_over_a(f, closure, k, 1)[1] == 0.0);
  CHECK(f.theta(8, 0) == doctest::Approx(std::pow(8.0 / (k.a * k.c), 0.25)));
  CHECK(f.theta(0, 0) == 0.0);
}

TEST_CASE("forward beam pieces carry unit angular weight") {
  IntensityPiece beam;
  beam.kind = IntensityPiece::Kind::forward_beam;
  beam.value = 6.0;
  const PhysicalConstants k;
  CHECK(beam.energy_over_a(0.0, k) == doctest::Approx(6.0 / (k.a * k.c)));
  const auto shape = beam.angular_shape();
  REQUIRE(shape.diracs.size() == 1);
  CHECK(shape.diracs[0].location == 1.0);
}

TEST_CASE("smooth front profile") {
  IntensityPiece front;
  front.kind = IntensityPiece::Kind::smooth_front;
  front.value = 1.0;
  CHECK(front.amplitude(0.25) == doctest::Approx(1.0 - 0.498));
  CHECK(front.amplitude(0.0) == doctest::Approx(1.0 - 0.498 * (1.0 + std::tanh(-12.5))));
  CHECK(front.amplitude(0.8) == doctest::Approx(0.004).epsilon(1e-6));
}

TEST_CASE("inflow boundaries are sampled at the boundary position") {
  ProblemSetup s = setup_benchmark("marshak_smooth");
  const Closure closure = s.closure();
  const BoundarySpec bc = s.boundary_spec(closure);
  REQUIRE(bc.left.kind == BoundaryCondition::Kind::dirichlet);
  CHECK(bc.right.kind == BoundaryCondition::Kind::vacuum);
  const double amp = s.left.inflow.amplitude(0.0);
  CHECK(bc.left.inflow[0] == doctest::Approx(2.0 * amp));
  CHECK(std::abs(bc.left.inflow[1]) < 1e-12 * amp);
}

TEST_CASE("exact bilateral profile") {
  const double c = 3e10;
  const double t = 0.1 / c;
  CHECK(exact_bilateral_E(t, 0.1, c) == 1.0);
  CHECK(exact_bilateral_E(t, 0.3, c) == 1.0);
  CHECK(exact_bilateral_E(t, 0.5, c) == 0.0);
  CHECK(exact_bilateral_E(t, 0.8, c) == doctest::Approx(0.5));
  CHECK(exact_bilateral_E(t, 0.95, c) == 1.0);
  CHECK_THROWS_AS(exact_bilateral_E(0.0, 0.5, c), DomainError);
  CHECK_THROWS_AS(exact_bilateral_E(0.3 / c, 0.5, c), DomainError);
}

TEST_CASE("exact vacuum profile integrates the lit directions") {
  const double c = 3e10;
  const double t = 0.75 / c;
  for (double z : {0.0, 0.1, 0.37, 0.74, 0.9}) {
    // E/a = (1/ac) int_{z/ct}^1 ac dmu
    const int n = 4000;
    const double lo = std::min(1.0, z / (c * t));
    double integral = 0.0;
    for (int i = 0; i < n; ++i) integral += (1.0 - lo) / n;
    CHECK(exact_vacuum_E(t, z, c) == doctest::Approx(integral).epsilon(1e-9));
  }
  CHECK(exact_vacuum_E(t, -0.1, c) == 1.0);
}

TEST_CASE("error norms") {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> b{1.0, 2.5, 3.0, 2.0};
  const auto unit = error_norms(a, b);
  CHECK(unit.linf == 2.0);
  CHECK(unit.l2 == doctest::Approx(std::sqrt((0.25 + 4.0) / 4.0)));
  const auto scaled = error_norms(a, b, 2.0, NormScaling::length, 0.35);
  CHECK(scaled.linf == 1.0);
  CHECK(scaled.l2 == doctest::Approx(std::sqrt(0.35 * (0.0625 + 1.0) / 4.0)));
  CHECK_THROWS_AS(error_norms(a, {1.0}), DomainError);
}

TEST_CASE("coarsening averages neighbouring pairs") {
  const auto c = coarsen_reference({1.0, 3.0, 5.0, 9.0});
  REQUIRE(c.size() == 2);
  CHECK(c[0] == 2.0);
  CHECK(c[1] == 7.0);
  CHECK_THROWS_AS(coarsen_reference({1.0, 2.0, 3.0}), DomainError);
}

TEST_CASE("radiation temperature") {
  CHECK(radiation_temperature(16.0 * 3.0, 3.0) == doctest::Approx(2.0));
  CHECK(radiation_temperature(0.0, 3.0) == 0.0);
  CHECK_THROWS_AS(radiation_temperature(-1.0, 3.0), DomainError);
}

TEST_CASE("reference tables") {
  SUBCASE("bundled Su-Olson data") {
    const auto table =
        load_reference_table(resolve_data_path("su_olson_transport.dat"));
    REQUIRE(table.slices.size() == 3);
    CHECK(table.slices[0].ct == doctest::Approx(1.0));
    CHECK(table.nearest(3.0).ct == doctest::Approx(3.16228));
    CHECK(table.nearest(50.0).ct == doctest::Approx(10.0));
    for (const auto& s : table.slices) {
      CHECK(s.z.size() == s.e_over_a.size());
      CHECK(s.z.size() > 5);
    }
  }
  SUBCASE("malformed files") {
    CHECK_THROWS_AS(load_reference_table("/nonexistent/table.dat"), ConfigError);
    CHECK_THROWS_AS(
        load_reference_table(scratch_file("short.dat", "1 0.1 0.2\n").string()),
        ConfigError);
    CHECK_THROWS_AS(load_reference_table(
                        scratch_file("order.dat", "1 0.2 1 1\n1 0.1 1 1\n").string()),
                    ConfigError);
    CHECK_THROWS_AS(load_reference_table(scratch_file("empty.dat", "# x\n").string()),
                    ConfigError);
    const auto ok = load_reference_table(
        scratch_file("ok.dat", "# c\n1 0.1 1 1 # tail\n1 0.2 2 1\n2 0.1 3 1\n")
            .string());
    CHECK(ok.slices.size() == 2);
    CHECK(ok.slices[0].e_over_a[1] == 2.0);
  }
}

TEST_CASE("sampling a DG field") {
  const Closure closure(2, 1);
  const PhysicalConstants k;
  DgField f(Mesh1D(0.0, 1.0, 4), closure.size());
  // E/a = 1 + z at every node, except a jump at z = 0.5.
  for (int i = 0; i < 4; ++i) {
    for (int node = 0; node < 2; ++node) {
      const double z = f.mesh().node(i, node);
      double target = 1.0 + z;
      if (i == 2 && node == 0) target += 1.0;
      const double u0 = target * k.a * k.c;  // sum over two bands = 2 u0
      f.at(i, node)[0] = u0;
      f.at(i, node)[2] = u0;
      f.theta(i, node) = z;
    }
  }
  CHECK(sample_energy_over_a(f, closure, k, 0.1) == doctest::Approx(1.1));
  CHECK(sample_energy_over_a(f, closure, k, 0.5) == doctest::Approx(2.0));
  CHECK(sample_energy_over_a(f, closure, k, -1.0) == doctest::Approx(1.0));
  CHECK(sample_energy_over_a(f, closure, k, 2.0) == doctest::Approx(2.0));
  const auto left = node_energy_over_a(f, closure, k, 0);
  CHECK(left[2] == doctest::Approx(2.5));
  const auto theta = cell_temperature(f);
  CHECK(theta[1] == doctest::Approx(0.375));
}

TEST_CASE("schedule ends at t_end") {
  ProblemSetup s;
  s.t_end = 3.0;
  s.output_times = {2.0, 1.0, 2.0, 5.0};
  const auto times = s.schedule();
  REQUIRE(times.size() == 3);
  CHECK(times[0] == 1.0);
  CHECK(times[1] == 2.0);
  CHECK(times[2] == 3.0);
}
