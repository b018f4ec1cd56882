#include "htrt/problems.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "htrt/errors.hpp"

#ifndef HTRT_DEFAULT_DATA_DIR
#define HTRT_DEFAULT_DATA_DIR "data"
#endif

namespace htrt {

using nlohmann::json;

double IntensityPiece::amplitude(double z) const {
  if (!covers(z)) return 0.0;
  if (kind == Kind::smooth_front) {
    return value * (1.0 - depth * (1.0 + std::tanh(steepness * (z - center))));
  }
  return value;
}

AngularIntensity IntensityPiece::angular_shape() const {
  if (kind == Kind::forward_beam) return AngularIntensity{{}, {{1.0, 1.0}}};
  return isotropic_intensity(1.0);
}

double IntensityPiece::energy_over_a(double z,
                                     const PhysicalConstants& constants) const {
  const double angular = kind == Kind::forward_beam ? 1.0 : 2.0;
  return angular * amplitude(z) / (constants.a * constants.c);
}

void ProblemSetup::validate() const {
  if (!(z_left < z_right)) throw ConfigError("z_left must be less than z_right");
  if (cells < 1) throw ConfigError("cells must be at least 1");
  if (bands < 1) throw ConfigError("bands must be at least 1");
  if (order < 0) throw ConfigError("order must be non-negative");
  if (!(t_end >= 0.0) || !std::isfinite(t_end)) {
    throw ConfigError("t_end must be finite and non-negative");
  }
  for (double t : output_times) {
    if (!(t >= 0.0)) throw ConfigError("output_times must be non-negative");
  }
  if (!(control.cfl > 0.0)) throw ConfigError("cfl must be positive");
  if (control.limiter_alpha < 0.0 || control.limiter_alpha > 2.0) {
    throw ConfigError("limiter_alpha must lie in [0, 2]");
  }
  if (material.opacity.coefficient < 0.0) {
    throw ConfigError("material.opacity.coefficient must be non-negative");
  }
  if (material.heat_capacity.kind == HeatCapacityModel::Kind::constant &&
      !(material.heat_capacity.cv > 0.0)) {
    throw ConfigError("material.heat_capacity.cv must be positive");
  }
  if (initial_temperature.theta0 < 0.0) {
    throw ConfigError("initial_temperature.theta0 must be non-negative");
  }
  if (material.opacity.kind == OpacityModel::Kind::power_law &&
      initial_temperature.kind == TemperatureSetup::Kind::uniform &&
      !(initial_temperature.theta0 > 0.0)) {
    throw ConfigError(
        "power-law opacity requires a positive initial_temperature.theta0");
  }
  if ((left.kind == BoundarySetup::Kind::periodic) !=
      (right.kind == BoundarySetup::Kind::periodic)) {
    throw ConfigError("periodic boundaries must be set on both sides");
  }
  if (source.active && !(source.z_lo <= source.z_hi)) {
    throw ConfigError("source.z_lo must not exceed source.z_hi");
  }
  if (reference == ReferenceKind::table && reference_table.empty()) {
    throw ConfigError("reference_table is required for a table reference");
  }
  if (reference_cells < 0) throw ConfigError("reference_cells must be >= 0");
  for (int n : convergence_cells) {
    if (n < 1) throw ConfigError("convergence_cells entries must be positive");
  }
}

Closure ProblemSetup::closure() const {
  return Closure(bands, order,
                 allow_zero_eigenvalue ? ZeroEigenvaluePolicy::allow
                                       : ZeroEigenvaluePolicy::reject);
}

namespace {

BoundaryCondition to_condition(const BoundarySetup& b, double z,
                               const Closure& closure) {
  switch (b.kind) {
    case BoundarySetup::Kind::vacuum:
      return BoundaryCondition::vacuum();
    case BoundarySetup::Kind::reflective:
      return BoundaryCondition::reflective();
    case BoundarySetup::Kind::periodic:
      return BoundaryCondition::periodic();
    case BoundarySetup::Kind::inflow: {
      std::vector<double> u =
          project_intensity(b.inflow.angular_shape(), closure);
      const double amp = b.inflow.amplitude(z);
      for (double& x : u) x *= amp;
      return BoundaryCondition::dirichlet(std::move(u));
    }
  }
  return BoundaryCondition::vacuum();
}

}  // namespace

BoundarySpec ProblemSetup::boundary_spec(const Closure& closure) const {
  BoundarySpec spec{to_condition(left, z_left, closure),
                    to_condition(right, z_right, closure)};
  spec.validate(closure);
  return spec;
}

std::vector<double> ProblemSetup::schedule() const {
  std::vector<double> times;
  for (double t : output_times) {
    if (t < t_end) times.push_back(t);
  }
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  times.push_back(t_end);
  return times;
}

ProblemSetup setup_benchmark(std::string_view name) {
  const PhysicalConstants k;
  const double ac = k.a * k.c;
  ProblemSetup s;
  s.name = std::string(name);
  s.material.heat_capacity = HeatCapacityModel::constant(0.3e16);
  s.material.opacity = OpacityModel::constant(0.0);

  using Kind = IntensityPiece::Kind;
  auto inflow = [](Kind kind, double value) {
    BoundarySetup b;
    b.kind = BoundarySetup::Kind::inflow;
    b.inflow.kind = kind;
    b.inflow.value = value;
    return b;
  };

  if (name == "bilateral") {
    s.z_left = 0.0;
    s.z_right = 1.0;
    s.cells = 500;
    IntensityPiece beam{Kind::forward_beam, ac};
    beam.z_hi = 0.2;
    IntensityPiece back{Kind::isotropic, 0.5 * ac};
    back.z_lo = 0.8;
    s.initial_intensity = {beam, back};
    s.left = inflow(Kind::forward_beam, ac);
    s.right = inflow(Kind::isotropic, 0.5 * ac);
    s.t_end = 0.1 / k.c;
    s.reference = ReferenceKind::bilateral;
  } else if (name == "vacuum") {
    s.z_left = 0.0;
    s.z_right = 1.0;
    s.cells = 100;
    s.bands = 8;
    s.order = 1;
    s.left = inflow(Kind::isotropic, ac);
    s.t_end = 2.5e-11;
    s.reference = ReferenceKind::vacuum;
    s.convergence_cells = {25, 50, 100, 200};
  } else if (name == "su_olson") {
    const double ct_end = 1.0;
    s.z_left = -(ct_end + 1.0);
    s.z_right = ct_end + 1.0;
    s.cells = 100;
    s.material.opacity = OpacityModel::constant(1.0);
    s.material.heat_capacity = HeatCapacityModel::cubic();
    s.source.active = true;
    s.source.z_lo = -0.5;
    s.source.z_hi = 0.5;
    s.source.t_lo = 0.0;
    s.source.t_hi = std::numeric_limits<double>::infinity();
    s.source.amplitude = ac;
    s.left.kind = BoundarySetup::Kind::periodic;
    s.right.kind = BoundarySetup::Kind::periodic;
    s.t_end = ct_end / k.c;
    s.reference = ReferenceKind::table;
    s.reference_table = "su_olson_transport.dat";
  } else if (name == "marshak_diffusive") {
    const double theta0 = 1e-4;
    s.z_left = 0.0;
    s.z_right = 0.6;
    s.cells = 15;
    s.material.opacity = OpacityModel::power_law(300.0);
    s.initial_intensity = {
        IntensityPiece{Kind::isotropic, 0.5 * ac * std::pow(theta0, 4)}};
    s.initial_temperature = {TemperatureSetup::Kind::uniform, theta0};
    s.left = inflow(Kind::isotropic, 0.5 * ac);
    s.t_end = 1e-7;
    s.output_times = {1e-8, 5e-8};
    s.control.cfl = 1.7;
  } else if (name == "marshak_thin") {
    const double theta0 = 1e-5;
    s.z_left = 0.0;
    s.z_right = 0.35;
    s.cells = 400;
    s.material.opacity = OpacityModel::power_law(3.0);
    s.initial_intensity = {
        IntensityPiece{Kind::isotropic, 0.5 * ac * std::pow(theta0, 4)}};
    s.initial_temperature = {TemperatureSetup::Kind::uniform, theta0};
    s.left = inflow(Kind::isotropic, 0.5 * ac);
    s.t_end = 1e-9;
    s.reference = ReferenceKind::self;
    s.norm = NormScaling::length;
    s.reference_cells = 1024;
    s.convergence_cells = {16, 32, 64, 128, 256};
  } else if (name == "marshak_smooth") {
    s.z_left = 0.0;
    s.z_right = 0.8;
    s.cells = 128;
    s.material.opacity = OpacityModel::power_law(3.0);
    IntensityPiece front{Kind::smooth_front, 0.5 * ac};
    s.initial_intensity = {front};
    s.initial_temperature = {TemperatureSetup::Kind::equilibrium, 0.0};
    s.left.kind = BoundarySetup::Kind::inflow;
    s.left.inflow = front;
    s.t_end = 1e-10;
    s.reference = ReferenceKind::self;
    s.norm = NormScaling::length;
    s.reference_cells = 2048;
    s.convergence_cells = {8, 16, 32, 64, 128, 256, 512, 1024};
  } else {
    std::string known;
    for (const auto& n : benchmark_names()) known += " " + n;
    throw ConfigError("unknown benchmark '" + std::string(name) +
                      "' (known:" + known + ")");
  }
  return s;
}

// ---------------------------------------------------------------------------
// JSON form

namespace {

json number(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double read_number(const json& j, const std::string& field) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw ConfigError(field + ": expected a number, got " + j.dump());
}

int read_int(const json& j, const std::string& field) {
  if (j.is_number_integer()) return j.get<int>();
  if (j.is_number_float()) {
    const double x = j.get<double>();
    if (x == std::floor(x)) return static_cast<int>(x);
  }
  throw ConfigError(field + ": expected an integer, got " + j.dump());
}

bool read_bool(const json& j, const std::string& field) {
  if (j.is_boolean()) return j.get<bool>();
  throw ConfigError(field + ": expected true or false, got " + j.dump());
}

std::string read_string(const json& j, const std::string& field) {
  if (j.is_string()) return j.get<std::string>();
  throw ConfigError(field + ": expected a string, got " + j.dump());
}

template <typename E>
struct EnumName {
  E value;
  const char* name;
};

template <typename E, size_t M>
const char* enum_to_string(E value, const EnumName<E> (&table)[M]) {
  for (const auto& e : table) {
    if (e.value == value) return e.name;
  }
  return "?";
}

template <typename E, size_t M>
E enum_from_json(const json& j, const std::string& field,
                 const EnumName<E> (&table)[M]) {
  const std::string s = read_string(j, field);
  std::string options;
  for (const auto& e : table) {
    if (s == e.name) return e.value;
    options += std::string(options.empty() ? "" : ", ") + e.name;
  }
  throw ConfigError(field + ": unknown value '" + s + "' (expected one of " +
                    options + ")");
}

const EnumName<IntensityPiece::Kind> kPieceKinds[] = {
    {IntensityPiece::Kind::isotropic, "isotropic"},
    {IntensityPiece::Kind::forward_beam, "forward_beam"},
    {IntensityPiece::Kind::smooth_front, "smooth_front"}};
const EnumName<BoundarySetup::Kind> kBoundaryKinds[] = {
    {BoundarySetup::Kind::vacuum, "vacuum"},
    {BoundarySetup::Kind::reflective, "reflective"},
    {BoundarySetup::Kind::periodic, "periodic"},
    {BoundarySetup::Kind::inflow, "inflow"}};
const EnumName<TemperatureSetup::Kind> kTemperatureKinds[] = {
    {TemperatureSetup::Kind::uniform, "uniform"},
    {TemperatureSetup::Kind::equilibrium, "equilibrium"}};
const EnumName<ReferenceKind> kReferenceKinds[] = {
    {ReferenceKind::none, "none"},
    {ReferenceKind::bilateral, "bilateral"},
    {ReferenceKind::vacuum, "vacuum"},
    {ReferenceKind::table, "table"},
    {ReferenceKind::self, "self"}};
const EnumName<NormScaling> kNormKinds[] = {{NormScaling::unit, "unit"},
                                            {NormScaling::length, "length"}};
const EnumName<LimiterMode> kLimiterModes[] = {
    {LimiterMode::per_stage, "per_stage"},
    {LimiterMode::per_step, "per_step"},
    {LimiterMode::off, "off"}};
const EnumName<ExplicitLimiting> kExplicitLimiting[] = {
    {ExplicitLimiting::off, "off"},
    {ExplicitLimiting::everywhere, "everywhere"},
    {ExplicitLimiting::negative_cells, "negative_cells"}};
const EnumName<OpacityEvaluation> kOpacityEvaluations[] = {
    {OpacityEvaluation::node, "node"},
    {OpacityEvaluation::cell_average, "cell_average"}};
const EnumName<OpacityModel::Kind> kOpacityKinds[] = {
    {OpacityModel::Kind::constant, "constant"},
    {OpacityModel::Kind::power_law, "power_law"}};
const EnumName<HeatCapacityModel::Kind> kHeatCapacityKinds[] = {
    {HeatCapacityModel::Kind::constant, "constant"},
    {HeatCapacityModel::Kind::cubic, "cubic"}};

// Applies `fn(value, path)` for each key of `obj`, rejecting keys outside
// `allowed`.
template <typename Fn>
void for_fields(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed, Fn fn) {
  if (!obj.is_object()) {
    throw ConfigError(path + ": expected an object, got " + obj.dump());
  }
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char* a) { return it.key() == a; });
    if (!ok) throw ConfigError(path + "." + it.key() + ": unknown field");
    fn(it.key(), it.value(), path + "." + it.key());
  }
}

json piece_to_json(const IntensityPiece& p) {
  return {{"kind", enum_to_string(p.kind, kPieceKinds)},
          {"value", number(p.value)},
          {"z_lo", number(p.z_lo)},
          {"z_hi", number(p.z_hi)},
          {"depth", number(p.depth)},
          {"steepness", number(p.steepness)},
          {"center", number(p.center)}};
}

IntensityPiece piece_from_json(const json& j, const std::string& path,
                               IntensityPiece p = {}) {
  for_fields(j, path,
             {"kind", "value", "z_lo", "z_hi", "depth", "steepness", "center"},
             [&](const std::string& key, const json& v, const std::string& f) {
               if (key == "kind") p.kind = enum_from_json(v, f, kPieceKinds);
               if (key == "value") p.value = read_number(v, f);
               if (key == "z_lo") p.z_lo = read_number(v, f);
               if (key == "z_hi") p.z_hi = read_number(v, f);
               if (key == "depth") p.depth = read_number(v, f);
               if (key == "steepness") p.steepness = read_number(v, f);
               if (key == "center") p.center = read_number(v, f);
             });
  return p;
}

json boundary_to_json(const BoundarySetup& b) {
  json j = {{"kind", enum_to_string(b.kind, kBoundaryKinds)}};
  if (b.kind == BoundarySetup::Kind::inflow) j["inflow"] = piece_to_json(b.inflow);
  return j;
}

BoundarySetup boundary_from_json(const json& j, const std::string& path,
                                 BoundarySetup b) {
  for_fields(j, path, {"kind", "inflow"},
             [&](const std::string& key, const json& v, const std::string& f) {
               if (key == "kind") b.kind = enum_from_json(v, f, kBoundaryKinds);
               if (key == "inflow") b.inflow = piece_from_json(v, f, b.inflow);
             });
  return b;
}

std::vector<double> times_from_json(const json& j, const std::string& path,
                                    double scale) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array");
  std::vector<double> out;
  for (size_t i = 0; i < j.size(); ++i) {
    out.push_back(read_number(j[i], path + "[" + std::to_string(i) + "]") *
                  scale);
  }
  return out;
}

}  // namespace

std::string serialize_setup(const ProblemSetup& s) {
  json initial = json::array();
  for (const auto& p : s.initial_intensity) initial.push_back(piece_to_json(p));
  json outputs = json::array();
  for (double t : s.output_times) outputs.push_back(number(t));
  json j = {
      {"name", s.name},
      {"z_left", number(s.z_left)},
      {"z_right", number(s.z_right)},
      {"cells", s.cells},
      {"bands", s.bands},
      {"order", s.order},
      {"allow_zero_eigenvalue", s.allow_zero_eigenvalue},
      {"material",
       {{"opacity",
         {{"kind", enum_to_string(s.material.opacity.kind, kOpacityKinds)},
          {"coefficient", number(s.material.opacity.coefficient)}}},
        {"heat_capacity",
         {{"kind", enum_to_string(s.material.heat_capacity.kind,
                                  kHeatCapacityKinds)},
          {"cv", number(s.material.heat_capacity.cv)}}}}},
      {"source",
       {{"active", s.source.active},
        {"z_lo", number(s.source.z_lo)},
        {"z_hi", number(s.source.z_hi)},
        {"t_lo", number(s.source.t_lo)},
        {"t_hi", number(s.source.t_hi)},
        {"amplitude", number(s.source.amplitude)}}},
      {"left", boundary_to_json(s.left)},
      {"right", boundary_to_json(s.right)},
      {"initial_intensity", initial},
      {"initial_temperature",
       {{"kind", enum_to_string(s.initial_temperature.kind, kTemperatureKinds)},
        {"theta0", number(s.initial_temperature.theta0)}}},
      {"t_end", number(s.t_end)},
      {"output_times", outputs},
      {"cfl", number(s.control.cfl)},
      {"limiter_alpha", number(s.control.limiter_alpha)},
      {"limiter", enum_to_string(s.control.limiter, kLimiterModes)},
      {"explicit_limiting",
       enum_to_string(s.control.explicit_limiting, kExplicitLimiting)},
      {"opacity_at", enum_to_string(s.control.opacity_at, kOpacityEvaluations)},
      {"reference", enum_to_string(s.reference, kReferenceKinds)},
      {"reference_table", s.reference_table},
      {"norm", enum_to_string(s.norm, kNormKinds)},
      {"reference_cells", s.reference_cells},
      {"convergence_cells", s.convergence_cells},
      {"constants",
       {{"c", number(s.constants.c)}, {"a", number(s.constants.a)}}}};
  return j.dump(2);
}

ProblemSetup parse_setup(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  ProblemSetup s;
  if (j.contains("benchmark")) {
    s = setup_benchmark(read_string(j["benchmark"], "benchmark"));
  }
  // ct-based times need the final value of c, so apply constants first.
  if (j.contains("constants")) {
    for_fields(j["constants"], "constants", {"c", "a"},
               [&](const std::string& key, const json& v, const std::string& f) {
                 if (key == "c") s.constants.c = read_number(v, f);
                 if (key == "a") s.constants.a = read_number(v, f);
               });
  }

  for_fields(
      j, "config",
      {"benchmark", "name", "z_left", "z_right", "cells", "bands", "order",
       "allow_zero_eigenvalue", "material", "source", "left", "right",
       "initial_intensity", "initial_temperature", "t_end", "ct_end",
       "output_times", "output_ct", "cfl", "limiter_alpha", "limiter",
       "explicit_limiting", "opacity_at", "reference", "reference_table", "norm", "reference_cells",
       "convergence_cells", "constants"},
      [&](const std::string& key, const json& v, const std::string& f) {
        if (key == "name") s.name = read_string(v, f);
        if (key == "z_left") s.z_left = read_number(v, f);
        if (key == "z_right") s.z_right = read_number(v, f);
        if (key == "cells") s.cells = read_int(v, f);
        if (key == "bands") s.bands = read_int(v, f);
        if (key == "order") s.order = read_int(v, f);
        if (key == "allow_zero_eigenvalue") {
          s.allow_zero_eigenvalue = read_bool(v, f);
        }
        if (key == "material") {
          for_fields(v, f, {"opacity", "heat_capacity"},
                     [&](const std::string& k2, const json& v2,
                         const std::string& f2) {
                       if (k2 == "opacity") {
                         for_fields(v2, f2, {"kind", "coefficient"},
                                    [&](const std::string& k3, const json& v3,
                                        const std::string& f3) {
                                      if (k3 == "kind") {
                                        s.material.opacity.kind =
                                            enum_from_json(v3, f3, kOpacityKinds);
                                      } else {
                                        s.material.opacity.coefficient =
                                            read_number(v3, f3);
                                      }
                                    });
                       } else {
                         for_fields(v2, f2, {"kind", "cv"},
                                    [&](const std::string& k3, const json& v3,
                                        const std::string& f3) {
                                      if (k3 == "kind") {
                                        s.material.heat_capacity.kind =
                                            enum_from_json(v3, f3,
                                                           kHeatCapacityKinds);
                                      } else {
                                        s.material.heat_capacity.cv =
                                            read_number(v3, f3);
                                      }
                                    });
                       }
                     });
        }
        if (key == "source") {
          for_fields(v, f, {"active", "z_lo", "z_hi", "t_lo", "t_hi", "amplitude"},
                     [&](const std::string& k2, const json& v2,
                         const std::string& f2) {
                       if (k2 == "active") s.source.active = read_bool(v2, f2);
                       if (k2 == "z_lo") s.source.z_lo = read_number(v2, f2);
                       if (k2 == "z_hi") s.source.z_hi = read_number(v2, f2);
                       if (k2 == "t_lo") s.source.t_lo = read_number(v2, f2);
                       if (k2 == "t_hi") s.source.t_hi = read_number(v2, f2);
                       if (k2 == "amplitude") {
                         s.source.amplitude = read_number(v2, f2);
                       }
                     });
        }
        if (key == "left") s.left = boundary_from_json(v, f, s.left);
        if (key == "right") s.right = boundary_from_json(v, f, s.right);
        if (key == "initial_intensity") {
          if (!v.is_array()) throw ConfigError(f + ": expected an array");
          s.initial_intensity.clear();
          for (size_t i = 0; i < v.size(); ++i) {
            s.initial_intensity.push_back(
                piece_from_json(v[i], f + "[" + std::to_string(i) + "]"));
          }
        }
        if (key == "initial_temperature") {
          for_fields(v, f, {"kind", "theta0"},
                     [&](const std::string& k2, const json& v2,
                         const std::string& f2) {
                       if (k2 == "kind") {
                         s.initial_temperature.kind =
                             enum_from_json(v2, f2, kTemperatureKinds);
                       } else {
                         s.initial_temperature.theta0 = read_number(v2, f2);
                       }
                     });
        }
        if (key == "t_end") s.t_end = read_number(v, f);
        if (key == "ct_end") s.t_end = read_number(v, f) / s.constants.c;
        if (key == "output_times") s.output_times = times_from_json(v, f, 1.0);
        if (key == "output_ct") {
          s.output_times = times_from_json(v, f, 1.0 / s.constants.c);
        }
        if (key == "cfl") s.control.cfl = read_number(v, f);
        if (key == "limiter_alpha") s.control.limiter_alpha = read_number(v, f);
        if (key == "limiter") {
          s.control.limiter = enum_from_json(v, f, kLimiterModes);
        }
        if (key == "explicit_limiting") {
          s.control.explicit_limiting = enum_from_json(v, f, kExplicitLimiting);
        }
        if (key == "opacity_at") {
          s.control.opacity_at = enum_from_json(v, f, kOpacityEvaluations);
        }
        if (key == "reference") s.reference = enum_from_json(v, f, kReferenceKinds);
        if (key == "reference_table") s.reference_table = read_string(v, f);
        if (key == "norm") s.norm = enum_from_json(v, f, kNormKinds);
        if (key == "reference_cells") s.reference_cells = read_int(v, f);
        if (key == "convergence_cells") {
          if (!v.is_array()) throw ConfigError(f + ": expected an array");
          s.convergence_cells.clear();
          for (size_t i = 0; i < v.size(); ++i) {
            s.convergence_cells.push_back(
                read_int(v[i], f + "[" + std::to_string(i) + "]"));
          }
        }
      });
  if (j.contains("t_end") && j.contains("ct_end")) {
    throw ConfigError("config: give either t_end or ct_end, not both");
  }
  if (j.contains("output_times") && j.contains("output_ct")) {
    throw ConfigError("config: give either output_times or output_ct, not both");
  }
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Initial data

namespace {

// Integrates f over [a, b] against the two nodal hat functions of the cell
// [z0, z0 + dz], splitting at the given breakpoints.
template <typename F>
std::array<double, 2> hat_moments(F&& f, double z0, double dz,
                                  const std::vector<double>& breaks,
                                  const GaussRule& rule) {
  std::vector<double> edges = {z0};
  for (double b : breaks) {
    if (b > z0 && b < z0 + dz) edges.push_back(b);
  }
  edges.push_back(z0 + dz);
  std::sort(edges.begin(), edges.end());

  std::array<double, 2> m = {0.0, 0.0};
  for (size_t e = 0; e + 1 < edges.size(); ++e) {
    const double lo = edges[e];
    const double hi = edges[e + 1];
    for (size_t q = 0; q < rule.nodes.size(); ++q) {
      const double z = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes[q];
      const double w = rule.weights[q] * (hi - lo) / dz;  // in units of xi
      const double xi = 2.0 * (z - z0) / dz - 1.0;
      const double v = f(z);
      m[0] += w * v * 0.5 * (1.0 - xi);
      m[1] += w * v * 0.5 * (1.0 + xi);
    }
  }
  return m;
}

// Nodal values from hat moments: inverse of {{2/3, 1/3}, {1/3, 2/3}}.
std::array<double, 2> nodal_from_moments(const std::array<double, 2>& m) {
  return {2.0 * m[0] - m[1], 2.0 * m[1] - m[0]};
}

}  // namespace

DgField initial_field(const ProblemSetup& setup, const Closure& closure) {
  const Mesh1D mesh = setup.mesh();
  DgField field(mesh, closure.size());
  const GaussRule rule = gauss_legendre(16);
  const int m = closure.size();

  std::vector<double> breaks;
  for (const auto& p : setup.initial_intensity) {
    breaks.push_back(p.z_lo);
    breaks.push_back(p.z_hi);
  }

  for (const auto& piece : setup.initial_intensity) {
    const std::vector<double> shape =
        project_intensity(piece.angular_shape(), closure);
    for (int i = 0; i < mesh.cells(); ++i) {
      const auto nodal = nodal_from_moments(hat_moments(
          [&](double z) { return piece.amplitude(z); }, mesh.node(i, 0),
          mesh.dz(), breaks, rule));
      for (int node = 0; node < 2; ++node) {
        auto u = field.at(i, node);
        for (int k = 0; k < m; ++k) u[k] += nodal[node] * shape[k];
      }
    }
  }

  const auto& temp = setup.initial_temperature;
  for (int i = 0; i < mesh.cells(); ++i) {
    if (temp.kind == TemperatureSetup::Kind::uniform) {
      field.theta(i, 0) = temp.theta0;
      field.theta(i, 1) = temp.theta0;
      continue;
    }
    auto theta_eq = [&](double z) {
      double e = 0.0;
      for (const auto& p : setup.initial_intensity) {
        e += p.energy_over_a(z, setup.constants);
      }
      return std::pow(std::max(e, 0.0), 0.25);
    };
    const auto nodal = nodal_from_moments(
        hat_moments(theta_eq, mesh.node(i, 0), mesh.dz(), breaks, rule));
    field.theta(i, 0) = std::max(nodal[0], 0.0);
    field.theta(i, 1) = std::max(nodal[1], 0.0);
  }
  return field;
}

// ---------------------------------------------------------------------------
// Reference solutions and norms

double exact_bilateral_E(double t, double z, double c) {
  const double ct = c * t;
  if (!(ct > 0.0 && ct < 0.3)) {
    throw DomainError("bilateral exact solution requires 0 < ct < 0.3, got ct = " +
                      format_number(ct));
  }
  if (z <= 0.2 + ct) return 1.0;
  if (z <= 0.8 - ct) return 0.0;
  if (z <= 0.8 + ct) return (z - 0.8 + ct) / (2.0 * ct);
  return 1.0;
}

double exact_vacuum_E(double t, double z, double c) {
  const double ct = c * t;
  if (!(ct > 0.0)) {
    throw DomainError("vacuum exact solution requires t > 0");
  }
  if (z <= 0.0) return 1.0;
  return std::max(0.0, 1.0 - z / ct);
}

ErrorNorms error_norms(const std::vector<double>& numeric,
                       const std::vector<double>& reference, double scale,
                       NormScaling scaling, double length) {
  if (numeric.size() != reference.size()) {
    throw DomainError("error_norms: " + std::to_string(numeric.size()) +
                      " samples against " + std::to_string(reference.size()) +
                      " reference values");
  }
  if (numeric.empty()) return {};
  ErrorNorms out;
  double sum = 0.0;
  for (size_t i = 0; i < numeric.size(); ++i) {
    const double d = std::abs(numeric[i] - reference[i]) / scale;
    sum += d * d;
    out.linf = std::max(out.linf, d);
  }
  const double weight = (scaling == NormScaling::length ? length : 1.0) /
                        static_cast<double>(numeric.size());
  out.l2 = std::sqrt(weight * sum);
  return out;
}

std::vector<double> coarsen_reference(const std::vector<double>& fine) {
  if (fine.size() % 2 != 0) {
    throw DomainError("coarsen_reference needs an even number of values, got " +
                      std::to_string(fine.size()));
  }
  std::vector<double> coarse(fine.size() / 2);
  for (size_t k = 0; k < coarse.size(); ++k) {
    coarse[k] = 0.5 * (fine[2 * k] + fine[2 * k + 1]);
  }
  return coarse;
}

double radiation_temperature(double E, double a) {
  if (E < 0.0) {
    throw DomainError("negative radiation energy " + format_number(E));
  }
  return std::sqrt(std::sqrt(E / a));
}

const ReferenceTable::Slice& ReferenceTable::nearest(double ct) const {
  if (slices.empty()) throw DomainError("reference table is empty");
  const Slice* best = &slices.front();
  for (const auto& s : slices) {
    if (std::abs(s.ct - ct) < std::abs(best->ct - ct)) best = &s;
  }
  return *best;
}

ReferenceTable load_reference_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reference table " + path);
  ReferenceTable table;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    double ct, z, e, theta;
    if (!(row >> ct)) continue;
    if (!(row >> z >> e >> theta)) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected four columns");
    }
    if (table.slices.empty() || table.slices.back().ct != ct) {
      table.slices.push_back({ct, {}, {}, {}});
    }
    auto& s = table.slices.back();
    if (!s.z.empty() && !(z > s.z.back())) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": z must increase within a time slice");
    }
    s.z.push_back(z);
    s.e_over_a.push_back(e);
    s.theta.push_back(theta);
  }
  if (table.slices.empty()) throw ConfigError(path + ": no data rows");
  return table;
}

std::string data_directory() {
  if (const char* env = std::getenv("HTRT_DATA_DIR"); env && *env) return env;
  return HTRT_DEFAULT_DATA_DIR;
}

std::string resolve_data_path(const std::string& name) {
  namespace fs = std::filesystem;
  if (fs::path(name).is_absolute() || fs::exists(name)) return name;
  return (fs::path(data_directory()) / name).string();
}

double sample_energy_over_a(const DgField& field, const Closure& closure,
                            const PhysicalConstants& constants, double z) {
  const Mesh1D& mesh = field.mesh();
  const double a = constants.a;
  auto node_e = [&](int cell, int node) {
    return radiation_energy(field.at(cell, node), closure, constants.c) / a;
  };
  const double s = (z - mesh.z_left()) / mesh.dz();
  if (s <= 0.0) return node_e(0, 0);
  if (s >= mesh.cells()) return node_e(mesh.cells() - 1, 1);
  const double nearest = std::round(s);
  if (std::abs(s - nearest) < 1e-12 * std::max(1.0, s) && nearest > 0 &&
      nearest < mesh.cells()) {
    const int f = static_cast<int>(nearest);
    return 0.5 * (node_e(f - 1, 1) + node_e(f, 0));
  }
  const int cell = std::min(static_cast<int>(s), mesh.cells() - 1);
  const double x = s - cell;
  return (1.0 - x) * node_e(cell, 0) + x * node_e(cell, 1);
}

std::vector<double> node_energy_over_a(const DgField& field,
                                       const Closure& closure,
                                       const PhysicalConstants& constants,
                                       int node) {
  std::vector<double> out(field.cells());
  for (int i = 0; i < field.cells(); ++i) {
    out[i] = radiation_energy(field.at(i, node), closure, constants.c) /
             constants.a;
  }
  return out;
}

std::vector<double> cell_temperature(const DgField& field) {
  std::vector<double> out(field.cells());
  for (int i = 0; i < field.cells(); ++i) {
    out[i] = 0.5 * (field.theta(i, 0) + field.theta(i, 1));
  }
  return out;
}

}  // namespace htrt
