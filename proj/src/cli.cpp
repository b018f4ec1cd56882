#include "htrt/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "htrt/errors.hpp"

namespace htrt {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

std::string format17(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json norms_json(const ErrorNorms& e) { return {{"l2", e.l2}, {"linf", e.linf}}; }

Closure make_closure(const ProblemSetup& setup) {
  Closure closure = setup.closure();
  if (closure.has_zero_eigenvalue()) {
    std::cerr << "warning: H^" << setup.bands << "_" << setup.order
              << " has a zero characteristic speed\n";
  }
  return closure;
}

// Runs `count` tasks on up to `jobs` threads. The first exception is
// rethrown after all workers finish.
template <typename Fn>
void run_pool(int count, int jobs, Fn fn) {
  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  jobs = std::min(jobs, count);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::optional<ErrorNorms> score_snapshot(const ProblemSetup& setup,
                                         const Closure& closure,
                                         const DgField& field, double t,
                                         std::optional<double>* rms_over_peak) {
  const Mesh1D& mesh = field.mesh();
  const PhysicalConstants& k = setup.constants;
  if (t <= 0.0) return std::nullopt;
  switch (setup.reference) {
    case ReferenceKind::bilateral:
    case ReferenceKind::vacuum: {
      if (setup.reference == ReferenceKind::bilateral && k.c * t >= 0.3) {
        return std::nullopt;
      }
      // Sample points z_i = z_left + (i - 1) dz, i = 1..N_z.
      const std::vector<double> numeric = node_energy_over_a(field, closure, k, 0);
      std::vector<double> exact(mesh.cells());
      for (int i = 0; i < mesh.cells(); ++i) {
        const double z = mesh.node(i, 0);
        exact[i] = setup.reference == ReferenceKind::bilateral
                       ? exact_bilateral_E(t, z, k.c)
                       : exact_vacuum_E(t, z, k.c);
      }
      return error_norms(numeric, exact, 1.0, setup.norm, mesh.length());
    }
    case ReferenceKind::table: {
      const ReferenceTable table =
          load_reference_table(resolve_data_path(setup.reference_table));
      const auto& slice = table.nearest(k.c * t);
      std::vector<double> numeric;
      for (double z : slice.z) {
        numeric.push_back(sample_energy_over_a(field, closure, k, z));
      }
      const ErrorNorms e = error_norms(numeric, slice.e_over_a);
      if (rms_over_peak) {
        const double peak =
            *std::max_element(slice.e_over_a.begin(), slice.e_over_a.end());
        *rms_over_peak = e.l2 / peak;
      }
      return e;
    }
    case ReferenceKind::none:
    case ReferenceKind::self:
      return std::nullopt;
  }
  return std::nullopt;
}

RunResult run_setup(const ProblemSetup& setup, Execution execution) {
  setup.validate();
  const auto start = std::chrono::steady_clock::now();
  const Closure closure = make_closure(setup);
  const BoundarySpec bc = setup.boundary_spec(closure);
  DgField field = initial_field(setup, closure);
  SemiImplicitStepper stepper(closure, bc, setup.material, setup.source,
                              setup.constants, setup.control, execution);

  RunResult result{setup, {}, 0, stepper.stable_dt(field.mesh()), 0.0,
                   total_energy(field, closure, setup.material.heat_capacity,
                                setup.constants),
                   0.0, {}, 0.0};

  double t = 0.0;
  for (double t_out : setup.schedule()) {
    result.steps += stepper.advance(field, t, t_out);
    t = t_out;
    Snapshot snap{t, result.steps, field, std::nullopt, std::nullopt};
    snap.error = score_snapshot(setup, closure, field, t, &snap.rms_over_peak);
    result.snapshots.push_back(std::move(snap));
  }

  result.energy_final = total_energy(field, closure,
                                     setup.material.heat_capacity,
                                     setup.constants);
  result.budget = stepper.total_budget();
  const double imbalance = result.energy_final - result.energy_initial -
                           result.budget.boundary_inflow -
                           result.budget.source_input;
  const double scale =
      std::max({std::abs(result.energy_initial), std::abs(result.energy_final),
                std::abs(result.budget.boundary_inflow) +
                    std::abs(result.budget.source_input),
                std::numeric_limits<double>::min()});
  result.conservation_drift = imbalance / scale;
  result.wall_seconds = seconds_since(start);
  return result;
}

double fitted_slope(const std::vector<int>& cells,
                    const std::vector<double>& errors) {
  const size_t n = cells.size();
  if (n < 2 || errors.size() != n) {
    throw DomainError("slope fit needs at least two matching points");
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    const double x = std::log2(static_cast<double>(cells[i]));
    const double y = std::log2(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  return -(n * sxy - sx * sy) / denom;
}

ConvergenceResult run_convergence(const ProblemSetup& setup, int jobs) {
  setup.validate();
  const int ref_cells = setup.reference_cells;
  if (ref_cells < 2) {
    throw ConfigError("convergence requires reference_cells >= 2");
  }
  if (setup.convergence_cells.empty()) {
    throw ConfigError("convergence requires a non-empty convergence_cells list");
  }
  for (int n : setup.convergence_cells) {
    int m = ref_cells;
    while (m > n && m % 2 == 0) m /= 2;
    if (m != n || n == ref_cells) {
      throw ConfigError("convergence_cells entry " + std::to_string(n) +
                        " is not reference_cells (" + std::to_string(ref_cells) +
                        ") divided by a positive power of two");
    }
  }
  // Validate the closure before launching any runs.
  make_closure(setup);

  const auto start = std::chrono::steady_clock::now();
  std::vector<int> all = setup.convergence_cells;
  all.insert(all.begin(), ref_cells);
  std::vector<std::vector<double>> theta(all.size());
  run_pool(static_cast<int>(all.size()), jobs, [&](int i) {
    ProblemSetup s = setup;
    s.cells = all[i];
    s.output_times.clear();
    const RunResult r = run_setup(s);
    theta[i] = cell_temperature(r.snapshots.back().field);
  });

  ConvergenceResult result{setup, ref_cells, {}, 0.0, 0.0};
  std::vector<int> cells;
  std::vector<double> l2;
  for (size_t i = 1; i < all.size(); ++i) {
    std::vector<double> ref = theta[0];
    while (static_cast<int>(ref.size()) > all[i]) ref = coarsen_reference(ref);
    const ErrorNorms e = error_norms(theta[i], ref, 1.0, setup.norm,
                                     setup.z_right - setup.z_left);
    result.points.push_back({all[i], e.l2, e.linf});
    cells.push_back(all[i]);
    l2.push_back(e.l2);
  }
  std::vector<size_t> order(cells.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return cells[a] < cells[b]; });
  std::vector<ConvergencePoint> sorted;
  for (size_t i : order) sorted.push_back(result.points[i]);
  result.points = sorted;
  result.slope = cells.size() >= 2 ? fitted_slope(cells, l2) : 0.0;
  result.wall_seconds = seconds_since(start);
  return result;
}

void write_profile_csv(const std::string& path, const DgField& field,
                       const Closure& closure,
                       const PhysicalConstants& constants) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << "z,E_over_a,theta,theta_rad\n";
  const Mesh1D& mesh = field.mesh();
  for (int i = 0; i < mesh.cells(); ++i) {
    for (int node = 0; node < 2; ++node) {
      const double e = radiation_energy(field.at(i, node), closure, constants.c);
      const double rad = e >= 0.0 ? radiation_temperature(e, constants.a)
                                  : std::numeric_limits<double>::quiet_NaN();
      out << format17(mesh.node(i, node)) << ',' << format17(e / constants.a)
          << ',' << format17(field.theta(i, node)) << ',' << format17(rad)
          << '\n';
    }
  }
}

void write_moments_csv(const std::string& path, const DgField& field) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << 'z';
  for (int k = 0; k < field.moments(); ++k) out << ",u" << k;
  out << '\n';
  const Mesh1D& mesh = field.mesh();
  for (int i = 0; i < mesh.cells(); ++i) {
    for (int node = 0; node < 2; ++node) {
      out << format17(mesh.node(i, node));
      for (double u : field.at(i, node)) out << ',' << format17(u);
      out << '\n';
    }
  }
}

std::string summary_json(const RunResult& r,
                         const std::vector<std::string>& csv_files) {
  json outputs = json::array();
  for (size_t i = 0; i < r.snapshots.size(); ++i) {
    const Snapshot& s = r.snapshots[i];
    json o = {{"t", s.t}, {"ct", s.t * r.setup.constants.c}, {"steps", s.steps}};
    if (i < csv_files.size()) o["csv"] = csv_files[i];
    if (s.error) o["error"] = norms_json(*s.error);
    if (s.rms_over_peak) o["rms_over_peak"] = *s.rms_over_peak;
    outputs.push_back(o);
  }
  json j = {{"config", json::parse(serialize_setup(r.setup))},
            {"t_end", r.setup.t_end},
            {"ct_end", r.setup.t_end * r.setup.constants.c},
            {"dt", r.dt},
            {"steps", r.steps},
            {"wall_seconds", r.wall_seconds},
            {"outputs", outputs},
            {"energy",
             {{"initial", r.energy_initial},
              {"final", r.energy_final},
              {"boundary_inflow", r.budget.boundary_inflow},
              {"source_input", r.budget.source_input},
              {"relative_drift", r.conservation_drift}}}};
  return j.dump(2);
}

std::string convergence_json(const ConvergenceResult& r) {
  json points = json::array();
  for (const auto& p : r.points) {
    points.push_back({{"cells", p.cells}, {"l2", p.l2}, {"linf", p.linf}});
  }
  json j = {{"config", json::parse(serialize_setup(r.setup))},
            {"reference_cells", r.reference_cells},
            {"points", points},
            {"slope", r.slope},
            {"wall_seconds", r.wall_seconds}};
  return j.dump(2);
}

namespace {

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

}  // namespace

RunConfig load_run_config(const std::string& path,
                          const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": config must be a JSON object");

  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + o + "' is not of the form key=value");
    }
    const std::string key = o.substr(0, eq);
    json* node = &j;
    size_t pos = 0;
    while (true) {
      const auto dot = key.find('.', pos);
      const std::string part = key.substr(pos, dot - pos);
      if (dot == std::string::npos) {
        (*node)[part] = parse_override_value(o.substr(eq + 1));
        break;
      }
      if (!node->contains(part)) (*node)[part] = json::object();
      node = &(*node)[part];
      pos = dot + 1;
    }
  }

  RunConfig config;
  config.source_path = path;
  if (j.contains("dump_moments")) {
    if (!j["dump_moments"].is_boolean()) {
      throw ConfigError("config.dump_moments: expected true or false");
    }
    config.dump_moments = j["dump_moments"].get<bool>();
    j.erase("dump_moments");
  }
  if (j.contains("mode")) {
    if (!j["mode"].is_string()) throw ConfigError("config.mode: expected a string");
    config.mode = j["mode"].get<std::string>();
    if (config.mode != "run" && config.mode != "convergence") {
      throw ConfigError("config.mode: expected \"run\" or \"convergence\"");
    }
    j.erase("mode");
  }
  config.setup = parse_setup(j.dump());
  if (config.setup.name.empty()) config.setup.name = fs::path(path).stem().string();
  return config;
}

namespace {

std::string execute_run(const RunConfig& config, const std::string& output_dir,
                        bool quiet) {
  const RunResult result = run_setup(config.setup);
  fs::create_directories(output_dir);
  const Closure closure = config.setup.closure();
  std::vector<std::string> files;
  for (size_t i = 0; i < result.snapshots.size(); ++i) {
    const std::string stem = config.setup.name + "_out" + std::to_string(i);
    const std::string csv = (fs::path(output_dir) / (stem + ".csv")).string();
    write_profile_csv(csv, result.snapshots[i].field, closure,
                      config.setup.constants);
    files.push_back(csv);
    if (config.dump_moments) {
      write_moments_csv((fs::path(output_dir) / (stem + "_moments.csv")).string(),
                        result.snapshots[i].field);
    }
  }
  const std::string summary =
      (fs::path(output_dir) / (config.setup.name + "_summary.json")).string();
  std::ofstream(summary) << summary_json(result, files) << '\n';
  if (!quiet) {
    std::cout << config.setup.name << ": " << result.steps << " steps, "
              << result.wall_seconds << " s";
    const Snapshot& last = result.snapshots.back();
    if (last.error) {
      std::cout << ", L2 = " << last.error->l2 << ", Linf = " << last.error->linf;
    }
    std::cout << " -> " << summary << '\n';
  }
  return summary;
}

std::string execute_convergence(const RunConfig& config,
                                const std::string& output_dir, int jobs,
                                bool quiet) {
  const ConvergenceResult result = run_convergence(config.setup, jobs);
  fs::create_directories(output_dir);
  const std::string path =
      (fs::path(output_dir) / (config.setup.name + "_convergence.json")).string();
  std::ofstream(path) << convergence_json(result) << '\n';
  if (!quiet) {
    for (const auto& p : result.points) {
      std::cout << "  N_z = " << p.cells << "  L2 = " << p.l2 << '\n';
    }
    std::cout << config.setup.name << ": slope " << result.slope << " -> "
              << path << '\n';
  }
  return path;
}

template <typename Fn>
int guarded(Fn fn) {
  try {
    fn();
    return kExitOk;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

int command_run(const std::string& config_path, const CommandOptions& options) {
  return guarded([&] {
    const RunConfig config = load_run_config(config_path, options.overrides);
    execute_run(config, options.output_dir, options.quiet);
  });
}

int command_convergence(const std::string& config_path,
                        const CommandOptions& options) {
  return guarded([&] {
    const RunConfig config = load_run_config(config_path, options.overrides);
    execute_convergence(config, options.output_dir, options.jobs, options.quiet);
  });
}

int command_suite(const std::string& directory, const CommandOptions& options) {
  std::vector<RunConfig> configs;
  const int status = guarded([&] {
    if (!fs::is_directory(directory)) {
      throw ConfigError(directory + " is not a directory");
    }
    std::vector<std::string> paths;
    for (const auto& entry : fs::directory_iterator(directory)) {
      if (entry.path().extension() == ".json") {
        paths.push_back(entry.path().string());
      }
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw ConfigError("no .json configs in " + directory);
    for (const auto& p : paths) {
      configs.push_back(load_run_config(p, options.overrides));
    }
  });
  if (status != kExitOk) return status;

  std::vector<int> codes(configs.size(), kExitOk);
  run_pool(static_cast<int>(configs.size()), options.jobs, [&](int i) {
    codes[i] = guarded([&] {
      if (configs[i].mode == "convergence") {
        execute_convergence(configs[i], options.output_dir, 1, options.quiet);
      } else {
        execute_run(configs[i], options.output_dir, options.quiet);
      }
    });
  });
  for (int c : codes) {
    if (c == kExitSolver) return kExitSolver;
  }
  for (int c : codes) {
    if (c != kExitOk) return c;
  }
  return kExitOk;
}

}  // namespace htrt
