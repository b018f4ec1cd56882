#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "htrt/mesh_dg.hpp"

namespace test {

inline std::vector<double> random_vector(size_t n, std::uint32_t seed,
                                         double lo = -1.0, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

inline void fill_random(htrt::DgField& field, std::uint32_t seed,
                        double lo = -1.0, double hi = 1.0) {
  field.moment_data() =
      random_vector(field.moment_data().size(), seed, lo, hi);
  field.temperature_data() =
      random_vector(field.temperature_data().size(), seed + 1, 0.1, 1.0);
}

inline double max_abs_diff(const std::vector<double>& a,
                           const std::vector<double>& b) {
  double d = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double max_abs(const std::vector<double>& a) {
  double d = 0.0;
  for (double x : a) d = std::max(d, std::abs(x));
  return d;
}

}  // namespace test
