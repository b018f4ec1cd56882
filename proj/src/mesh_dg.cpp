#include "htrt/mesh_dg.hpp"

#include <cmath>
#include <string>

#include "htrt/errors.hpp"

namespace htrt {

Mesh1D::Mesh1D(double z_left, double z_right, int cells)
    : z_left_(z_left), z_right_(z_right), cells_(cells) {
  if (!(z_left < z_right)) {
    throw ConfigError("mesh requires z_left < z_right");
  }
  if (cells < 1) {
    throw ConfigError("mesh requires at least one cell, got " +
                      std::to_string(cells));
  }
  dz_ = (z_right - z_left) / cells;
}

DgField::DgField(Mesh1D mesh, int moments)
    : mesh_(mesh),
      moments_(moments),
      u_(static_cast<size_t>(mesh.cells()) * 2 * moments, 0.0),
      theta_(static_cast<size_t>(mesh.cells()) * 2, 0.0) {}

bool DgField::all_finite() const {
  for (double v : u_) {
    if (!std::isfinite(v)) return false;
  }
  for (double v : theta_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void BoundarySpec::validate(const Closure& closure) const {
  const bool lp = left.kind == BoundaryCondition::Kind::periodic;
  const bool rp = right.kind == BoundaryCondition::Kind::periodic;
  if (lp != rp) {
    throw ConfigError("periodic boundaries must be set on both sides");
  }
  for (const BoundaryCondition* bc : {&left, &right}) {
    if (bc->kind == BoundaryCondition::Kind::dirichlet &&
        static_cast<int>(bc->inflow.size()) != closure.size()) {
      throw ConfigError("dirichlet inflow has " +
                        std::to_string(bc->inflow.size()) +
                        " moments, closure expects " +
                        std::to_string(closure.size()));
    }
  }
}

void numerical_flux(std::span<const double> u_minus,
                    std::span<const double> u_plus, const Closure& closure,
                    std::span<double> out) {
  const int m = closure.size();
  std::vector<double> sum(m), diff(m), a_sum(m), abs_diff(m);
  for (int k = 0; k < m; ++k) {
    sum[k] = u_minus[k] + u_plus[k];
    diff[k] = u_plus[k] - u_minus[k];
  }
  closure.apply_flux(sum, a_sum);
  closure.apply_abs_flux(diff, abs_diff);
  for (int k = 0; k < m; ++k) out[k] = 0.5 * a_sum[k] - 0.5 * abs_diff[k];
}

void reflect_moments(std::span<const double> u, const Closure& closure,
                     std::span<double> out) {
  const int n = closure.block_size();
  const int bands = closure.bands();
  for (int j = 0; j < bands; ++j) {
    const int image = bands - 1 - j;
    for (int k = 0; k < n; ++k) {
      const double sign = (k % 2 == 0) ? 1.0 : -1.0;
      out[j * n + k] = sign * u[image * n + k];
    }
  }
}

void ghost_state(std::span<const double> trace, Side /*side*/,
                 const BoundaryCondition& bc, const Closure& closure,
                 std::span<double> out) {
  const int m = closure.size();
  switch (bc.kind) {
    case BoundaryCondition::Kind::vacuum:
      for (int k = 0; k < m; ++k) out[k] = 0.0;
      break;
    case BoundaryCondition::Kind::dirichlet:
      for (int k = 0; k < m; ++k) out[k] = bc.inflow[k];
      break;
    case BoundaryCondition::Kind::reflective:
      reflect_moments(trace, closure, out);
      break;
    case BoundaryCondition::Kind::periodic:
      for (int k = 0; k < m; ++k) out[k] = trace[k];
      break;
  }
}

StreamingOperator::StreamingOperator(const Closure& closure, BoundarySpec bc)
    : closure_(&closure),
      bc_(std::move(bc)),
      m_(closure.size()),
      ghost_left_(closure.size()),
      ghost_right_(closure.size()) {
  bc_.validate(closure);
  const auto& a = closure.flux_blocks();
  const auto& abs_a = closure.abs_flux_blocks();
  plus_.resize(a.size());
  minus_.resize(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    plus_[i] = 0.5 * (a[i] + abs_a[i]);
    minus_[i] = 0.5 * (a[i] - abs_a[i]);
  }
}

void StreamingOperator::ghosts(const DgField& field, std::span<double> left,
                               std::span<double> right) const {
  const int last = field.cells() - 1;
  const bool periodic = bc_.left.kind == BoundaryCondition::Kind::periodic;
  ghost_state(periodic ? field.at(last, 1) : field.at(0, 0), Side::left,
              bc_.left, *closure_, left);
  ghost_state(periodic ? field.at(0, 0) : field.at(last, 1), Side::right,
              bc_.right, *closure_, right);
}

void StreamingOperator::apply(const DgField& field, std::span<double> rhs) {
  const int cells = field.cells();
  const int m = m_;
  const int n = closure_->block_size();
  const int bands = closure_->bands();
  const int block = n * n;
  const double inv_dz = 1.0 / field.mesh().dz();
  faces_.resize(static_cast<size_t>(cells + 1) * m);
  ghosts(field, ghost_left_, ghost_right_);

  const double* plus = plus_.data();
  const double* minus = minus_.data();
  const double* a = closure_->flux_blocks().data();
  double* faces = faces_.data();

#pragma omp parallel
  {
    std::vector<double> sum(m), a_sum(m);

#pragma omp for schedule(static)
    for (int f = 0; f <= cells; ++f) {
      const double* ul =
          f == 0 ? ghost_left_.data() : field.at(f - 1, 1).data();
      const double* ur =
          f == cells ? ghost_right_.data() : field.at(f, 0).data();
      double* out = faces + static_cast<size_t>(f) * m;
      for (int j = 0; j < bands; ++j) {
        const double* pp = plus + static_cast<size_t>(j) * block;
        const double* mm = minus + static_cast<size_t>(j) * block;
        const double* xl = ul + j * n;
        const double* xr = ur + j * n;
        for (int r = 0; r < n; ++r) {
          double acc = 0.0;
          for (int c = 0; c < n; ++c) {
            acc += pp[r * n + c] * xl[c] + mm[r * n + c] * xr[c];
          }
          out[j * n + r] = acc;
        }
      }
    }

#pragma omp for schedule(static)
    for (int i = 0; i < cells; ++i) {
      const double* u1 = field.at(i, 0).data();
      const double* u2 = field.at(i, 1).data();
      for (int k = 0; k < m; ++k) sum[k] = u1[k] + u2[k];
      for (int j = 0; j < bands; ++j) {
        const double* aa = a + static_cast<size_t>(j) * block;
        for (int r = 0; r < n; ++r) {
          double acc = 0.0;
          for (int c = 0; c < n; ++c) acc += aa[r * n + c] * sum[j * n + c];
          a_sum[j * n + r] = acc;
        }
      }
      const double* f_left = faces + static_cast<size_t>(i) * m;
      const double* f_right = faces + static_cast<size_t>(i + 1) * m;
      double* r1 = rhs.data() + (static_cast<size_t>(i) * 2) * m;
      double* r2 = r1 + m;
      for (int k = 0; k < m; ++k) {
        r1[k] = (2.0 * f_right[k] + 4.0 * f_left[k] - 3.0 * a_sum[k]) * inv_dz;
        r2[k] = -(4.0 * f_right[k] + 2.0 * f_left[k] - 3.0 * a_sum[k]) * inv_dz;
      }
    }
  }
}

namespace reference {

void streaming_rhs(const DgField& field, const BoundarySpec& bc,
                   const Closure& closure, std::span<double> rhs) {
  const int cells = field.cells();
  const int m = closure.size();
  const double dz = field.mesh().dz();
  const bool periodic = bc.left.kind == BoundaryCondition::Kind::periodic;

  std::vector<double> ghost_left(m), ghost_right(m);
  ghost_state(periodic ? field.at(cells - 1, 1) : field.at(0, 0), Side::left,
              bc.left, closure, ghost_left);
  ghost_state(periodic ? field.at(0, 0) : field.at(cells - 1, 1), Side::right,
              bc.right, closure, ghost_right);

  std::vector<double> f_left(m), f_right(m), sum(m), a_sum(m);
  for (int i = 0; i < cells; ++i) {
    std::span<const double> left_trace =
        i == 0 ? std::span<const double>(ghost_left) : field.at(i - 1, 1);
    std::span<const double> right_trace =
        i == cells - 1 ? std::span<const double>(ghost_right)
                       : field.at(i + 1, 0);
    numerical_flux(left_trace, field.at(i, 0), closure, f_left);
    numerical_flux(field.at(i, 1), right_trace, closure, f_right);
    for (int k = 0; k < m; ++k) sum[k] = field.at(i, 0)[k] + field.at(i, 1)[k];
    closure.apply_flux(sum, a_sum);
    for (int k = 0; k < m; ++k) {
      rhs[(2 * i) * m + k] =
          (2.0 * f_right[k] + 4.0 * f_left[k] - 3.0 * a_sum[k]) / dz;
      rhs[(2 * i + 1) * m + k] =
          -(4.0 * f_right[k] + 2.0 * f_left[k] - 3.0 * a_sum[k]) / dz;
    }
  }
}

}  // namespace reference

std::array<std::array<double, 2>, 2> dg_mass_matrix() {
  return {{{2.0 / 3.0, 1.0 / 3.0}, {1.0 / 3.0, 2.0 / 3.0}}};
}

std::array<std::array<double, 2>, 2> dg_derivative_matrix() {
  return {{{-0.5, -0.5}, {0.5, 0.5}}};
}

}  // namespace htrt
