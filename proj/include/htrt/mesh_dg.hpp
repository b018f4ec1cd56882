#pragma once

// Piecewise-linear nodal DG in z. Each cell carries two nodes (xi = -1 and
// xi = +1), each holding a full moment vector and a material temperature.

#include <array>
#include <span>
#include <vector>

#include "htrt/velocity.hpp"

namespace htrt {

class Mesh1D {
 public:
  Mesh1D(double z_left, double z_right, int cells);

  double z_left() const { return z_left_; }
  double z_right() const { return z_right_; }
  int cells() const { return cells_; }
  double dz() const { return dz_; }
  double length() const { return z_right_ - z_left_; }
  double center(int cell) const { return z_left_ + (cell + 0.5) * dz_; }
  /// Position of node 0 (left end) or node 1 (right end) of a cell.
  double node(int cell, int node) const {
    return z_left_ + (cell + node) * dz_;
  }

 private:
  double z_left_;
  double z_right_;
  int cells_;
  double dz_;
};

class DgField {
 public:
  DgField(Mesh1D mesh, int moments);

  const Mesh1D& mesh() const { return mesh_; }
  int moments() const { return moments_; }
  int cells() const { return mesh_.cells(); }

  std::span<double> at(int cell, int node) {
    return {u_.data() + offset(cell, node), static_cast<size_t>(moments_)};
  }
  std::span<const double> at(int cell, int node) const {
    return {u_.data() + offset(cell, node), static_cast<size_t>(moments_)};
  }
  double& theta(int cell, int node) { return theta_[2 * cell + node]; }
  double theta(int cell, int node) const { return theta_[2 * cell + node]; }

  std::vector<double>& moment_data() { return u_; }
  const std::vector<double>& moment_data() const { return u_; }
  std::vector<double>& temperature_data() { return theta_; }
  const std::vector<double>& temperature_data() const { return theta_; }

  bool all_finite() const;

 private:
  size_t offset(int cell, int node) const {
    return (static_cast<size_t>(cell) * 2 + node) * moments_;
  }

  Mesh1D mesh_;
  int moments_;
  std::vector<double> u_;
  std::vector<double> theta_;
};

struct BoundaryCondition {
  enum class Kind { vacuum, reflective, dirichlet, periodic };
  Kind kind = Kind::vacuum;
  /// Prescribed outside moments (dirichlet only).
  std::vector<double> inflow;

  static BoundaryCondition vacuum() { return {Kind::vacuum, {}}; }
  static BoundaryCondition reflective() { return {Kind::reflective, {}}; }
  static BoundaryCondition periodic() { return {Kind::periodic, {}}; }
  static BoundaryCondition dirichlet(std::vector<double> moments) {
    return {Kind::dirichlet, std::move(moments)};
  }
};

struct BoundarySpec {
  BoundaryCondition left;
  BoundaryCondition right;

  /// Throws ConfigError on a half-periodic pair or wrongly sized inflow.
  void validate(const Closure& closure) const;
};

enum class Side { left, right };

/// Upwind flux F = A (u_minus + u_plus)/2 - |A| (u_plus - u_minus)/2, where
/// u_minus is the trace from the left cell and u_plus from the right cell.
void numerical_flux(std::span<const double> u_minus,
                    std::span<const double> u_plus, const Closure& closure,
                    std::span<double> out);

/// Moment image of I(-mu): band l maps to band T-1-l, u_k -> (-1)^k u_k.
void reflect_moments(std::span<const double> u, const Closure& closure,
                     std::span<double> out);

/// Outside state at a domain boundary. `trace` is the interior trace at that
/// boundary, except for periodic conditions, where callers pass the trace at
/// the opposite end.
void ghost_state(std::span<const double> trace, Side side,
                 const BoundaryCondition& bc, const Closure& closure,
                 std::span<double> out);

/// Computes the explicit streaming right-hand side. For a field U,
/// dU/dt = c * rhs. Face fluxes are evaluated once per face and shared.
class StreamingOperator {
 public:
  StreamingOperator(const Closure& closure, BoundarySpec bc);

  const Closure& closure() const { return *closure_; }
  const BoundarySpec& boundaries() const { return bc_; }

  /// OpenMP-parallel over faces, then over cells.
  void apply(const DgField& field, std::span<double> rhs);

  /// Flux through face f (f = 0 is the left boundary, f = cells the right)
  /// from the most recent apply().
  std::span<const double> face_flux(int face) const {
    return {faces_.data() + static_cast<size_t>(face) * m_,
            static_cast<size_t>(m_)};
  }

  /// Writes both ghost states for the given field.
  void ghosts(const DgField& field, std::span<double> left,
              std::span<double> right) const;

 private:
  const Closure* closure_;
  BoundarySpec bc_;
  int m_;
  // A+ = (A + |A|)/2 and A- = (A - |A|)/2, per band.
  std::vector<double> plus_;
  std::vector<double> minus_;
  std::vector<double> faces_;
  std::vector<double> ghost_left_;
  std::vector<double> ghost_right_;
};

namespace reference {

/// Serial transcription of the nodal update formulas, kept as a test oracle
/// for StreamingOperator.
void streaming_rhs(const DgField& field, const BoundarySpec& bc,
                   const Closure& closure, std::span<double> rhs);

}  // namespace reference

/// Mass and derivative matrices of the piecewise-linear element on
/// xi in [-1, 1]: M_kj = int Phi_k Phi_j, N_kj = int Phi_j Phi_k'.
std::array<std::array<double, 2>, 2> dg_mass_matrix();
std::array<std::array<double, 2>, 2> dg_derivative_matrix();

}  // namespace htrt
