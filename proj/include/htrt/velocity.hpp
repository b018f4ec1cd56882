#pragma once

// Hybrid discrete angular closure: T uniform bands in mu, each carrying a
// degree-N Legendre expansion in the band-local coordinate alpha.
//
// Moment vectors are stored band-major: component k + l*(N+1) is the k-th
// Legendre moment of band l (both 0-based).

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace htrt {

struct BandMesh {
  int bands = 0;
  double delta_mu = 0.0;
  std::vector<double> centers;

  /// Band containing mu. Points on an interior band edge resolve to the
  /// left band.
  int band_of(double mu) const;
  /// Maps mu into the local coordinate alpha of `band`.
  double local_coordinate(int band, double mu) const;
};

BandMesh build_bands(int bands);

/// Legendre polynomial p_k(x) by the three-term recurrence.
double legendre(int k, double x);

/// Roots of p_n in ascending order (Newton iteration from Chebyshev guesses).
std::vector<double> legendre_roots(int n);

struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1].
GaussRule gauss_legendre(int n);

/// Closures with T odd and N even contain a zero characteristic speed.
enum class ZeroEigenvaluePolicy { reject, allow };

class Closure {
 public:
  Closure(int bands, int order,
          ZeroEigenvaluePolicy policy = ZeroEigenvaluePolicy::reject);

  int bands() const { return mesh_.bands; }
  int order() const { return order_; }
  int block_size() const { return order_ + 1; }
  int size() const { return (order_ + 1) * mesh_.bands; }
  const BandMesh& band_mesh() const { return mesh_; }
  double delta_mu() const { return mesh_.delta_mu; }

  bool has_zero_eigenvalue() const { return has_zero_eigenvalue_; }
  double spectral_radius() const { return spectral_radius_; }

  /// Eigenvalues ordered band by band, ascending within each band.
  const std::vector<double>& eigenvalues() const { return eigenvalues_; }

  // Per-band (N+1)x(N+1) blocks, row-major, band after band.
  const std::vector<double>& flux_blocks() const { return flux_; }
  const std::vector<double>& abs_flux_blocks() const { return abs_flux_; }

  /// out = A u
  void apply_flux(std::span<const double> u, std::span<double> out) const;
  /// out = |A| u
  void apply_abs_flux(std::span<const double> u, std::span<double> out) const;

  // Assembled dense operators, for tests and diagnostics.
  Eigen::MatrixXd flux_matrix() const;
  Eigen::MatrixXd abs_flux_matrix() const;
  Eigen::MatrixXd right_eigenvectors() const;
  Eigen::MatrixXd inverse_eigenvectors() const;

 private:
  BandMesh mesh_;
  int order_;
  bool has_zero_eigenvalue_ = false;
  double spectral_radius_ = 0.0;
  std::vector<double> eigenvalues_;
  std::vector<double> flux_;
  std::vector<double> abs_flux_;
  std::vector<double> right_;
  std::vector<double> inverse_;
};

/// Nonzero entries of the Legendre advection matrix J_N: super-diagonal
/// (row k-1, col k) = k/(2k-1) and sub-diagonal (row k+1, col k) =
/// (k+1)/(2k+3).
Eigen::MatrixXd legendre_advection_matrix(int order);

/// E = (delta_mu / 2c) * sum_l u_0^(l)
double radiation_energy(std::span<const double> u, const Closure& closure,
                        double c);

/// Point mass `weight * delta(mu - location)` in the angular variable.
struct DiracComponent {
  double location = 0.0;
  double weight = 0.0;
};

/// An angular intensity profile: a regular part plus explicit point masses.
struct AngularIntensity {
  std::function<double(double)> regular;
  std::vector<DiracComponent> diracs;
};

AngularIntensity isotropic_intensity(double value);

/// u_k^(j) = int I(mu_j + alpha*delta_mu/2) p_k(alpha) dalpha.
std::vector<double> project_intensity(const AngularIntensity& intensity,
                                      const Closure& closure);

/// Evaluates the band-local ansatz at mu.
double reconstruct_intensity(std::span<const double> u,
                             const Closure& closure, double mu);

}  // namespace htrt
