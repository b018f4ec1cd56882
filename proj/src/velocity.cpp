#include "htrt/velocity.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "htrt/errors.hpp"

namespace htrt {

namespace {

// p_n and its derivative at x.
std::pair<double, double> legendre_with_derivative(int n, double x) {
  double p_prev = 1.0;
  double p = x;
  if (n == 0) return {1.0, 0.0};
  for (int k = 2; k <= n; ++k) {
    const double p_next = ((2.0 * k - 1.0) * x * p - (k - 1.0) * p_prev) / k;
    p_prev = p;
    p = p_next;
  }
  // (1 - x^2) p_n' = n (p_{n-1} - x p_n)
  const double dp = n * (p_prev - x * p) / (1.0 - x * x);
  return {p, dp};
}

}  // namespace

int BandMesh::band_of(double mu) const {
  const double x = (mu + 1.0) / delta_mu;
  const int j = static_cast<int>(std::ceil(x)) - 1;
  return std::clamp(j, 0, bands - 1);
}

double BandMesh::local_coordinate(int band, double mu) const {
  return (mu - centers[band]) / (0.5 * delta_mu);
}

BandMesh build_bands(int bands) {
  if (bands < 1) {
    throw ConfigError("number of velocity bands T must be >= 1, got " +
                      std::to_string(bands));
  }
  BandMesh mesh;
  mesh.bands = bands;
  mesh.delta_mu = 2.0 / bands;
  mesh.centers.resize(bands);
  for (int j = 0; j < bands; ++j) {
    mesh.centers[j] = -1.0 + (j + 0.5) * mesh.delta_mu;
  }
  return mesh;
}

double legendre(int k, double x) {
  if (k == 0) return 1.0;
  double p_prev = 1.0;
  double p = x;
  for (int m = 2; m <= k; ++m) {
    const double p_next =
        ((2.0 * m - 1.0) / m) * x * p - ((m - 1.0) / m) * p_prev;
    p_prev = p;
    p = p_next;
  }
  return p;
}

std::vector<double> legendre_roots(int n) {
  std::vector<double> roots(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre_with_derivative(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-14) break;
    }
    roots[i] = x;
  }
  std::sort(roots.begin(), roots.end());
  // Exact symmetry about zero.
  for (int i = 0; i < n / 2; ++i) {
    const double r = 0.5 * (roots[n - 1 - i] - roots[i]);
    roots[i] = -r;
    roots[n - 1 - i] = r;
  }
  if (n % 2 == 1) roots[n / 2] = 0.0;
  return roots;
}

GaussRule gauss_legendre(int n) {
  GaussRule rule;
  rule.nodes = legendre_roots(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    const double x = rule.nodes[i];
    const double dp = legendre_with_derivative(n, x).second;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

Eigen::MatrixXd legendre_advection_matrix(int order) {
  const int n = order + 1;
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    if (k >= 1) J(k - 1, k) = k / (2.0 * k - 1.0);
    if (k + 1 < n) J(k + 1, k) = (k + 1.0) / (2.0 * k + 3.0);
  }
  return J;
}

Closure::Closure(int bands, int order, ZeroEigenvaluePolicy policy)
    : mesh_(build_bands(bands)), order_(order) {
  if (order < 0) {
    throw ConfigError("Legendre order N must be >= 0, got " +
                      std::to_string(order));
  }
  has_zero_eigenvalue_ = (bands % 2 == 1) && (order % 2 == 0);
  if (has_zero_eigenvalue_ && policy == ZeroEigenvaluePolicy::reject) {
    throw ConfigError("H^" + std::to_string(bands) + "_" +
                      std::to_string(order) +
                      " has a zero eigenvalue (T odd, N even); pass "
                      "allow_zero_eigenvalue to use it anyway");
  }

  const int n = order + 1;
  const double half_width = 0.5 * mesh_.delta_mu;

  // J = D P D^{-1} with P symmetric tridiagonal. d_k / d_{k-1} =
  // sqrt(sub_k / sup_k) where sup_k = J(k-1,k) and sub_k = J(k,k-1).
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd offdiag(std::max(n - 1, 0));
  Eigen::VectorXd scale(n);
  scale(0) = 1.0;
  for (int k = 1; k < n; ++k) {
    const double sup = k / (2.0 * k - 1.0);
    const double sub = k / (2.0 * k + 1.0);
    offdiag(k - 1) = std::sqrt(sup * sub);
    scale(k) = scale(k - 1) * std::sqrt(sub / sup);
  }

  Eigen::VectorXd roots(n);
  Eigen::MatrixXd Q(n, n);
  if (n == 1) {
    roots(0) = 0.0;
    Q(0, 0) = 1.0;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, offdiag, Eigen::ComputeEigenvectors);
    roots = solver.eigenvalues();
    Q = solver.eigenvectors();
  }
  const Eigen::MatrixXd V = scale.asDiagonal() * Q;
  const Eigen::MatrixXd V_inv = Q.transpose() * scale.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd J = legendre_advection_matrix(order);

  const int block = n * n;
  flux_.resize(static_cast<size_t>(block) * bands);
  abs_flux_.resize(flux_.size());
  right_.resize(flux_.size());
  inverse_.resize(flux_.size());
  eigenvalues_.resize(static_cast<size_t>(n) * bands);

  for (int j = 0; j < bands; ++j) {
    const double mu_j = mesh_.centers[j];
    Eigen::VectorXd lambda(n);
    for (int k = 0; k < n; ++k) {
      lambda(k) = mu_j + half_width * roots(k);
      // The zero eigenvalue of an odd-T/even-N closure is exactly zero.
      if (has_zero_eigenvalue_ && 2 * j + 1 == bands && 2 * k + 1 == n) {
        lambda(k) = 0.0;
      }
      eigenvalues_[j * n + k] = lambda(k);
    }
    const Eigen::MatrixXd A =
        mu_j * Eigen::MatrixXd::Identity(n, n) + half_width * J;
    const Eigen::MatrixXd abs_A = V * lambda.cwiseAbs().asDiagonal() * V_inv;
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        const size_t at = static_cast<size_t>(j) * block + r * n + c;
        flux_[at] = A(r, c);
        abs_flux_[at] = abs_A(r, c);
        right_[at] = V(r, c);
        inverse_[at] = V_inv(r, c);
      }
    }
  }
  spectral_radius_ = 0.0;
  for (double l : eigenvalues_) {
    spectral_radius_ = std::max(spectral_radius_, std::abs(l));
  }
}

namespace {

void apply_blocks(const std::vector<double>& blocks, int bands, int n,
                  std::span<const double> u, std::span<double> out) {
  const int block = n * n;
  for (int j = 0; j < bands; ++j) {
    const double* m = blocks.data() + static_cast<size_t>(j) * block;
    const double* x = u.data() + j * n;
    double* y = out.data() + j * n;
    for (int r = 0; r < n; ++r) {
      double acc = 0.0;
      for (int c = 0; c < n; ++c) acc += m[r * n + c] * x[c];
      y[r] = acc;
    }
  }
}

Eigen::MatrixXd assemble(const std::vector<double>& blocks, int bands, int n) {
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n * bands, n * bands);
  for (int j = 0; j < bands; ++j) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        M(j * n + r, j * n + c) = blocks[static_cast<size_t>(j) * n * n + r * n + c];
      }
    }
  }
  return M;
}

}  // namespace

void Closure::apply_flux(std::span<const double> u,
                         std::span<double> out) const {
  apply_blocks(flux_, bands(), block_size(), u, out);
}

void Closure::apply_abs_flux(std::span<const double> u,
                             std::span<double> out) const {
  apply_blocks(abs_flux_, bands(), block_size(), u, out);
}

Eigen::MatrixXd Closure::flux_matrix() const {
  return assemble(flux_, bands(), block_size());
}
Eigen::MatrixXd Closure::abs_flux_matrix() const {
  return assemble(abs_flux_, bands(), block_size());
}
Eigen::MatrixXd Closure::right_eigenvectors() const {
  return assemble(right_, bands(), block_size());
}
Eigen::MatrixXd Closure::inverse_eigenvectors() const {
  return assemble(inverse_, bands(), block_size());
}

double radiation_energy(std::span<const double> u, const Closure& closure,
                        double c) {
  const int n = closure.block_size();
  double sum = 0.0;
  for (int j = 0; j < closure.bands(); ++j) sum += u[j * n];
  return closure.delta_mu() / (2.0 * c) * sum;
}

AngularIntensity isotropic_intensity(double value) {
  return AngularIntensity{[value](double) { return value; }, {}};
}

std::vector<double> project_intensity(const AngularIntensity& intensity,
                                      const Closure& closure) {
  const int n = closure.block_size();
  const BandMesh& mesh = closure.band_mesh();
  std::vector<double> u(closure.size(), 0.0);

  if (intensity.regular) {
    const GaussRule rule = gauss_legendre(std::max(8, closure.order() + 2));
    for (int j = 0; j < mesh.bands; ++j) {
      for (size_t q = 0; q < rule.nodes.size(); ++q) {
        const double alpha = rule.nodes[q];
        const double value =
            intensity.regular(mesh.centers[j] + 0.5 * mesh.delta_mu * alpha);
        for (int k = 0; k < n; ++k) {
          u[j * n + k] += rule.weights[q] * value * legendre(k, alpha);
        }
      }
    }
  }

  for (const DiracComponent& d : intensity.diracs) {
    if (d.location < -1.0 || d.location > 1.0) {
      throw DomainError("Dirac component at mu = " +
                        format_number(d.location) + " lies outside [-1, 1]");
    }
    const double x = (d.location + 1.0) / mesh.delta_mu;
    const double nearest = std::round(x);
    if (nearest >= 1.0 && nearest <= mesh.bands - 1.0 &&
        std::abs(x - nearest) < 1e-12) {
      throw DomainError("Dirac component at mu = " +
                        format_number(d.location) +
                        " sits on a band boundary");
    }
    const int j = mesh.band_of(d.location);
    const double alpha = std::clamp(mesh.local_coordinate(j, d.location), -1.0, 1.0);
    const double scale = d.weight * 2.0 / mesh.delta_mu;
    for (int k = 0; k < n; ++k) u[j * n + k] += scale * legendre(k, alpha);
  }
  return u;
}

double reconstruct_intensity(std::span<const double> u, const Closure& closure,
                             double mu) {
  const BandMesh& mesh = closure.band_mesh();
  const int n = closure.block_size();
  const int j = mesh.band_of(mu);
  const double alpha = mesh.local_coordinate(j, mu);
  double value = 0.0;
  for (int k = 0; k < n; ++k) {
    value += 0.5 * (2.0 * k + 1.0) * u[j * n + k] * legendre(k, alpha);
  }
  return value;
}

}  // namespace htrt
