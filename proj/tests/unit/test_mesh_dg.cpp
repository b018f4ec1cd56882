#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "htrt/errors.hpp"
#include "htrt/mesh_dg.hpp"
#include "support.hpp"

using namespace htrt;

namespace {

using Vec = Eigen::VectorXd;

Vec to_vec(std::span<const double> s) {
  return Eigen::Map<const Vec>(s.data(), static_cast<Eigen::Index>(s.size()));
}

// Upwind flux from a dense eigen-decomposition of the assembled A.
Vec characteristic_flux(const Closure& closure, const Vec& left,
                        const Vec& right) {
  Eigen::EigenSolver<Eigen::MatrixXd> solver(closure.flux_matrix());
  const Eigen::MatrixXd r = solver.eigenvectors().real();
  const Eigen::MatrixXd r_inv = r.inverse();
  const Vec lambda = solver.eigenvalues().real();
  const Vec pos = lambda.cwiseMax(0.0);
  const Vec neg = lambda.cwiseMin(0.0);
  return r * pos.asDiagonal() * r_inv * left + r * neg.asDiagonal() * r_inv * right;
}

BoundarySpec all_kinds(const Closure& closure, int which) {
  const auto inflow = test::random_vector(closure.size(), 99);
  switch (which) {
    case 0:
      return {BoundaryCondition::vacuum(), BoundaryCondition::vacuum()};
    case 1:
      return {BoundaryCondition::dirichlet(inflow), BoundaryCondition::reflective()};
    case 2:
      return {BoundaryCondition::reflective(), BoundaryCondition::dirichlet(inflow)};
    default:
      return {BoundaryCondition::periodic(), BoundaryCondition::periodic()};
  }
}

}  // namespace

TEST_CASE("mesh geometry and validation") {
  const Mesh1D mesh(-1.0, 3.0, 8);
  CHECK(mesh.dz() == 0.5);
  CHECK(mesh.length() == 4.0);
  CHECK(mesh.center(0) == 0.5 * (-1.0 + -0.5));
  CHECK(mesh.node(3, 1) == 1.0);
  CHECK_THROWS_AS(Mesh1D(1.0, 1.0, 4), ConfigError);
  CHECK_THROWS_AS(Mesh1D(0.0, 1.0, 0), ConfigError);
}

TEST_CASE("element matrices match quadrature") {
  const auto rule = gauss_legendre(4);
  auto phi = [](int k, double xi) { return k == 0 ? 0.5 * (1 - xi) : 0.5 * (1 + xi); };
  auto dphi = [](int k) { return k == 0 ? -0.5 : 0.5; };
  const auto mass = dg_mass_matrix();
  const auto deriv = dg_derivative_matrix();
  for (int k = 0; k < 2; ++k) {
    for (int j = 0; j < 2; ++j) {
      double m = 0.0, d = 0.0;
      for (size_t q = 0; q < rule.nodes.size(); ++q) {
        m += rule.weights[q] * phi(k, rule.nodes[q]) * phi(j, rule.nodes[q]);
        d += rule.weights[q] * phi(j, rule.nodes[q]) * dphi(k);
      }
      CHECK(mass[k][j] == doctest::Approx(m));
      CHECK(deriv[k][j] == doctest::Approx(d));
    }
  }
}

TEST_CASE("numerical flux equals the characteristic upwind flux") {
  for (auto [bands, order] : {std::pair{2, 1}, {2, 2}, {4, 3}, {1, 3}}) {
    const Closure closure(bands, order);
    const auto l = test::random_vector(closure.size(), 3);
    const auto r = test::random_vector(closure.size(), 4);
    std::vector<double> out(closure.size());
    numerical_flux(l, r, closure, out);
    const Vec expected = characteristic_flux(closure, to_vec(l), to_vec(r));
    for (int k = 0; k < closure.size(); ++k) {
      CHECK(out[k] == doctest::Approx(expected[k]).epsilon(1e-12));
    }
    // Consistency: F(u, u) = A u.
    numerical_flux(l, l, closure, out);
    const Vec au = closure.flux_matrix() * to_vec(l);
    for (int k = 0; k < closure.size(); ++k) {
      CHECK(out[k] == doctest::Approx(au[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("reflection is an involution that anticommutes with A") {
  const Closure closure(4, 3);
  const auto u = test::random_vector(closure.size(), 11);
  std::vector<double> once(u.size()), twice(u.size());
  reflect_moments(u, closure, once);
  reflect_moments(once, closure, twice);
  CHECK(test::max_abs_diff(u, twice) == 0.0);

  std::vector<double> au(u.size()), reflected_au(u.size()), a_reflected(u.size());
  closure.apply_flux(u, au);
  reflect_moments(au, closure, reflected_au);
  closure.apply_flux(once, a_reflected);
  for (size_t k = 0; k < u.size(); ++k) {
    CHECK(a_reflected[k] == doctest::Approx(-reflected_au[k]).epsilon(1e-12));
  }

  AngularIntensity symmetric;
  symmetric.regular = [](double mu) { return 2.0 + mu * mu; };
  const auto even = project_intensity(symmetric, closure);
  reflect_moments(even, closure, once);
  CHECK(test::max_abs_diff(even, once) < 1e-13);
}

TEST_CASE("reflective wall has zero net flux for a symmetric state") {
  const Closure closure(2, 2);
  const auto u = project_intensity(isotropic_intensity(5.0), closure);
  std::vector<double> ghost(u.size()), flux(u.size());
  ghost_state(u, Side::left, BoundaryCondition::reflective(), closure, ghost);
  numerical_flux(ghost, u, closure, flux);
  double net = 0.0;
  for (int j = 0; j < closure.bands(); ++j) net += flux[j * closure.block_size()];
  CHECK(std::abs(net) < 1e-12);
}

TEST_CASE("nodal update matches the mass-matrix weak form") {
  const Closure closure(2, 2);
  const Mesh1D mesh(0.0, 1.0, 5);
  DgField field(mesh, closure.size());
  test::fill_random(field, 21);
  const BoundarySpec bc{BoundaryCondition::vacuum(), BoundaryCondition::vacuum()};
  StreamingOperator op(closure, bc);
  std::vector<double> rhs(field.moment_data().size());
  op.apply(field, rhs);

  const int m = closure.size();
  const Eigen::MatrixXd a = closure.flux_matrix();
  const auto mass = dg_mass_matrix();
  const auto deriv = dg_derivative_matrix();
  Eigen::Matrix2d mm;
  mm << mass[0][0], mass[0][1], mass[1][0], mass[1][1];
  const Eigen::Matrix2d m_inv = mm.inverse();
  const Vec zero = Vec::Zero(m);
  for (int i = 0; i < mesh.cells(); ++i) {
    const Vec u0 = to_vec(field.at(i, 0));
    const Vec u1 = to_vec(field.at(i, 1));
    const Vec left = i == 0 ? zero : to_vec(field.at(i - 1, 1));
    const Vec right = i == mesh.cells() - 1 ? zero : to_vec(field.at(i + 1, 0));
    const Vec fl = characteristic_flux(closure, left, u0);
    const Vec fr = characteristic_flux(closure, u1, right);
    // (dz/2) M dU/dt = sum_j N_kj A U_j - [phi_k F] over the cell.
    const Vec b0 = deriv[0][0] * a * u0 + deriv[0][1] * a * u1 + fl;
    const Vec b1 = deriv[1][0] * a * u0 + deriv[1][1] * a * u1 - fr;
    const double scale = 2.0 / mesh.dz();
    const Vec d0 = scale * (m_inv(0, 0) * b0 + m_inv(0, 1) * b1);
    const Vec d1 = scale * (m_inv(1, 0) * b0 + m_inv(1, 1) * b1);
    for (int k = 0; k < m; ++k) {
      CHECK(rhs[(2 * i) * m + k] == doctest::Approx(d0[k]).epsilon(1e-11));
      CHECK(rhs[(2 * i + 1) * m + k] == doctest::Approx(d1[k]).epsilon(1e-11));
    }
  }
}

TEST_CASE("constant states are steady under periodic and reflective walls") {
  const Closure closure(2, 2);
  const Mesh1D mesh(0.0, 2.0, 16);
  DgField field(mesh, closure.size());
  const auto u = project_intensity(isotropic_intensity(3.0), closure);
  for (int i = 0; i < mesh.cells(); ++i) {
    for (int node = 0; node < 2; ++node) {
      std::copy(u.begin(), u.end(), field.at(i, node).begin());
    }
  }
  std::vector<double> rhs(field.moment_data().size());
  for (const BoundarySpec& bc :
       {BoundarySpec{BoundaryCondition::periodic(), BoundaryCondition::periodic()},
        BoundarySpec{BoundaryCondition::reflective(), BoundaryCondition::reflective()},
        BoundarySpec{BoundaryCondition::dirichlet(u), BoundaryCondition::dirichlet(u)}}) {
    StreamingOperator op(closure, bc);
    op.apply(field, rhs);
    CHECK(test::max_abs(rhs) < 1e-12);
  }
}

TEST_CASE("parallel streaming agrees with the serial reference") {
  for (auto [bands, order] : {std::pair{2, 2}, {4, 1}, {1, 5}}) {
    const Closure closure(bands, order);
    const Mesh1D mesh(0.0, 1.0, 37);
    DgField field(mesh, closure.size());
    test::fill_random(field, 5);
    for (int which = 0; which < 4; ++which) {
      const BoundarySpec bc = all_kinds(closure, which);
      StreamingOperator op(closure, bc);
      std::vector<double> fast(field.moment_data().size());
      std::vector<double> slow(fast.size());
      op.apply(field, fast);
      reference::streaming_rhs(field, bc, closure, slow);
      CHECK(test::max_abs_diff(fast, slow) <= 1e-12 * test::max_abs(slow));
    }
  }
}

TEST_CASE("boundary specification validation") {
  const Closure closure(2, 1);
  BoundarySpec half{BoundaryCondition::periodic(), BoundaryCondition::vacuum()};
  CHECK_THROWS_AS(half.validate(closure), ConfigError);
  BoundarySpec short_inflow{BoundaryCondition::dirichlet({1.0}),
                            BoundaryCondition::vacuum()};
  CHECK_THROWS_AS(short_inflow.validate(closure), ConfigError);
  CHECK_THROWS_AS(StreamingOperator(closure, half), ConfigError);
}

TEST_CASE("periodic ghosts come from the opposite end") {
  const Closure closure(2, 1);
  const Mesh1D mesh(0.0, 1.0, 4);
  DgField field(mesh, closure.size());
  test::fill_random(field, 8);
  StreamingOperator op(closure, {BoundaryCondition::periodic(),
                                 BoundaryCondition::periodic()});
  std::vector<double> left(closure.size()), right(closure.size());
  op.ghosts(field, left, right);
  for (int k = 0; k < closure.size(); ++k) {
    CHECK(left[k] == field.at(3, 1)[k]);
    CHECK(right[k] == field.at(0, 0)[k]);
  }
}

TEST_CASE("finite check") {
  DgField field(Mesh1D(0.0, 1.0, 2), 3);
  CHECK(field.all_finite());
  field.theta(1, 0) = std::nan("");
  CHECK_FALSE(field.all_finite());
}
