#pragma once

#include <random>

#include "ehrenfest/hermitian.hpp"

namespace ehrenfest {

/// GUE-like random Hermitian matrix: (G + G^dagger) / 2 with standard complex normal G.
template <typename Rng>
HermitianOperator random_hermitian(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(n);
  ComplexMatrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) g(i, j) = Complex(normal(rng), normal(rng));
  }
  return HermitianOperator(ComplexMatrix(0.5 * (g + g.adjoint())));
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix with the phase fix.
template <typename Rng>
ComplexMatrix random_unitary(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(n);
  ComplexMatrix g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) g(i, j) = Complex(normal(rng), normal(rng));
  }
  Eigen::HouseholderQR<ComplexMatrix> qr(g);
  ComplexMatrix q = qr.householderQ();
  const ComplexMatrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < m; ++k) {
    const double a = std::abs(r(k, k));
    if (a > 0.0) q.col(k) *= r(k, k) / a;
  }
  return q;
}

/// Random real symmetric 2n x 2n matrix; generically not commuting with J.
template <typename Rng>
Matrix random_real_symmetric(std::size_t n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(2 * n);
  Matrix s(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) s(i, j) = normal(rng);
  }
  return 0.5 * (s + s.transpose());
}

template <typename Rng>
Vector random_vector(std::size_t n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
  return v;
}

}  // namespace ehrenfest
