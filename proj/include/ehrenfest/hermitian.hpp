#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "ehrenfest/state.hpp"

namespace ehrenfest {

/// max |A - A^dagger| entrywise.
inline double hermiticity_residual(const ComplexMatrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  if (a.size() == 0) return 0.0;
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

/// A = re + i im with re symmetric and im antisymmetric.
///
/// Construction validates Hermiticity against a tolerance and then stores the exactly
/// (anti)symmetrized parts, so the stored invariants hold to the last bit.
class HermitianOperator {
 public:
  static constexpr double kDefaultTolerance = 1e-12;

  HermitianOperator() = default;

  explicit HermitianOperator(const ComplexMatrix& a, double tol = kDefaultTolerance) {
    if (a.rows() != a.cols()) throw ValidationError("HermitianOperator: matrix is not square");
    const double residual = hermiticity_residual(a);
    if (!(residual <= tol)) {
      std::ostringstream os;
      os << "HermitianOperator: matrix is not Hermitian (residual " << residual << " > " << tol << ")";
      throw ValidationError(os.str());
    }
    re_ = 0.5 * (a.real() + a.real().transpose());
    im_ = 0.5 * (a.imag() - a.imag().transpose());
  }

  HermitianOperator(const Matrix& re, const Matrix& im, double tol = kDefaultTolerance)
      : HermitianOperator(combine(re, im), tol) {}

  static HermitianOperator identity(std::size_t n) {
    const auto m = static_cast<Eigen::Index>(n);
    return HermitianOperator(Matrix::Identity(m, m), Matrix::Zero(m, m));
  }
  static HermitianOperator zero(std::size_t n) {
    const auto m = static_cast<Eigen::Index>(n);
    return HermitianOperator(Matrix::Zero(m, m), Matrix::Zero(m, m));
  }
  static HermitianOperator pauli_x() {
    ComplexMatrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return HermitianOperator(m);
  }
  static HermitianOperator pauli_y() {
    ComplexMatrix m(2, 2);
    m << 0.0, Complex(0.0, -1.0), Complex(0.0, 1.0), 0.0;
    return HermitianOperator(m);
  }
  static HermitianOperator pauli_z() {
    ComplexMatrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return HermitianOperator(m);
  }

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(re_.rows()); }
  [[nodiscard]] const Matrix& re() const { return re_; }
  [[nodiscard]] const Matrix& im() const { return im_; }
  [[nodiscard]] ComplexMatrix complex() const { return combine(re_, im_); }

  /// 2N x 2N real symmetric matrix acting on (q1, p1, q2, p2, ...); block (a, b) is
  /// [[Re A_ab, -Im A_ab], [Im A_ab, Re A_ab]].
  [[nodiscard]] Matrix real_representation() const {
    const Eigen::Index n = re_.rows();
    Matrix h(2 * n, 2 * n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        h(2 * a, 2 * b) = re_(a, b);
        h(2 * a, 2 * b + 1) = -im_(a, b);
        h(2 * a + 1, 2 * b) = im_(a, b);
        h(2 * a + 1, 2 * b + 1) = re_(a, b);
      }
    }
    return h;
  }

  /// A psi, on real coordinates.
  [[nodiscard]] QuantumState apply(const QuantumState& psi) const {
    return {re_ * psi.q - im_ * psi.p, im_ * psi.q + re_ * psi.p};
  }

  /// <psi|A psi>, the full (unhalved) expectation functional.
  [[nodiscard]] double expectation(const QuantumState& psi) const {
    return psi.q.dot(re_ * psi.q) + psi.p.dot(re_ * psi.p) + 2.0 * psi.p.dot(im_ * psi.q);
  }

  HermitianOperator& operator+=(const HermitianOperator& o) {
    check_same_dim(o);
    re_ += o.re_;
    im_ += o.im_;
    return *this;
  }
  HermitianOperator& operator*=(double s) {
    re_ *= s;
    im_ *= s;
    return *this;
  }
  friend HermitianOperator operator+(HermitianOperator a, const HermitianOperator& b) { return a += b; }
  friend HermitianOperator operator-(HermitianOperator a, const HermitianOperator& b) { return a += (-1.0 * b); }
  friend HermitianOperator operator*(double s, HermitianOperator a) { return a *= s; }

 private:
  static ComplexMatrix combine(const Matrix& re, const Matrix& im) {
    if (re.rows() != im.rows() || re.cols() != im.cols()) {
      throw ValidationError("HermitianOperator: real and imaginary parts differ in shape");
    }
    ComplexMatrix a(re.rows(), re.cols());
    a.real() = re;
    a.imag() = im;
    return a;
  }
  void check_same_dim(const HermitianOperator& o) const {
    if (o.dim() != dim()) throw ValidationError("HermitianOperator: dimension mismatch");
  }

  Matrix re_;
  Matrix im_;
};

/// i[A, B].
inline HermitianOperator i_commutator(const HermitianOperator& a, const HermitianOperator& b) {
  const ComplexMatrix ac = a.complex();
  const ComplexMatrix bc = b.complex();
  const ComplexMatrix c = Complex(0.0, 1.0) * (ac * bc - bc * ac);
  return HermitianOperator(c, 1e-9 * (1.0 + ac.norm() * bc.norm()));
}

/// [A, B]_+ = AB + BA.
inline HermitianOperator anticommutator(const HermitianOperator& a, const HermitianOperator& b) {
  const ComplexMatrix ac = a.complex();
  const ComplexMatrix bc = b.complex();
  return HermitianOperator(ComplexMatrix(ac * bc + bc * ac), 1e-9 * (1.0 + ac.norm() * bc.norm()));
}

/// Real form of multiplication by i: blocks [[0, -1], [1, 0]].
inline Matrix complex_structure(std::size_t n) {
  const auto m = static_cast<Eigen::Index>(n);
  Matrix j = Matrix::Zero(2 * m, 2 * m);
  for (Eigen::Index k = 0; k < m; ++k) {
    j(2 * k, 2 * k + 1) = -1.0;
    j(2 * k + 1, 2 * k) = 1.0;
  }
  return j;
}

/// exp(-i tau H) z. Closed form for 2x2, eigendecomposition otherwise.
inline ComplexVector unitary_propagate(const HermitianOperator& h, const ComplexVector& z, double tau) {
  const Eigen::Index n = static_cast<Eigen::Index>(h.dim());
  if (z.size() != n) throw ValidationError("unitary_propagate: state and operator dimensions differ");
  if (n == 2) {
    // H = a0 I + a . sigma
    const Matrix& re = h.re();
    const Matrix& im = h.im();
    const double a0 = 0.5 * (re(0, 0) + re(1, 1));
    const double ax = re(0, 1);
    const double ay = im(1, 0);
    const double az = 0.5 * (re(0, 0) - re(1, 1));
    const double a = std::sqrt(ax * ax + ay * ay + az * az);
    const double c = std::cos(tau * a);
    // sin(tau a)/a, with the a -> 0 limit handled.
    const double s_over_a = a > 1e-300 ? std::sin(tau * a) / a : tau;
    const Complex phase = std::polar(1.0, -tau * a0);
    const Complex mi(0.0, -1.0);
    // (c I - i s n.sigma) z
    const Complex u00 = c + mi * s_over_a * az;
    const Complex u11 = c - mi * s_over_a * az;
    const Complex u01 = mi * s_over_a * Complex(ax, -ay);
    const Complex u10 = mi * s_over_a * Complex(ax, ay);
    ComplexVector out(2);
    out(0) = phase * (u00 * z(0) + u01 * z(1));
    out(1) = phase * (u10 * z(0) + u11 * z(1));
    return out;
  }
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(h.complex());
  if (es.info() != Eigen::Success) {
    std::ostringstream os;
    os << "unitary_propagate: eigendecomposition failed (dim " << n << ", |H|_F " << h.complex().norm() << ")";
    throw NumericalError(os.str());
  }
  const ComplexMatrix& v = es.eigenvectors();
  ComplexVector coeff = v.adjoint() * z;
  for (Eigen::Index k = 0; k < n; ++k) coeff(k) *= std::polar(1.0, -tau * es.eigenvalues()(k));
  return v * coeff;
}

}  // namespace ehrenfest
