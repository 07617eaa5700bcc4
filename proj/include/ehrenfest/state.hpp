#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace ehrenfest {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Invalid input: malformed state, non-Hermitian operator, bad config value.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: non-finite values, failed eigendecomposition.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real coordinates of a vector in C^N: z_k = q_k + i p_k.
struct QuantumState {
  Vector q;
  Vector p;

  QuantumState() = default;
  QuantumState(Vector q_in, Vector p_in) : q(std::move(q_in)), p(std::move(p_in)) {
    if (q.size() != p.size()) {
      throw ValidationError("QuantumState: q and p have different lengths");
    }
  }

  static QuantumState zero(std::size_t n) { return {Vector::Zero(n), Vector::Zero(n)}; }

  static QuantumState from_complex(const ComplexVector& z) { return {z.real(), z.imag()}; }

  /// Ordering (q1, p1, q2, p2, ...), the layout used by real representations.
  static QuantumState from_interleaved(const Vector& x) {
    if (x.size() % 2 != 0) {
      throw ValidationError("QuantumState: interleaved vector has odd length");
    }
    const Eigen::Index n = x.size() / 2;
    QuantumState s = zero(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
      s.q(k) = x(2 * k);
      s.p(k) = x(2 * k + 1);
    }
    return s;
  }

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(q.size()); }

  [[nodiscard]] ComplexVector to_complex() const {
    ComplexVector z(q.size());
    for (Eigen::Index k = 0; k < q.size(); ++k) z(k) = Complex(q(k), p(k));
    return z;
  }

  [[nodiscard]] Vector interleaved() const {
    Vector x(2 * q.size());
    for (Eigen::Index k = 0; k < q.size(); ++k) {
      x(2 * k) = q(k);
      x(2 * k + 1) = p(k);
    }
    return x;
  }

  [[nodiscard]] double norm2() const { return q.squaredNorm() + p.squaredNorm(); }

  [[nodiscard]] bool is_normalized(double tol = 1e-12) const { return std::abs(norm2() - 1.0) <= tol; }

  [[nodiscard]] QuantumState normalized() const {
    const double n = std::sqrt(norm2());
    if (!(n > 0.0)) throw ValidationError("QuantumState: cannot normalize the zero vector");
    return {q / n, p / n};
  }
};

/// Darboux coordinates (R, P). For action-angle charts R holds angles and P actions.
struct ClassicalState {
  Vector R;
  Vector P;

  ClassicalState() = default;
  ClassicalState(Vector r, Vector p) : R(std::move(r)), P(std::move(p)) {
    if (R.size() != P.size()) {
      throw ValidationError("ClassicalState: R and P have different lengths");
    }
  }

  static ClassicalState zero(std::size_t n) { return {Vector::Zero(n), Vector::Zero(n)}; }

  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(R.size()); }
};

/// Point of M_C x M_Q.
struct EhrenfestState {
  ClassicalState classical;
  QuantumState quantum;

  EhrenfestState() = default;
  EhrenfestState(ClassicalState c, QuantumState qs) : classical(std::move(c)), quantum(std::move(qs)) {}
  explicit EhrenfestState(QuantumState qs) : classical(ClassicalState::zero(0)), quantum(std::move(qs)) {}

  [[nodiscard]] bool all_finite() const {
    return classical.R.allFinite() && classical.P.allFinite() && quantum.q.allFinite() && quantum.p.allFinite();
  }
};

/// Four coordinate blocks (R, P, q, p). Used both for gradients of functions and for
/// tangent vectors; which one is meant is clear from the producing operation.
struct PhaseBlocks {
  Vector R;
  Vector P;
  Vector q;
  Vector p;

  static PhaseBlocks zero_like(const EhrenfestState& x) {
    const auto nc = static_cast<Eigen::Index>(x.classical.dim());
    const auto nq = static_cast<Eigen::Index>(x.quantum.dim());
    return {Vector::Zero(nc), Vector::Zero(nc), Vector::Zero(nq), Vector::Zero(nq)};
  }

  PhaseBlocks& operator+=(const PhaseBlocks& o) {
    R += o.R;
    P += o.P;
    q += o.q;
    p += o.p;
    return *this;
  }
  PhaseBlocks& operator*=(double s) {
    R *= s;
    P *= s;
    q *= s;
    p *= s;
    return *this;
  }
  friend PhaseBlocks operator+(PhaseBlocks a, const PhaseBlocks& b) { return a += b; }
  friend PhaseBlocks operator*(double s, PhaseBlocks a) { return a *= s; }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (const Vector* v : {&R, &P, &q, &p}) {
      if (v->size() > 0) m = std::max(m, v->cwiseAbs().maxCoeff());
    }
    return m;
  }
};

using Gradient = PhaseBlocks;
using Tangent = PhaseBlocks;

/// x + h * v, blockwise.
inline EhrenfestState displaced(const EhrenfestState& x, const Tangent& v, double h) {
  return {ClassicalState(x.classical.R + h * v.R, x.classical.P + h * v.P),
          QuantumState(x.quantum.q + h * v.q, x.quantum.p + h * v.p)};
}

/// Largest blockwise absolute difference between two states of equal shape.
inline double max_abs_difference(const EhrenfestState& a, const EhrenfestState& b) {
  double m = 0.0;
  auto upd = [&m](const Vector& u, const Vector& v) {
    if (u.size() > 0) m = std::max(m, (u - v).cwiseAbs().maxCoeff());
  };
  upd(a.classical.R, b.classical.R);
  upd(a.classical.P, b.classical.P);
  upd(a.quantum.q, b.quantum.q);
  upd(a.quantum.p, b.quantum.p);
  return m;
}

/// Wraps an angle into [0, 2pi).
inline double wrap_angle(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

/// Wraps an angle into [-pi, pi].
inline double wrap_signed_angle(double a) {
  double w = std::remainder(a, kTwoPi);
  return w;
}

/// Action-angle reading of a one-degree-of-freedom classical state.
struct ActionAngle {
  double angle;
  double action;

  /// Validates I >= 0 and reduces the angle mod 2pi.
  static ActionAngle from_state(const ClassicalState& c, Eigen::Index j = 0) {
    if (j >= c.R.size()) throw ValidationError("ActionAngle: index out of range");
    if (c.P(j) < 0.0) {
      throw ValidationError("ActionAngle: negative action " + std::to_string(c.P(j)));
    }
    return {wrap_angle(c.R(j)), c.P(j)};
  }
};

}  // namespace ehrenfest
