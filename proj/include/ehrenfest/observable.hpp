#pragma once

#include <functional>
#include <utility>

#include "ehrenfest/hermitian.hpp"
#include "ehrenfest/state.hpp"

namespace ehrenfest {

/// A smooth function on M_C x M_Q with its gradient.
///
/// `phase_invariant` marks membership in the observable set (functions killed by the
/// phase generator). Combinators propagate the flag conservatively.
struct Observable {
  std::function<double(const EhrenfestState&)> eval;
  std::function<Gradient(const EhrenfestState&)> grad;
  bool phase_invariant = false;

  double operator()(const EhrenfestState& x) const { return eval(x); }
};

/// f_A(psi) = 1/2 <psi|A psi>; gradient is A_R psi_R.
inline Observable quadratic_observable(const HermitianOperator& a) {
  Observable f;
  f.eval = [a](const EhrenfestState& x) { return 0.5 * a.expectation(x.quantum); };
  f.grad = [a](const EhrenfestState& x) {
    Gradient g = Gradient::zero_like(x);
    const QuantumState ap = a.apply(x.quantum);
    g.q = ap.q;
    g.p = ap.p;
    return g;
  };
  f.phase_invariant = true;
  return f;
}

/// f_I = 1/2 sum(q^2 + p^2), for any quantum dimension.
inline Observable identity_observable() {
  Observable f;
  f.eval = [](const EhrenfestState& x) { return 0.5 * x.quantum.norm2(); };
  f.grad = [](const EhrenfestState& x) {
    Gradient g = Gradient::zero_like(x);
    g.q = x.quantum.q;
    g.p = x.quantum.p;
    return g;
  };
  f.phase_invariant = true;
  return f;
}

/// <psi|A psi> = 2 f_A, the usual expectation value for unit psi.
inline double expectation_value(const HermitianOperator& a, const QuantumState& psi) { return a.expectation(psi); }

/// 1/2 psi_R^T S psi_R for an arbitrary real symmetric S on (q1, p1, ...).
/// Phase invariant exactly when S commutes with the complex structure.
inline Observable real_quadratic_observable(const Matrix& s) {
  if (s.rows() != s.cols() || s.rows() % 2 != 0) {
    throw ValidationError("real_quadratic_observable: need a square matrix of even size");
  }
  const Matrix sym = 0.5 * (s + s.transpose());
  const auto n = static_cast<std::size_t>(sym.rows() / 2);
  const Matrix j = complex_structure(n);
  const Matrix comm = sym * j - j * sym;
  Observable f;
  f.eval = [sym](const EhrenfestState& x) {
    const Vector v = x.quantum.interleaved();
    return 0.5 * v.dot(sym * v);
  };
  f.grad = [sym](const EhrenfestState& x) {
    Gradient g = Gradient::zero_like(x);
    const QuantumState d = QuantumState::from_interleaved(sym * x.quantum.interleaved());
    g.q = d.q;
    g.p = d.p;
    return g;
  };
  f.phase_invariant = comm.size() == 0 || comm.cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + sym.norm());
  return f;
}

/// Function of the classical coordinates only.
inline Observable classical_observable(std::function<double(const ClassicalState&)> value,
                                       std::function<std::pair<Vector, Vector>(const ClassicalState&)> gradient) {
  Observable f;
  f.eval = [value](const EhrenfestState& x) { return value(x.classical); };
  f.grad = [gradient](const EhrenfestState& x) {
    Gradient g = Gradient::zero_like(x);
    auto [dr, dp] = gradient(x.classical);
    g.R = std::move(dr);
    g.P = std::move(dp);
    return g;
  };
  f.phase_invariant = true;
  return f;
}

/// R_j (position) or P_j (momentum) coordinate function.
inline Observable classical_coordinate(bool momentum, Eigen::Index j) {
  return classical_observable([momentum, j](const ClassicalState& c) { return momentum ? c.P(j) : c.R(j); },
                              [momentum, j](const ClassicalState& c) {
                                Vector dr = Vector::Zero(c.R.size());
                                Vector dp = Vector::Zero(c.P.size());
                                (momentum ? dp : dr)(j) = 1.0;
                                return std::make_pair(dr, dp);
                              });
}

/// q_k or p_k. Not phase invariant.
inline Observable quantum_coordinate(bool imaginary, Eigen::Index k) {
  Observable f;
  f.eval = [imaginary, k](const EhrenfestState& x) { return imaginary ? x.quantum.p(k) : x.quantum.q(k); };
  f.grad = [imaginary, k](const EhrenfestState& x) {
    Gradient g = Gradient::zero_like(x);
    (imaginary ? g.p : g.q)(k) = 1.0;
    return g;
  };
  f.phase_invariant = false;
  return f;
}

inline Observable constant_observable(double c) {
  Observable f;
  f.eval = [c](const EhrenfestState&) { return c; };
  f.grad = [](const EhrenfestState& x) { return Gradient::zero_like(x); };
  f.phase_invariant = true;
  return f;
}

inline Observable operator+(const Observable& a, const Observable& b) {
  Observable f;
  f.eval = [a, b](const EhrenfestState& x) { return a.eval(x) + b.eval(x); };
  f.grad = [a, b](const EhrenfestState& x) { return a.grad(x) + b.grad(x); };
  f.phase_invariant = a.phase_invariant && b.phase_invariant;
  return f;
}

inline Observable operator*(double s, const Observable& a) {
  Observable f;
  f.eval = [s, a](const EhrenfestState& x) { return s * a.eval(x); };
  f.grad = [s, a](const EhrenfestState& x) { return s * a.grad(x); };
  f.phase_invariant = a.phase_invariant;
  return f;
}

/// Pointwise product with the product-rule gradient.
inline Observable operator*(const Observable& a, const Observable& b) {
  Observable f;
  f.eval = [a, b](const EhrenfestState& x) { return a.eval(x) * b.eval(x); };
  f.grad = [a, b](const EhrenfestState& x) { return a.eval(x) * b.grad(x) + b.eval(x) * a.grad(x); };
  f.phase_invariant = a.phase_invariant && b.phase_invariant;
  return f;
}

}  // namespace ehrenfest
