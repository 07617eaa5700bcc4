#pragma once

#include <functional>

#include "ehrenfest/observable.hpp"

namespace ehrenfest {

// Gradient-level kernels. All brackets are bilinear in the two gradients, so the
// observable-level functions below only evaluate gradients and call these.

/// sum_k (df/dp_k dg/dq_k - df/dq_k dg/dp_k)
inline double poisson_quantum(const Gradient& df, const Gradient& dg) { return df.p.dot(dg.q) - df.q.dot(dg.p); }

/// sum_k (df/dq_k dg/dq_k + df/dp_k dg/dp_k)
inline double symmetric_bracket(const Gradient& df, const Gradient& dg) { return df.q.dot(dg.q) + df.p.dot(dg.p); }

/// sum_J (df/dP_J dg/dR_J - df/dR_J dg/dP_J)
inline double poisson_classical(const Gradient& df, const Gradient& dg) { return df.P.dot(dg.R) - df.R.dot(dg.P); }

inline void require_positive_hbar(double hbar) {
  if (!(hbar > 0.0) || !std::isfinite(hbar)) {
    throw ValidationError("hbar must be positive and finite, got " + std::to_string(hbar));
  }
}

/// {.,.}_C + hbar^-1 {.,.}_Q
inline double poisson_combined(const Gradient& df, const Gradient& dg, double hbar) {
  require_positive_hbar(hbar);
  return poisson_classical(df, dg) + poisson_quantum(df, dg) / hbar;
}

inline double poisson_quantum(const Observable& f, const Observable& g, const EhrenfestState& at) {
  return poisson_quantum(f.grad(at), g.grad(at));
}
inline double poisson_quantum(const Observable& f, const Observable& g, const QuantumState& at) {
  return poisson_quantum(f, g, EhrenfestState(at));
}

inline double symmetric_bracket(const Observable& f, const Observable& g, const EhrenfestState& at) {
  return symmetric_bracket(f.grad(at), g.grad(at));
}
inline double symmetric_bracket(const Observable& f, const Observable& g, const QuantumState& at) {
  return symmetric_bracket(f, g, EhrenfestState(at));
}

inline double poisson_classical(const Observable& f, const Observable& g, const EhrenfestState& at) {
  return poisson_classical(f.grad(at), g.grad(at));
}
inline double poisson_classical(const Observable& f, const Observable& g, const ClassicalState& at) {
  return poisson_classical(f, g, EhrenfestState(at, QuantumState::zero(0)));
}

inline double poisson_combined(const Observable& f, const Observable& g, const EhrenfestState& at, double hbar) {
  return poisson_combined(f.grad(at), g.grad(at), hbar);
}

/// Phase generator applied to f: sum_k (p_k df/dq_k - q_k df/dp_k).
///
/// Sign chosen so that the generator is exactly the Hamiltonian vector field of f_I,
/// i.e. phase_generator(f) == poisson_quantum(f_I, f). The opposite orientation
/// (q d/dp - p d/dq, rotation z -> e^{+i a} z) differs by an overall sign only; both
/// have the same kernel, which is all the observable set depends on.
inline double phase_generator(const Gradient& df, const QuantumState& at) { return at.p.dot(df.q) - at.q.dot(df.p); }

inline double phase_generator(const Observable& f, const EhrenfestState& at) {
  return phase_generator(f.grad(at), at.quantum);
}

/// X_f = {f, .} with the combined bracket: Rdot = df/dP, Pdot = -df/dR,
/// qdot = hbar^-1 df/dp, pdot = -hbar^-1 df/dq.
inline Tangent hamiltonian_vector_field(const Gradient& df, double hbar) {
  require_positive_hbar(hbar);
  return {df.P, -df.R, df.p / hbar, -df.q / hbar};
}

inline Tangent hamiltonian_vector_field(const Observable& f, const EhrenfestState& at, double hbar) {
  return hamiltonian_vector_field(f.grad(at), hbar);
}

/// Central-difference gradient of an eval-only function. order 2 uses the 3-point
/// stencil; order 4 the 5-point stencil (exact for polynomials up to degree 4).
inline Gradient finite_difference_gradient(const std::function<double(const EhrenfestState&)>& f,
                                           const EhrenfestState& at, double h, int order = 2) {
  if (!(h > 0.0)) throw ValidationError("finite_difference_gradient: h must be positive");
  if (order != 2 && order != 4) throw ValidationError("finite_difference_gradient: order must be 2 or 4");
  Gradient g = Gradient::zero_like(at);
  EhrenfestState x = at;
  auto partial = [&](double& coord) {
    const double c0 = coord;
    auto at_offset = [&](double d) {
      coord = c0 + d;
      const double v = f(x);
      coord = c0;
      return v;
    };
    if (order == 2) return (at_offset(h) - at_offset(-h)) / (2.0 * h);
    return (-at_offset(2 * h) + 8.0 * at_offset(h) - 8.0 * at_offset(-h) + at_offset(-2 * h)) / (12.0 * h);
  };
  for (Eigen::Index j = 0; j < g.R.size(); ++j) g.R(j) = partial(x.classical.R(j));
  for (Eigen::Index j = 0; j < g.P.size(); ++j) g.P(j) = partial(x.classical.P(j));
  for (Eigen::Index k = 0; k < g.q.size(); ++k) g.q(k) = partial(x.quantum.q(k));
  for (Eigen::Index k = 0; k < g.p.size(); ++k) g.p(k) = partial(x.quantum.p(k));
  return g;
}

/// Observable whose gradient is taken numerically (5-point stencil). Used to nest
/// brackets, e.g. {f, {g, h}}, without second derivatives.
inline Observable numeric_observable(std::function<double(const EhrenfestState&)> value, bool phase_invariant,
                                     double h = 1e-3) {
  Observable f;
  f.eval = value;
  f.grad = [value, h](const EhrenfestState& x) { return finite_difference_gradient(value, x, h, 4); };
  f.phase_invariant = phase_invariant;
  return f;
}

/// x -> {f, g}(x) under the combined bracket.
inline Observable bracket_observable(const Observable& f, const Observable& g, double hbar, double h = 1e-3) {
  return numeric_observable([f, g, hbar](const EhrenfestState& x) { return poisson_combined(f, g, x, hbar); },
                            f.phase_invariant && g.phase_invariant, h);
}

/// x -> (Gamma_Q f)(x).
inline Observable phase_derivative_observable(const Observable& f, double h = 1e-3) {
  return numeric_observable([f](const EhrenfestState& x) { return phase_generator(f, x); }, f.phase_invariant, h);
}

}  // namespace ehrenfest
