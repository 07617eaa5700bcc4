#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "ehrenfest/brackets.hpp"
#include "ehrenfest/model.hpp"

namespace ehrenfest {

/// f_H = T(P) + V(R) + <psi|H_e(R) psi>, with the full (unhalved) expectation value.
inline double total_energy(const EhrenfestModel& model, const EhrenfestState& x) {
  return model.kinetic_energy(x.classical.P) + model.potential(x.classical.R) +
         model.electronic_hamiltonian(x.classical.R).expectation(x.quantum);
}

/// -dF/dR: -<psi|dH_e/dR_J psi> - dV/dR_J. Derivative inside the expectation.
inline Vector ehrenfest_force(const EhrenfestModel& model, const Vector& R, const QuantumState& psi) {
  const auto grads = model.electronic_gradient(R);
  Vector f = -model.potential_gradient(R);
  for (std::size_t j = 0; j < grads.size(); ++j) f(static_cast<Eigen::Index>(j)) -= grads[j].expectation(psi);
  return f;
}

/// Rdot = dT/dP, Pdot = force, psidot = -(i/hbar) H_e(R) psi.
inline Tangent ehrenfest_rhs(const EhrenfestModel& model, const EhrenfestState& x, double hbar) {
  require_positive_hbar(hbar);
  const QuantumState hpsi = model.electronic_hamiltonian(x.classical.R).apply(x.quantum);
  return {model.velocity(x.classical.P), ehrenfest_force(model, x.classical.R, x.quantum), hpsi.p / hbar,
          -hpsi.q / hbar};
}

/// The total-energy function as an observable, with analytic gradient.
inline Observable hamiltonian_observable(const EhrenfestModel& model) {
  Observable f;
  f.eval = [model](const EhrenfestState& x) { return total_energy(model, x); };
  f.grad = [model](const EhrenfestState& x) {
    Gradient g = Gradient::zero_like(x);
    g.R = -ehrenfest_force(model, x.classical.R, x.quantum);
    g.P = model.velocity(x.classical.P);
    const QuantumState hpsi = model.electronic_hamiltonian(x.classical.R).apply(x.quantum);
    g.q = 2.0 * hpsi.q;
    g.p = 2.0 * hpsi.p;
    return g;
  };
  f.phase_invariant = true;
  return f;
}

/// Bracket parameter under which the Hamiltonian vector field of the total-energy
/// function reproduces the Ehrenfest equations with Planck constant `hbar`.
///
/// The energy carries the full expectation <psi|H_e psi> = 2 f_{H_e}, while the quantum
/// bracket is normalized for the halved observables f_A. Generating
/// i hbar psidot = H_e psi from the full expectation therefore needs the quantum bracket
/// scaled by 1/(2 hbar).
inline double geometric_hbar(double hbar) { return 2.0 * hbar; }

inline void require_nonzero_step(double dt) {
  if (dt == 0.0 || !std::isfinite(dt)) throw ValidationError("time step must be finite and nonzero");
}

/// Kick-drift-kick splitting with an exact unitary quantum substep:
///   P += dt/2 F(R, psi); R += dt dT/dP; psi <- exp(-i dt H_e(R_mid)/hbar) psi;
///   P += dt/2 F(R', psi').
/// R_mid is the midpoint of the drift. The step is symmetric (dt -> -dt inverts it)
/// and the quantum norm is preserved up to rounding.
inline EhrenfestState step_strang(const EhrenfestModel& model, const EhrenfestState& x, double dt, double hbar) {
  require_nonzero_step(dt);
  require_positive_hbar(hbar);
  const Vector& R0 = x.classical.R;
  const Vector p_half = x.classical.P + 0.5 * dt * ehrenfest_force(model, R0, x.quantum);
  Vector R1 = R0 + dt * model.velocity(p_half);
  const Vector r_mid = 0.5 * (R0 + R1);
  const ComplexVector z =
      unitary_propagate(model.electronic_hamiltonian(r_mid), x.quantum.to_complex(), dt / hbar);
  QuantumState psi1 = QuantumState::from_complex(z);
  Vector P1 = p_half + 0.5 * dt * ehrenfest_force(model, R1, psi1);
  return {ClassicalState(std::move(R1), std::move(P1)), std::move(psi1)};
}

/// Classical fourth-order Runge-Kutta on ehrenfest_rhs.
inline EhrenfestState step_rk4(const EhrenfestModel& model, const EhrenfestState& x, double dt, double hbar) {
  require_nonzero_step(dt);
  const Tangent k1 = ehrenfest_rhs(model, x, hbar);
  const Tangent k2 = ehrenfest_rhs(model, displaced(x, k1, 0.5 * dt), hbar);
  const Tangent k3 = ehrenfest_rhs(model, displaced(x, k2, 0.5 * dt), hbar);
  const Tangent k4 = ehrenfest_rhs(model, displaced(x, k3, dt), hbar);
  Tangent sum = k1 + 2.0 * k2 + 2.0 * k3 + k4;
  return displaced(x, sum, dt / 6.0);
}

enum class Integrator { kStrang, kRk4 };

inline EhrenfestState step(Integrator method, const EhrenfestModel& model, const EhrenfestState& x, double dt,
                           double hbar) {
  return method == Integrator::kStrang ? step_strang(model, x, dt, hbar) : step_rk4(model, x, dt, hbar);
}

inline std::string to_string(Integrator method) { return method == Integrator::kStrang ? "strang" : "rk4"; }

struct Trajectory {
  std::vector<double> times;
  std::vector<EhrenfestState> states;
  std::vector<double> energy;  // f_H
  std::vector<double> norm;    // f_I = 1/2 |psi|^2
  bool failed = false;
  std::string failure;

  [[nodiscard]] std::size_t size() const { return times.size(); }

  /// max_t |E(t) - E(0)| / |E(0)|; absolute when |E(0)| < 1e-300.
  [[nodiscard]] double relative_energy_drift() const {
    if (energy.empty()) return 0.0;
    const double scale = std::abs(energy.front()) > 1e-300 ? std::abs(energy.front()) : 1.0;
    double m = 0.0;
    for (double e : energy) m = std::max(m, std::abs(e - energy.front()) / scale);
    return m;
  }

  /// max_t |f_I(t) - f_I(0)|.
  [[nodiscard]] double norm_drift() const {
    double m = 0.0;
    for (double n : norm) m = std::max(m, std::abs(n - norm.front()));
    return m;
  }
};

/// Runs n_steps steps, recording step 0, every record_every-th step and the final
/// step. A non-finite state or a numerical failure truncates the trajectory and sets
/// `failed`; values are never clamped.
inline Trajectory propagate(const EhrenfestModel& model, const EhrenfestState& initial, double dt, long n_steps,
                            Integrator method, double hbar, long record_every) {
  if (n_steps < 1) throw ValidationError("propagate: n_steps must be at least 1");
  if (record_every < 1) throw ValidationError("propagate: record_every must be at least 1");
  require_nonzero_step(dt);
  require_positive_hbar(hbar);
  Trajectory traj;
  auto record = [&](double t, const EhrenfestState& x) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.energy.push_back(total_energy(model, x));
    traj.norm.push_back(0.5 * x.quantum.norm2());
  };
  EhrenfestState x = initial;
  record(0.0, x);
  for (long n = 1; n <= n_steps; ++n) {
    try {
      x = step(method, model, x, dt, hbar);
    } catch (const NumericalError& e) {
      traj.failed = true;
      traj.failure = e.what();
      return traj;
    }
    if (!x.all_finite()) {
      traj.failed = true;
      traj.failure = "non-finite state at step " + std::to_string(n);
      return traj;
    }
    if (n % record_every == 0 || n == n_steps) record(static_cast<double>(n) * dt, x);
  }
  return traj;
}

}  // namespace ehrenfest
