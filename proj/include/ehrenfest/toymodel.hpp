#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ehrenfest/dynamics.hpp"

namespace ehrenfest::toy {

// One-dimensional oscillator in action-angle variables (theta, I_theta) coupled to a
// two-level system:
//
//   f_H = I_theta + 1/2 <Psi| sigma_z + eps cos(theta) sigma_x |Psi>
//
// With Psi = e^{i alpha} (I_phi, e^{i phi} sqrt(1 - I_phi^2)) this reads
// I_theta + I_phi^2 + eps I_phi sqrt(1 - I_phi^2) cos(theta) cos(phi) - 1/2.
// The quantum part is always integrated in Cartesian (q, p); (I_phi, phi) are views.

struct ToyParams {
  double epsilon = 0.8;

  void validate() const {
    if (!std::isfinite(epsilon) || epsilon < 0.0) throw ValidationError("toy model: epsilon must be finite and >= 0");
  }
};

struct ToyState {
  double theta = 0.0;
  double I_theta = 0.0;
  QuantumState quantum = QuantumState::zero(2);

  /// Builds Psi = e^{i alpha} (I_phi, e^{i phi} sqrt(1 - I_phi^2)).
  static ToyState from_angles(double theta, double I_theta, double I_phi, double phi, double alpha = 0.0) {
    if (!(I_phi >= 0.0 && I_phi <= 1.0)) throw ValidationError("toy state: I_phi must lie in [0, 1]");
    ComplexVector z(2);
    z(0) = std::polar(I_phi, alpha);
    z(1) = std::polar(std::sqrt(1.0 - I_phi * I_phi), alpha + phi);
    return {theta, I_theta, QuantumState::from_complex(z)};
  }

  static ToyState from_ehrenfest(const EhrenfestState& x) {
    if (x.classical.dim() != 1 || x.quantum.dim() != 2) throw ValidationError("toy state: wrong dimensions");
    return {x.classical.R(0), x.classical.P(0), x.quantum};
  }

  [[nodiscard]] EhrenfestState to_ehrenfest() const {
    return {ClassicalState(Vector::Constant(1, theta), Vector::Constant(1, I_theta)), quantum};
  }

  /// |z_1|, in [0, 1] for normalized states.
  [[nodiscard]] double I_phi() const { return std::hypot(quantum.q(0), quantum.p(0)); }

  /// arg(z_2) - arg(z_1) in [-pi, pi].
  [[nodiscard]] double phi() const {
    const Complex z1(quantum.q(0), quantum.p(0));
    const Complex z2(quantum.q(1), quantum.p(1));
    return std::arg(z2 * std::conj(z1));
  }
};

/// H_e(theta) = 1/2 sigma_z + 1/2 eps cos(theta) sigma_x.
inline HermitianOperator electronic_hamiltonian(double theta, const ToyParams& prm) {
  ComplexMatrix m(2, 2);
  const double c = 0.5 * prm.epsilon * std::cos(theta);
  m << 0.5, c, c, -0.5;
  return HermitianOperator(m);
}

/// The toy system as a generic Ehrenfest model (action-angle chart, omega = 1).
inline EhrenfestModel make_model(const ToyParams& prm) {
  prm.validate();
  EhrenfestModel m;
  m.classical_dim = 1;
  m.quantum_dim = 2;
  m.chart = ClassicalChart::kActionAngle;
  m.frequencies = Vector::Ones(1);
  m.electronic_hamiltonian = [prm](const Vector& R) { return electronic_hamiltonian(R(0), prm); };
  m.electronic_gradient = [prm](const Vector& R) {
    ComplexMatrix d(2, 2);
    const double s = -0.5 * prm.epsilon * std::sin(R(0));
    d << 0.0, s, s, 0.0;
    return std::vector<HermitianOperator>{HermitianOperator(d)};
  };
  m.validate();
  return m;
}

/// I_theta + I_phi^2 + eps I_phi sqrt(1 - I_phi^2) cos(theta) cos(phi), evaluated as
/// I_theta + |z1|^2 + eps cos(theta) Re(conj(z1) z2) so no square root appears.
inline double toy_hamiltonian(const ToyState& s, const ToyParams& prm) {
  const QuantumState& psi = s.quantum;
  const double z1sq = psi.q(0) * psi.q(0) + psi.p(0) * psi.p(0);
  const double re12 = psi.q(0) * psi.q(1) + psi.p(0) * psi.p(1);
  return s.I_theta + z1sq + prm.epsilon * std::cos(s.theta) * re12;
}

/// I_theta + f_A(Psi) with A = sigma_z + eps cos(theta) sigma_x, through the
/// quadratic-observable machinery. Equals toy_hamiltonian - 1/2 on the unit sphere.
inline double quantum_form_hamiltonian(const ToyState& s, const ToyParams& prm) {
  const HermitianOperator a =
      HermitianOperator::pauli_z() + (prm.epsilon * std::cos(s.theta)) * HermitianOperator::pauli_x();
  return s.I_theta + quadratic_observable(a).eval(EhrenfestState(s.quantum));
}

/// Time derivative of the full state (theta, I_theta, q, p), hbar = 1.
inline Tangent toy_rhs(const ToyState& s, const ToyParams& prm) {
  return ehrenfest_rhs(make_model(prm), s.to_ehrenfest(), 1.0);
}

/// Rates of the derived views (I_phi, phi) implied by a Cartesian tangent vector.
struct ViewRates {
  double I_phi_dot;
  double phi_dot;
};

inline ViewRates view_rates(const ToyState& s, const Tangent& v) {
  const QuantumState& x = s.quantum;
  const double r1sq = x.q(0) * x.q(0) + x.p(0) * x.p(0);
  const double r2sq = x.q(1) * x.q(1) + x.p(1) * x.p(1);
  const double i_dot = (x.q(0) * v.q(0) + x.p(0) * v.p(0)) / std::sqrt(r1sq);
  const double arg1_dot = (x.q(0) * v.p(0) - x.p(0) * v.q(0)) / r1sq;
  const double arg2_dot = (x.q(1) * v.p(1) - x.p(1) * v.q(1)) / r2sq;
  return {i_dot, arg2_dot - arg1_dot};
}

/// I_theta.
inline Observable action_observable() { return classical_coordinate(true, 0); }

/// I_phi^2 = |z1|^2, as f_A with A = diag(2, 0).
inline Observable I_phi_squared_observable() {
  ComplexMatrix a = ComplexMatrix::Zero(2, 2);
  a(0, 0) = 2.0;
  return quadratic_observable(HermitianOperator(a));
}

/// <sigma_z> = 2 f_{sigma_z}.
inline Observable sigma_z_observable() { return 2.0 * quadratic_observable(HermitianOperator::pauli_z()); }

/// cos(phi) = Re(conj(z1) z2) / (|z1| |z2|). Undefined where z1 or z2 vanishes.
inline Observable cos_phi_observable() {
  Observable f;
  f.eval = [](const EhrenfestState& x) {
    const QuantumState& s = x.quantum;
    const double w = s.q(0) * s.q(1) + s.p(0) * s.p(1);
    return w / (std::hypot(s.q(0), s.p(0)) * std::hypot(s.q(1), s.p(1)));
  };
  f.grad = [](const EhrenfestState& x) {
    const QuantumState& s = x.quantum;
    const double w = s.q(0) * s.q(1) + s.p(0) * s.p(1);
    const double r1sq = s.q(0) * s.q(0) + s.p(0) * s.p(0);
    const double r2sq = s.q(1) * s.q(1) + s.p(1) * s.p(1);
    const double inv = 1.0 / std::sqrt(r1sq * r2sq);
    Gradient g = Gradient::zero_like(x);
    g.q(0) = inv * (s.q(1) - w * s.q(0) / r1sq);
    g.p(0) = inv * (s.p(1) - w * s.p(0) / r1sq);
    g.q(1) = inv * (s.q(0) - w * s.q(1) / r2sq);
    g.p(1) = inv * (s.p(0) - w * s.p(1) / r2sq);
    return g;
  };
  f.phase_invariant = true;
  return f;
}

struct PoincareRecord {
  long n = 0;
  double phi = 0.0;
  double I_phi = 0.0;
};

struct PoincareOptions {
  int steps_per_period = 200;
  Integrator integrator = Integrator::kStrang;
};

struct PoincareResult {
  std::vector<PoincareRecord> records;
  bool truncated = false;
  std::string failure;
  double energy_drift = 0.0;  // max relative |f_H - f_H(0)| over crossings
  ToyState final_state;
};

/// Stroboscopic section at theta = 0 mod 2pi. Since thetadot = 1 exactly, crossing n
/// happens at t_n = 2 pi n - theta_0 (theta_0 reduced into [0, 2pi); a start on the
/// section is not itself recorded). Each inter-crossing segment is integrated with
/// equal steps of about 2pi / steps_per_period.
inline PoincareResult poincare_section(const ToyState& initial, const ToyParams& prm, long n_crossings,
                                       const PoincareOptions& opt = {}) {
  if (n_crossings < 1) throw ValidationError("poincare_section: need at least one crossing");
  if (opt.steps_per_period < 1) throw ValidationError("poincare_section: steps_per_period must be >= 1");
  const EhrenfestModel model = make_model(prm);
  PoincareResult out;
  out.records.reserve(static_cast<std::size_t>(n_crossings));
  EhrenfestState x = initial.to_ehrenfest();
  x.classical.R(0) = wrap_angle(x.classical.R(0));
  const double e0 = toy_hamiltonian(initial, prm);
  const double escale = std::abs(e0) > 1e-300 ? std::abs(e0) : 1.0;
  for (long n = 1; n <= n_crossings; ++n) {
    const double span = kTwoPi - x.classical.R(0);
    const long k = std::max(1L, static_cast<long>(std::ceil(span / kTwoPi * opt.steps_per_period - 1e-9)));
    const double dt = span / static_cast<double>(k);
    try {
      for (long i = 0; i < k; ++i) x = step(opt.integrator, model, x, dt, 1.0);
    } catch (const NumericalError& e) {
      out.truncated = true;
      out.failure = e.what();
      break;
    }
    if (!x.all_finite()) {
      out.truncated = true;
      out.failure = "non-finite state before crossing " + std::to_string(n);
      break;
    }
    x.classical.R(0) = 0.0;  // on the section; the angle is only defined mod 2pi
    const ToyState s = ToyState::from_ehrenfest(x);
    out.records.push_back({n, s.phi(), s.I_phi()});
    out.energy_drift = std::max(out.energy_drift, std::abs(toy_hamiltonian(s, prm) - e0) / escale);
  }
  out.final_state = ToyState::from_ehrenfest(x);
  return out;
}

/// Hamilton's equations of the reduced Hamiltonian in the (phi, I_phi) chart with
/// phi taken as the coordinate conjugate to I_phi:
///   phidot = df/dI_phi, I_phidot = -df/dphi, thetadot = 1, I_thetadot = -df/dtheta.
///
/// This is NOT the Ehrenfest flow of the toy model: under the quantum bracket the
/// variable conjugate to phi is I_phi^2 = |z1|^2, and the Cartesian flow is the linear
/// periodically driven Schrodinger equation. The reduced system is kept as an
/// alternative chart for comparison of Poincare sections; it is singular at
/// I_phi in {0, 1}, where the orbit is truncated.
inline PoincareResult poincare_section_reduced(const ToyState& initial, const ToyParams& prm, long n_crossings,
                                               int steps_per_period = 200) {
  if (n_crossings < 1) throw ValidationError("poincare_section_reduced: need at least one crossing");
  if (steps_per_period < 1) throw ValidationError("poincare_section_reduced: steps_per_period must be >= 1");
  prm.validate();
  const double eps = prm.epsilon;
  struct Y {
    double theta, I_theta, phi, I;
  };
  auto rhs = [eps](const Y& y) {
    const double s = std::sqrt(1.0 - y.I * y.I);
    const double ct = std::cos(y.theta);
    const double st = std::sin(y.theta);
    const double cp = std::cos(y.phi);
    const double sp = std::sin(y.phi);
    return Y{1.0, eps * y.I * s * st * cp, 2.0 * y.I + eps * ct * cp * (1.0 - 2.0 * y.I * y.I) / s,
             eps * y.I * s * ct * sp};
  };
  auto energy = [eps](const Y& y) {
    return y.I_theta + y.I * y.I + eps * y.I * std::sqrt(1.0 - y.I * y.I) * std::cos(y.theta) * std::cos(y.phi);
  };
  Y y{wrap_angle(initial.theta), initial.I_theta, initial.phi(), initial.I_phi()};
  PoincareResult out;
  const double e0 = energy(y);
  const double escale = std::abs(e0) > 1e-300 ? std::abs(e0) : 1.0;
  auto axpy = [](const Y& a, const Y& k, double h) {
    return Y{a.theta + h * k.theta, a.I_theta + h * k.I_theta, a.phi + h * k.phi, a.I + h * k.I};
  };
  for (long n = 1; n <= n_crossings && !out.truncated; ++n) {
    const double span = kTwoPi - y.theta;
    const long k = std::max(1L, static_cast<long>(std::ceil(span / kTwoPi * steps_per_period - 1e-9)));
    const double dt = span / static_cast<double>(k);
    for (long i = 0; i < k; ++i) {
      const Y last = y;
      const Y k1 = rhs(y);
      const Y k2 = rhs(axpy(y, k1, 0.5 * dt));
      const Y k3 = rhs(axpy(y, k2, 0.5 * dt));
      const Y k4 = rhs(axpy(y, k3, dt));
      y = Y{y.theta + dt / 6 * (k1.theta + 2 * k2.theta + 2 * k3.theta + k4.theta),
            y.I_theta + dt / 6 * (k1.I_theta + 2 * k2.I_theta + 2 * k3.I_theta + k4.I_theta),
            y.phi + dt / 6 * (k1.phi + 2 * k2.phi + 2 * k3.phi + k4.phi),
            y.I + dt / 6 * (k1.I + 2 * k2.I + 2 * k3.I + k4.I)};
      if (!(y.I > 0.0 && y.I < 1.0) || !std::isfinite(y.phi) || !std::isfinite(y.I_theta)) {
        out.truncated = true;
        out.failure = "orbit reached the chart singularity I_phi in {0, 1} before crossing " + std::to_string(n);
        y = last;
        break;
      }
    }
    if (out.truncated) break;
    y.theta = 0.0;
    out.records.push_back({n, wrap_signed_angle(y.phi), y.I});
    out.energy_drift = std::max(out.energy_drift, std::abs(energy(y) - e0) / escale);
  }
  out.final_state = ToyState::from_angles(y.theta, y.I_theta, std::clamp(y.I, 0.0, 1.0), y.phi);
  return out;
}

/// Fraction of cells of a grid_x x grid_y grid over [-pi, pi] x [0, 1] hit by at least
/// one record.
inline double fill_fraction(const std::vector<PoincareRecord>& records, int grid_x, int grid_y) {
  if (grid_x < 2 || grid_y < 2) throw ValidationError("fill_fraction: grid dimensions must be >= 2");
  if (records.empty()) return 0.0;
  std::vector<char> hit(static_cast<std::size_t>(grid_x) * static_cast<std::size_t>(grid_y), 0);
  for (const auto& r : records) {
    int ix = static_cast<int>(std::floor((r.phi + kPi) / kTwoPi * grid_x));
    int iy = static_cast<int>(std::floor(r.I_phi * grid_y));
    ix = std::clamp(ix, 0, grid_x - 1);
    iy = std::clamp(iy, 0, grid_y - 1);
    hit[static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid_x) + static_cast<std::size_t>(ix)] = 1;
  }
  std::size_t count = 0;
  for (char h : hit) count += static_cast<std::size_t>(h);
  return static_cast<double>(count) / static_cast<double>(hit.size());
}

}  // namespace ehrenfest::toy
