#pragma once

#include <functional>
#include <random>
#include <vector>

#include "ehrenfest/hermitian.hpp"
#include "ehrenfest/state.hpp"

namespace ehrenfest {

enum class ClassicalChart {
  kCartesian,    // T = sum P_J^2 / 2 M_J
  kActionAngle,  // T = sum omega_J I_J, R holds angles, P holds actions
};

/// Parametrized electronic Hamiltonian H_e(R) with its R-gradient, plus the classical
/// kinetic term and an optional classical potential. Immutable once built; safe to
/// share between threads.
struct EhrenfestModel {
  std::size_t classical_dim = 0;
  std::size_t quantum_dim = 0;
  ClassicalChart chart = ClassicalChart::kCartesian;
  Vector masses;
  Vector frequencies;
  std::function<HermitianOperator(const Vector&)> electronic_hamiltonian;
  std::function<std::vector<HermitianOperator>(const Vector&)> electronic_gradient;
  std::function<double(const Vector&)> classical_potential;
  std::function<Vector(const Vector&)> classical_potential_gradient;

  [[nodiscard]] double kinetic_energy(const Vector& P) const {
    if (chart == ClassicalChart::kActionAngle) return frequencies.dot(P);
    return 0.5 * P.cwiseProduct(P).cwiseQuotient(masses).sum();
  }

  /// dT/dP.
  [[nodiscard]] Vector velocity(const Vector& P) const {
    if (chart == ClassicalChart::kActionAngle) return frequencies;
    return P.cwiseQuotient(masses);
  }

  [[nodiscard]] double potential(const Vector& R) const { return classical_potential ? classical_potential(R) : 0.0; }

  [[nodiscard]] Vector potential_gradient(const Vector& R) const {
    return classical_potential_gradient ? classical_potential_gradient(R) : Vector::Zero(R.size());
  }

  /// Structural checks; throws ValidationError.
  void validate() const {
    const auto nc = static_cast<Eigen::Index>(classical_dim);
    if (quantum_dim == 0) throw ValidationError("model: quantum dimension must be at least 1");
    if (!electronic_hamiltonian || !electronic_gradient) {
      throw ValidationError("model: electronic Hamiltonian and its gradient are required");
    }
    if (chart == ClassicalChart::kCartesian) {
      if (masses.size() != nc) throw ValidationError("model: need one mass per classical coordinate");
      for (Eigen::Index j = 0; j < nc; ++j) {
        if (!(masses(j) > 0.0) || !std::isfinite(masses(j))) throw ValidationError("model: masses must be positive");
      }
    } else {
      if (frequencies.size() != nc) throw ValidationError("model: need one frequency per action-angle pair");
      if (!frequencies.allFinite()) throw ValidationError("model: frequencies must be finite");
    }
    if (static_cast<bool>(classical_potential) != static_cast<bool>(classical_potential_gradient)) {
      throw ValidationError("model: classical potential and its gradient must be given together");
    }
  }

  [[nodiscard]] EhrenfestState make_state(Vector R, Vector P, QuantumState psi) const {
    if (R.size() != static_cast<Eigen::Index>(classical_dim) || psi.dim() != quantum_dim) {
      throw ValidationError("model: state dimensions do not match the model");
    }
    return {ClassicalState(std::move(R), std::move(P)), std::move(psi)};
  }
};

/// Residuals from probing a model at sampled classical configurations.
struct ModelConsistency {
  double max_hermiticity_residual = 0.0;
  double max_gradient_error = 0.0;  // vs central differences of H_e
};

/// Probes H_e at `samples` random R ~ N(0, scale^2) and compares the analytic gradient
/// with central differences (h = 1e-5).
inline ModelConsistency check_model_consistency(const EhrenfestModel& model, std::mt19937_64& rng, int samples = 8,
                                                double scale = 1.0) {
  model.validate();
  std::normal_distribution<double> normal(0.0, scale);
  ModelConsistency out;
  const auto nc = static_cast<Eigen::Index>(model.classical_dim);
  constexpr double h = 1e-5;
  for (int s = 0; s < samples; ++s) {
    Vector R(nc);
    for (Eigen::Index j = 0; j < nc; ++j) R(j) = normal(rng);
    const HermitianOperator he = model.electronic_hamiltonian(R);
    if (he.dim() != model.quantum_dim) throw ValidationError("model: H_e has the wrong dimension");
    out.max_hermiticity_residual = std::max(out.max_hermiticity_residual, hermiticity_residual(he.complex()));
    const auto grads = model.electronic_gradient(R);
    if (grads.size() != model.classical_dim) throw ValidationError("model: need one gradient operator per R_J");
    for (Eigen::Index j = 0; j < nc; ++j) {
      Vector rp = R;
      Vector rm = R;
      rp(j) += h;
      rm(j) -= h;
      const ComplexMatrix fd =
          (model.electronic_hamiltonian(rp).complex() - model.electronic_hamiltonian(rm).complex()) / (2.0 * h);
      const double err = (fd - grads[static_cast<std::size_t>(j)].complex()).cwiseAbs().maxCoeff();
      out.max_gradient_error = std::max(out.max_gradient_error, err);
    }
  }
  return out;
}

struct SpinOscillatorParams {
  double mass = 1.0;
  double omega = 1.0;
  double coupling = 0.1;   // epsilon in H_e = 1/2 sigma_z + epsilon R sigma_x
  double splitting = 1.0;  // prefactor of 1/2 sigma_z
};

/// H_c = P^2/2M + 1/2 M omega^2 R^2, H_e(R) = 1/2 Delta sigma_z + epsilon R sigma_x.
inline EhrenfestModel spin_oscillator_model(const SpinOscillatorParams& prm) {
  EhrenfestModel m;
  m.classical_dim = 1;
  m.quantum_dim = 2;
  m.chart = ClassicalChart::kCartesian;
  m.masses = Vector::Constant(1, prm.mass);
  const HermitianOperator sz = HermitianOperator::pauli_z();
  const HermitianOperator sx = HermitianOperator::pauli_x();
  m.electronic_hamiltonian = [=](const Vector& R) { return (0.5 * prm.splitting) * sz + (prm.coupling * R(0)) * sx; };
  m.electronic_gradient = [=](const Vector&) { return std::vector<HermitianOperator>{prm.coupling * sx}; };
  const double k = prm.mass * prm.omega * prm.omega;
  m.classical_potential = [k](const Vector& R) { return 0.5 * k * R.squaredNorm(); };
  m.classical_potential_gradient = [k](const Vector& R) { return Vector(k * R); };
  m.validate();
  return m;
}

/// H_e(R) = H0 + sum_J R_J H_J with Cartesian classical part and optional harmonic
/// confinement 1/2 M_J omega_J^2 R_J^2. Backs the matrix-file model.
struct LinearCouplingSpec {
  Vector masses;
  Vector omegas;  // empty or one per coordinate
  HermitianOperator h0;
  std::vector<HermitianOperator> couplings;
};

inline EhrenfestModel linear_coupling_model(const LinearCouplingSpec& spec) {
  EhrenfestModel m;
  m.classical_dim = static_cast<std::size_t>(spec.masses.size());
  m.quantum_dim = spec.h0.dim();
  m.chart = ClassicalChart::kCartesian;
  m.masses = spec.masses;
  if (spec.couplings.size() != m.classical_dim) {
    throw ValidationError("matrix model: need one coupling matrix per classical coordinate");
  }
  for (const auto& c : spec.couplings) {
    if (c.dim() != m.quantum_dim) throw ValidationError("matrix model: coupling matrices differ in dimension from H0");
  }
  const HermitianOperator h0 = spec.h0;
  const std::vector<HermitianOperator> hs = spec.couplings;
  m.electronic_hamiltonian = [h0, hs](const Vector& R) {
    HermitianOperator h = h0;
    for (std::size_t j = 0; j < hs.size(); ++j) h += R(static_cast<Eigen::Index>(j)) * hs[j];
    return h;
  };
  m.electronic_gradient = [hs](const Vector&) { return hs; };
  if (spec.omegas.size() > 0) {
    if (spec.omegas.size() != spec.masses.size()) throw ValidationError("matrix model: need one omega per mass");
    const Vector k = spec.masses.cwiseProduct(spec.omegas.cwiseProduct(spec.omegas));
    m.classical_potential = [k](const Vector& R) { return 0.5 * k.dot(R.cwiseProduct(R)); };
    m.classical_potential_gradient = [k](const Vector& R) { return Vector(k.cwiseProduct(R)); };
  }
  m.validate();
  return m;
}

}  // namespace ehrenfest
