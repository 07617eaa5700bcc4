#include <gtest/gtest.h>

#include <random>

#include "ehrenfest/dynamics.hpp"
#include "ehrenfest/random.hpp"
#include "ehrenfest/statmech.hpp"
#include "ehrenfest/toymodel.hpp"
#include "oracles.hpp"

using namespace ehrenfest;

namespace {

QuantumState up() { return QuantumState::from_complex(ComplexVector::Unit(2, 0)); }

EhrenfestModel free_model(double mass) {
  EhrenfestModel m;
  m.classical_dim = 1;
  m.quantum_dim = 2;
  m.masses = Vector::Constant(1, mass);
  m.electronic_hamiltonian = [](const Vector&) { return HermitianOperator::zero(2); };
  m.electronic_gradient = [](const Vector&) { return std::vector<HermitianOperator>{HermitianOperator::zero(2)}; };
  m.validate();
  return m;
}

/// Constant H_e plus a harmonic classical part: classical and quantum motion decouple.
EhrenfestModel decoupled_model(const HermitianOperator& h, double k) {
  EhrenfestModel m;
  m.classical_dim = 1;
  m.quantum_dim = h.dim();
  m.masses = Vector::Constant(1, 1.0);
  m.electronic_hamiltonian = [h](const Vector&) { return h; };
  m.electronic_gradient = [n = h.dim()](const Vector&) {
    return std::vector<HermitianOperator>{HermitianOperator::zero(n)};
  };
  m.classical_potential = [k](const Vector& R) { return 0.5 * k * R.squaredNorm(); };
  m.classical_potential_gradient = [k](const Vector& R) { return Vector(k * R); };
  m.validate();
  return m;
}

EhrenfestState osc_start() { return {ClassicalState(Vector::Constant(1, 1.0), Vector::Zero(1)), up()}; }

}  // namespace

TEST(TotalEnergy, Examples) {
  SpinOscillatorParams sp;
  sp.coupling = 0.0;
  sp.omega = 0.0;
  const EhrenfestModel m = spin_oscillator_model(sp);
  EXPECT_DOUBLE_EQ(total_energy(m, {ClassicalState(Vector::Zero(1), Vector::Zero(1)), up()}), 0.5);
  EXPECT_DOUBLE_EQ(total_energy(free_model(2.0), {ClassicalState(Vector::Zero(1), Vector::Constant(1, 2.0)), up()}),
                   1.0);
}

TEST(TotalEnergy, EigenstateGivesEigenvalue) {
  std::mt19937_64 rng(31);
  LinearCouplingSpec spec{Vector::Constant(1, 1.0), Vector(), random_hermitian(3, rng), {random_hermitian(3, rng)}};
  const EhrenfestModel m = linear_coupling_model(spec);
  const Vector R = Vector::Constant(1, 0.4);
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m.electronic_hamiltonian(R).complex());
  for (Eigen::Index k = 0; k < 3; ++k) {
    const EhrenfestState x(ClassicalState(R, Vector::Zero(1)), QuantumState::from_complex(es.eigenvectors().col(k)));
    EXPECT_NEAR(total_energy(m, x), es.eigenvalues()(k), 1e-13);
  }
}

TEST(EhrenfestRhs, HellmannFeynmanForceAtEigenstate) {
  std::mt19937_64 rng(32);
  LinearCouplingSpec spec{Vector::Constant(2, 1.0), Vector(), random_hermitian(3, rng),
                          {random_hermitian(3, rng), random_hermitian(3, rng)}};
  const EhrenfestModel m = linear_coupling_model(spec);
  Vector R(2);
  R << 0.3, -0.2;
  auto eig = [&](const Vector& r, Eigen::Index k) {
    return Eigen::SelfAdjointEigenSolver<ComplexMatrix>(m.electronic_hamiltonian(r).complex()).eigenvalues()(k);
  };
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(m.electronic_hamiltonian(R).complex());
  for (Eigen::Index k = 0; k < 3; ++k) {
    const EhrenfestState x(ClassicalState(R, Vector::Zero(2)), QuantumState::from_complex(es.eigenvectors().col(k)));
    const Tangent v = ehrenfest_rhs(m, x, 1.0);
    for (Eigen::Index j = 0; j < 2; ++j) {
      const double h = 1e-5;
      Vector rp = R, rm = R;
      rp(j) += h;
      rm(j) -= h;
      EXPECT_NEAR(v.P(j), -(eig(rp, k) - eig(rm, k)) / (2 * h), 1e-7);
    }
  }
}

TEST(EhrenfestRhs, ConstantElectronicHamiltonianHasNoBackReaction) {
  std::mt19937_64 rng(33);
  const EhrenfestModel m = decoupled_model(random_hermitian(2, rng), 2.0);
  const EhrenfestState x(ClassicalState(Vector::Constant(1, 0.7), Vector::Constant(1, 0.1)),
                         sample_sphere_uniform(2, rng));
  EXPECT_DOUBLE_EQ(ehrenfest_rhs(m, x, 1.0).P(0), -1.4);
}

TEST(EhrenfestRhs, DecoupledIsProductOfParts) {
  std::mt19937_64 rng(34);
  const HermitianOperator h = random_hermitian(2, rng);
  const EhrenfestModel m = decoupled_model(h, 3.0);
  const EhrenfestState x(ClassicalState(Vector::Constant(1, 0.5), Vector::Constant(1, -0.4)),
                         sample_sphere_uniform(2, rng));
  const Tangent v = ehrenfest_rhs(m, x, 1.0);
  EXPECT_DOUBLE_EQ(v.R(0), -0.4);
  EXPECT_DOUBLE_EQ(v.P(0), -1.5);
  const Tangent vq = hamiltonian_vector_field(quadratic_observable(h), x, 1.0);
  EXPECT_LE((v.q - vq.q).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LE((v.p - vq.p).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(EhrenfestRhs, EqualsHamiltonianVectorFieldOfEnergy) {
  std::mt19937_64 rng(35);
  const std::vector<EhrenfestModel> models = {spin_oscillator_model({}), toy::make_model({0.8})};
  for (double hbar : {1.0, 0.3, 2.0}) {
    for (const auto& m : models) {
      for (int i = 0; i < 10; ++i) {
        const EhrenfestState x(ClassicalState(random_vector(1, rng), random_vector(1, rng).cwiseAbs()),
                               sample_sphere_uniform(2, rng));
        const Tangent a = hamiltonian_vector_field(hamiltonian_observable(m), x, geometric_hbar(hbar));
        EXPECT_LE((a + (-1.0) * ehrenfest_rhs(m, x, hbar)).max_abs(), 1e-10);
      }
    }
  }
}

TEST(EhrenfestRhs, EnergyGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(36);
  const EhrenfestModel m = spin_oscillator_model({});
  const Observable fh = hamiltonian_observable(m);
  const EhrenfestState x(ClassicalState(random_vector(1, rng), random_vector(1, rng)), sample_sphere_uniform(2, rng));
  EXPECT_LE((finite_difference_gradient(fh.eval, x, 1e-5) + (-1.0) * fh.grad(x)).max_abs(), 1e-8);
}

TEST(Model, ConsistencyProbe) {
  std::mt19937_64 rng(37);
  for (const auto& m : {spin_oscillator_model({}), toy::make_model({0.8})}) {
    const ModelConsistency c = check_model_consistency(m, rng);
    EXPECT_LE(c.max_hermiticity_residual, 1e-12);
    EXPECT_LE(c.max_gradient_error, 1e-6);
  }
}

TEST(Model, ValidationErrors) {
  EhrenfestModel m = free_model(1.0);
  m.masses(0) = -1.0;
  EXPECT_THROW(m.validate(), ValidationError);
  std::mt19937_64 rng(38);
  EXPECT_THROW(linear_coupling_model({Vector::Constant(2, 1.0), Vector(), random_hermitian(2, rng),
                                      {random_hermitian(2, rng)}}),
               ValidationError);
}

TEST(StepStrang, FrozenHamiltonianIsExact) {
  std::mt19937_64 rng(39);
  const HermitianOperator h = random_hermitian(3, rng);
  const EhrenfestModel m = decoupled_model(h, 1.0);
  const QuantumState psi = sample_sphere_uniform(3, rng);
  const EhrenfestState x(ClassicalState(Vector::Zero(1), Vector::Zero(1)), psi);
  for (double dt : {0.01, 0.3}) {
    for (double hbar : {1.0, 0.5}) {
      const EhrenfestState y = step_strang(m, x, dt, hbar);
      const oracle::CVec expect = oracle::propagate(h.complex(), psi.to_complex(), dt / hbar);
      EXPECT_LE((y.quantum.to_complex() - expect).cwiseAbs().maxCoeff(), 1e-13);
    }
  }
}

TEST(StepStrang, HarmonicPeriodSecondOrder) {
  const EhrenfestModel m = decoupled_model(HermitianOperator::pauli_z(), 4.0);  // omega = 2
  auto err = [&](long n) {
    const double dt = kPi / static_cast<double>(n);
    EhrenfestState x = osc_start();
    for (long i = 0; i < n; ++i) x = step_strang(m, x, dt, 1.0);
    const auto [r, p] = oracle::oscillator(1.0, 0.0, 1.0, 2.0, kPi);
    return std::hypot(x.classical.R(0) - r, x.classical.P(0) - p);
  };
  const double e1 = err(200), e2 = err(400);
  EXPECT_LT(e1, 1e-3);
  EXPECT_NEAR(e1 / e2, 4.0, 0.2);
}

TEST(StepStrang, NormPreservedOverManySteps) {
  const EhrenfestModel m = spin_oscillator_model({});
  EhrenfestState x = osc_start();
  for (int i = 0; i < 100000; ++i) x = step_strang(m, x, 1e-3, 1.0);
  EXPECT_NEAR(x.quantum.norm2(), 1.0, 1e-12);
}

TEST(StepStrang, TimeReversible) {
  std::mt19937_64 rng(40);
  const EhrenfestModel m = spin_oscillator_model({});
  for (int i = 0; i < 10; ++i) {
    const EhrenfestState x(ClassicalState(random_vector(1, rng), random_vector(1, rng)), sample_sphere_uniform(2, rng));
    const EhrenfestState y = step_strang(m, step_strang(m, x, 0.01, 1.0), -0.01, 1.0);
    EXPECT_LE(max_abs_difference(x, y), 1e-12);
  }
  EXPECT_THROW(step_strang(m, osc_start(), 0.0, 1.0), ValidationError);
}

TEST(StepRk4, ZeroRhsIsIdentity) {
  const EhrenfestModel m = free_model(1.0);
  const EhrenfestState x(ClassicalState(Vector::Constant(1, 0.3), Vector::Zero(1)), up());
  EXPECT_EQ(max_abs_difference(step_rk4(m, x, 0.1, 1.0), x), 0.0);
}

TEST(StepRk4, FourthOrderAndAgreesWithStrang) {
  const EhrenfestModel m = spin_oscillator_model({});
  auto run = [&](Integrator method, double dt) {
    EhrenfestState x = osc_start();
    const long n = std::lround(10.0 / dt);
    for (long i = 0; i < n; ++i) x = step(method, m, x, dt, 1.0);
    return x;
  };
  const EhrenfestState ref = run(Integrator::kRk4, 1e-3);
  const double e1 = max_abs_difference(run(Integrator::kRk4, 0.1), ref);
  const double e2 = max_abs_difference(run(Integrator::kRk4, 0.05), ref);
  EXPECT_NEAR(e1 / e2, 16.0, 2.0);
  EXPECT_LE(max_abs_difference(run(Integrator::kStrang, 1e-3), ref), 1e-6);
}

TEST(Propagate, RecordsAndDiagnostics) {
  const EhrenfestModel m = spin_oscillator_model({});
  const Trajectory t = propagate(m, osc_start(), 1e-2, 100, Integrator::kStrang, 1.0, 100);
  ASSERT_EQ(t.size(), 2u);
  EXPECT_DOUBLE_EQ(t.times.back(), 1.0);
  EXPECT_EQ(t.states.size(), t.times.size());
  const Trajectory u = propagate(m, osc_start(), 1e-2, 10, Integrator::kRk4, 1.0, 3);
  EXPECT_EQ(u.times, (std::vector<double>{0.0, 0.03, 0.06, 0.09, 0.1}));
  for (std::size_t i = 1; i < u.times.size(); ++i) EXPECT_GT(u.times[i], u.times[i - 1]);
  EXPECT_THROW(propagate(m, osc_start(), 1e-2, 0, Integrator::kStrang, 1.0, 1), ValidationError);
  EXPECT_THROW(propagate(m, osc_start(), 1e-2, 10, Integrator::kStrang, 1.0, 0), ValidationError);
}

TEST(Propagate, EnergyBoundedOnSpinOscillator) {
  const EhrenfestModel m = spin_oscillator_model({});
  const Trajectory t = propagate(m, osc_start(), 1e-3, 1000000, Integrator::kStrang, 1.0, 1000);
  EXPECT_FALSE(t.failed);
  EXPECT_LE(t.relative_energy_drift(), 1e-6);
  EXPECT_LE(t.norm_drift(), 1e-12);
}

TEST(Propagate, BlowUpTruncates) {
  EhrenfestModel m = free_model(1.0);
  m.classical_potential = [](const Vector& R) { return -std::exp(R(0) * R(0)); };
  m.classical_potential_gradient = [](const Vector& R) {
    return Vector(Vector::Constant(1, -2.0 * R(0) * std::exp(R(0) * R(0))));
  };
  const EhrenfestState x(ClassicalState(Vector::Constant(1, 1.0), Vector::Zero(1)), up());
  const Trajectory t = propagate(m, x, 0.1, 1000, Integrator::kStrang, 1.0, 1);
  EXPECT_TRUE(t.failed);
  EXPECT_LT(t.size(), 1001u);
  for (const auto& s : t.states) EXPECT_TRUE(s.all_finite());
}

TEST(Heisenberg, ObservableRateIsBracketWithEnergy) {
  // d/dt f_A = {f_H, f_A} with the combined bracket at geometric_hbar(hbar), and in
  // operator form d/dt f_A = f_{i[H_e, A]} / hbar.
  std::mt19937_64 rng(41);
  const EhrenfestModel m = spin_oscillator_model({});
  const Observable fh = hamiltonian_observable(m);
  for (double hbar : {1.0, 0.5}) {
    const HermitianOperator a = random_hermitian(2, rng);
    const Observable fa = quadratic_observable(a);
    const EhrenfestState x(ClassicalState(random_vector(1, rng), random_vector(1, rng)), sample_sphere_uniform(2, rng));
    const double h = 1e-3;
    const double rate = (fa(step_rk4(m, x, h, hbar)) - fa(step_rk4(m, x, -h, hbar))) / (2 * h);
    EXPECT_NEAR(rate, poisson_combined(fh, fa, x, geometric_hbar(hbar)), 1e-6);
    const HermitianOperator he = m.electronic_hamiltonian(x.classical.R);
    EXPECT_NEAR(rate, quadratic_observable(i_commutator(he, a))(x) / hbar, 1e-6);
  }
}
