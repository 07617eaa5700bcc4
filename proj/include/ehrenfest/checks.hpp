#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "ehrenfest/brackets.hpp"
#include "ehrenfest/dynamics.hpp"
#include "ehrenfest/random.hpp"
#include "ehrenfest/statmech.hpp"
#include "ehrenfest/toymodel.hpp"

namespace ehrenfest {

/// Quantum-block bracket kernel. Replaceable so the suite can be run against a
/// deliberately broken bracket.
using QuantumKernel = std::function<double(const Gradient&, const Gradient&)>;

struct CheckOptions {
  double hbar = 1.0;
  std::uint64_t seed = 20240101;
  int triples = 200;    // random (A, B, psi) draws for the algebra checks
  int unitaries = 50;   // random basis changes
  bool dynamics = true;
  bool statistics = true;
  QuantumKernel quantum_kernel = [](const Gradient& a, const Gradient& b) { return poisson_quantum(a, b); };
};

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string detail;
  [[nodiscard]] bool passed() const { return residual <= tolerance; }
};

namespace detail {

inline double kernel_combined(const CheckOptions& o, const Gradient& a, const Gradient& b) {
  return poisson_classical(a, b) + o.quantum_kernel(a, b) / o.hbar;
}

inline double kernel_combined(const CheckOptions& o, const Observable& f, const Observable& g,
                              const EhrenfestState& x) {
  return kernel_combined(o, f.grad(x), g.grad(x));
}

/// x -> {f, g}(x) with the option's kernel; gradient by the 5-point stencil.
///
/// The test functions are polynomials of degree <= 4, for which the stencil is exact
/// at any step; a wide step keeps rounding noise low.
inline constexpr double kStencilStep = 0.05;

inline Observable kernel_bracket_observable(const CheckOptions& o, const Observable& f, const Observable& g) {
  return numeric_observable([o, f, g](const EhrenfestState& x) { return kernel_combined(o, f, g, x); },
                            f.phase_invariant && g.phase_invariant, kStencilStep);
}

inline std::size_t algebra_dim(int i) { return i % 2 == 0 ? 2 : 4; }

/// Random point of M_C x S_Q with one classical degree of freedom.
inline EhrenfestState random_point(std::size_t nq, std::mt19937_64& rng) {
  const Vector r = random_vector(2, rng);
  return {ClassicalState(Vector::Constant(1, r(0)), Vector::Constant(1, r(1))), sample_sphere_uniform(nq, rng)};
}

/// a R^2 + b R P + c P^2 + d R + e P.
inline Observable random_classical_quadratic(std::mt19937_64& rng) {
  const Vector k = random_vector(5, rng);
  return classical_observable(
      [k](const ClassicalState& c) {
        const double r = c.R(0), p = c.P(0);
        return k(0) * r * r + k(1) * r * p + k(2) * p * p + k(3) * r + k(4) * p;
      },
      [k](const ClassicalState& c) {
        const double r = c.R(0), p = c.P(0);
        return std::make_pair(Vector(Vector::Constant(1, 2 * k(0) * r + k(1) * p + k(3))),
                              Vector(Vector::Constant(1, k(1) * r + 2 * k(2) * p + k(4))));
      });
}

/// f_A + classical quadratic: a member of the observable set touching both factors.
inline Observable random_mixed_observable(std::size_t nq, std::mt19937_64& rng) {
  return quadratic_observable(random_hermitian(nq, rng)) + random_classical_quadratic(rng);
}

inline CheckResult make_result(std::string name, double residual, double tol, std::string detail = {}) {
  return {std::move(name), residual, tol, std::move(detail)};
}

}  // namespace detail

/// {f_A, f_B} = f_{i[A,B]} and {f_A, f_B}_+ = f_{[A,B]_+} on random triples.
inline std::vector<CheckResult> check_bracket_algebra(const CheckOptions& o) {
  std::mt19937_64 rng(o.seed);
  double anti = 0.0, sym = 0.0;
  for (int i = 0; i < o.triples; ++i) {
    const std::size_t n = detail::algebra_dim(i);
    const HermitianOperator a = random_hermitian(n, rng);
    const HermitianOperator b = random_hermitian(n, rng);
    const EhrenfestState x(sample_sphere_uniform(n, rng));
    const Gradient ga = quadratic_observable(a).grad(x);
    const Gradient gb = quadratic_observable(b).grad(x);
    anti = std::max(anti, std::abs(o.quantum_kernel(ga, gb) - quadratic_observable(i_commutator(a, b))(x)));
    sym = std::max(sym, std::abs(symmetric_bracket(ga, gb) - quadratic_observable(anticommutator(a, b))(x)));
  }
  return {detail::make_result("bracket algebra (antisymmetric)", anti, 1e-12),
          detail::make_result("bracket algebra (symmetric)", sym, 1e-12)};
}

/// Cyclic sum {f,{g,h}} + {g,{h,f}} + {h,{f,g}} on random mixed observables.
inline CheckResult check_jacobi(const CheckOptions& o) {
  std::mt19937_64 rng(o.seed + 1);
  double worst = 0.0;
  const int n_draws = std::max(1, o.triples / 4);
  for (int i = 0; i < n_draws; ++i) {
    const std::size_t n = detail::algebra_dim(i);
    const Observable f = detail::random_mixed_observable(n, rng);
    const Observable g = detail::random_mixed_observable(n, rng);
    const Observable h = detail::random_mixed_observable(n, rng);
    const EhrenfestState x = detail::random_point(n, rng);
    const double s = detail::kernel_combined(o, f, detail::kernel_bracket_observable(o, g, h), x) +
                     detail::kernel_combined(o, g, detail::kernel_bracket_observable(o, h, f), x) +
                     detail::kernel_combined(o, h, detail::kernel_bracket_observable(o, f, g), x);
    worst = std::max(worst, std::abs(s));
  }
  return detail::make_result("Jacobi identity", worst, 1e-10);
}

/// {f, g h} = {f, g} h + g {f, h}, with the product's gradient taken numerically.
inline CheckResult check_leibniz(const CheckOptions& o) {
  std::mt19937_64 rng(o.seed + 2);
  double worst = 0.0;
  const int n_draws = std::max(1, o.triples / 4);
  for (int i = 0; i < n_draws; ++i) {
    const std::size_t n = detail::algebra_dim(i);
    const Observable f = detail::random_mixed_observable(n, rng);
    const Observable g = detail::random_mixed_observable(n, rng);
    const Observable h = detail::random_mixed_observable(n, rng);
    const EhrenfestState x = detail::random_point(n, rng);
    const Observable gh = numeric_observable([g, h](const EhrenfestState& y) { return g(y) * h(y); }, true,
                                               detail::kStencilStep);
    const double lhs = detail::kernel_combined(o, f, gh, x);
    const double rhs = detail::kernel_combined(o, f, g, x) * h(x) + g(x) * detail::kernel_combined(o, f, h, x);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return detail::make_result("Leibniz rule", worst, 1e-10);
}

/// Bracket values are unchanged when operators and state are expressed in a rotated basis.
inline CheckResult check_basis_independence(const CheckOptions& o) {
  std::mt19937_64 rng(o.seed + 3);
  double worst = 0.0;
  for (int i = 0; i < o.unitaries; ++i) {
    const std::size_t n = detail::algebra_dim(i);
    const ComplexMatrix u = random_unitary(n, rng);
    const HermitianOperator a = random_hermitian(n, rng);
    const HermitianOperator b = random_hermitian(n, rng);
    const QuantumState psi = sample_sphere_uniform(n, rng);
    const HermitianOperator ua(ComplexMatrix(u * a.complex() * u.adjoint()));
    const HermitianOperator ub(ComplexMatrix(u * b.complex() * u.adjoint()));
    const EhrenfestState x(psi);
    const EhrenfestState ux(QuantumState::from_complex(u * psi.to_complex()));
    auto grads = [](const HermitianOperator& m, const EhrenfestState& at) { return quadratic_observable(m).grad(at); };
    worst = std::max(worst, std::abs(o.quantum_kernel(grads(a, x), grads(b, x)) -
                                     o.quantum_kernel(grads(ua, ux), grads(ub, ux))));
    worst = std::max(worst, std::abs(symmetric_bracket(grads(a, x), grads(b, x)) -
                                     symmetric_bracket(grads(ua, ux), grads(ub, ux))));
  }
  return detail::make_result("basis independence", worst, 1e-12);
}

/// Gamma{f,g} = {Gamma f, g} + {f, Gamma g}, including functions outside the observable set.
inline CheckResult check_gamma_compatibility(const CheckOptions& o) {
  std::mt19937_64 rng(o.seed + 4);
  double worst = 0.0;
  const int n_draws = std::max(1, o.triples / 8);
  for (int i = 0; i < n_draws; ++i) {
    const std::size_t n = detail::algebra_dim(i);
    const Observable f = real_quadratic_observable(random_real_symmetric(n, rng)) + detail::random_classical_quadratic(rng);
    const Observable g = i % 2 == 0 ? detail::random_mixed_observable(n, rng)
                                    : real_quadratic_observable(random_real_symmetric(n, rng));
    const EhrenfestState x = detail::random_point(n, rng);
    const double lhs = phase_generator(detail::kernel_bracket_observable(o, f, g), x);
    const double rhs = detail::kernel_combined(o, phase_derivative_observable(f), g, x) +
                       detail::kernel_combined(o, f, phase_derivative_observable(g), x);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return detail::make_result("phase-generator compatibility", worst, 1e-9);
}

/// Gamma f == hbar {f_I, f} pointwise, so Gamma f = 0 exactly when f Poisson-commutes
/// with f_I; also confirms the flag of each test function against the generator.
inline std::vector<CheckResult> check_gamma_equivalence(const CheckOptions& o) {
  std::mt19937_64 rng(o.seed + 5);
  const Observable fi = identity_observable();
  double identity_gap = 0.0;
  double invariant_max = 0.0;
  double noninvariant_min = std::numeric_limits<double>::infinity();
  const int n_draws = std::max(1, o.triples / 8);
  for (int i = 0; i < n_draws; ++i) {
    const std::size_t n = detail::algebra_dim(i);
    const EhrenfestState x = detail::random_point(n, rng);
    const std::vector<Observable> family = {
        detail::random_mixed_observable(n, rng),
        quadratic_observable(random_hermitian(n, rng)) * quadratic_observable(random_hermitian(n, rng)),
        real_quadratic_observable(random_real_symmetric(n, rng)),
        quantum_coordinate(false, 0) + quantum_coordinate(true, static_cast<Eigen::Index>(n - 1)),
    };
    for (const auto& f : family) {
      const double gamma = phase_generator(f, x);
      const double bracket = detail::kernel_combined(o, fi, f, x);
      identity_gap = std::max(identity_gap, std::abs(gamma - o.hbar * bracket));
      if (f.phase_invariant) {
        invariant_max = std::max(invariant_max, std::abs(bracket));
      } else {
        noninvariant_min = std::min(noninvariant_min, std::abs(bracket));
      }
    }
  }
  // A non-invariant function that happened to commute would make the equivalence vacuous.
  const double separation = noninvariant_min > 1e-6 ? 0.0 : 1.0;
  return {detail::make_result("Gamma f = hbar {f_I, f}", identity_gap, 1e-12),
          detail::make_result("{f_I, f} = 0 on observables", invariant_max, 1e-12),
          detail::make_result("{f_I, f} != 0 off observables", separation, 0.0,
                              "min |{f_I,f}| = " + std::to_string(noninvariant_min))};
}

/// Sphere-projected gradient of f_A vanishes at eigenvectors, where 2 f_A is the eigenvalue.
inline std::vector<CheckResult> check_critical_points(const CheckOptions& o) {
  std::mt19937_64 rng(o.seed + 6);
  double grad_at_eig = 0.0, value_err = 0.0;
  double grad_generic = std::numeric_limits<double>::infinity();
  const int n_draws = std::max(1, o.triples / 8);
  int tested = 0;
  for (int i = 0; i < n_draws; ++i) {
    const std::size_t n = detail::algebra_dim(i);
    const HermitianOperator a = random_hermitian(n, rng);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a.complex());
    const Vector lam = es.eigenvalues();
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 1; k < lam.size(); ++k) gap = std::min(gap, lam(k) - lam(k - 1));
    if (gap < 1e-6) continue;
    ++tested;
    const Observable f = quadratic_observable(a);
    auto projected = [&](const EhrenfestState& x) {
      const Gradient df = f.grad(x);
      const Vector g = QuantumState{df.q, df.p}.interleaved();
      const Vector v = x.quantum.interleaved();
      return (g - g.dot(v) * v).norm();
    };
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
      const Complex phase = std::polar(1.0, kTwoPi * std::uniform_real_distribution<>()(rng));
      const EhrenfestState x(QuantumState::from_complex(es.eigenvectors().col(k) * phase));
      grad_at_eig = std::max(grad_at_eig, projected(x));
      value_err = std::max(value_err, std::abs(2.0 * f(x) - lam(k)));
    }
    grad_generic = std::min(grad_generic, projected(EhrenfestState(sample_sphere_uniform(n, rng))));
  }
  const std::string note = std::to_string(tested) + " operators";
  return {detail::make_result("critical points at eigenvectors", grad_at_eig, 1e-10, note),
          detail::make_result("2 f_A = eigenvalue at eigenvectors", value_err, 1e-10, note),
          detail::make_result("generic states are not critical", grad_generic > 1e-6 ? 0.0 : 1.0, 0.0,
                              "min projected gradient " + std::to_string(grad_generic))};
}

/// Ehrenfest right-hand side versus the Hamiltonian vector field of the energy.
inline CheckResult check_rhs_consistency(const CheckOptions& o) {
  std::mt19937_64 rng(o.seed + 7);
  LinearCouplingSpec spec;
  spec.masses = Vector::Constant(2, 1.0) + random_vector(2, rng).cwiseAbs();
  spec.omegas = Vector::Constant(2, 0.7);
  spec.h0 = random_hermitian(4, rng);
  spec.couplings = {random_hermitian(4, rng), random_hermitian(4, rng)};
  const std::vector<EhrenfestModel> models = {spin_oscillator_model({}), linear_coupling_model(spec),
                                              toy::make_model(toy::ToyParams{0.8})};
  double worst = 0.0;
  for (const auto& m : models) {
    const Observable fh = hamiltonian_observable(m);
    for (int i = 0; i < 20; ++i) {
      const Vector r = random_vector(2 * m.classical_dim, rng);
      Vector P = r.tail(m.classical_dim);
      if (m.chart == ClassicalChart::kActionAngle) P = P.cwiseAbs();
      const EhrenfestState x(ClassicalState(r.head(m.classical_dim), P), sample_sphere_uniform(m.quantum_dim, rng));
      const Tangent a = hamiltonian_vector_field(fh, x, geometric_hbar(o.hbar));
      const Tangent b = ehrenfest_rhs(m, x, o.hbar);
      worst = std::max(worst, (a + (-1.0) * b).max_abs());
    }
  }
  return detail::make_result("Hamiltonian field = Ehrenfest RHS", worst, 1e-10);
}

/// {f_I, {f_H, f}} = 0 for f in the observable set.
inline CheckResult check_observable_preservation(const CheckOptions& o) {
  std::mt19937_64 rng(o.seed + 8);
  const EhrenfestModel m = spin_oscillator_model({});
  const Observable fh = hamiltonian_observable(m);
  const Observable fi = identity_observable();
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Observable f = detail::random_mixed_observable(2, rng);
    const EhrenfestState x = detail::random_point(2, rng);
    worst = std::max(worst, std::abs(detail::kernel_combined(o, fi, detail::kernel_bracket_observable(o, fh, f), x)));
  }
  return detail::make_result("{f_I, {f_H, f}} = 0", worst, 1e-9);
}

/// Short toy-model run: norm exact, energy drift small.
inline std::vector<CheckResult> check_conservation_smoke(const CheckOptions& o) {
  const toy::ToyParams prm{0.8};
  const EhrenfestModel m = toy::make_model(prm);
  const EhrenfestState x0 = toy::ToyState::from_angles(0.0, 1.0, 0.6, 1.0).to_ehrenfest();
  const Trajectory t = propagate(m, x0, 1e-3, 10000, Integrator::kStrang, o.hbar, 100);
  if (t.failed) return {detail::make_result("toy trajectory", 1.0, 0.0, t.failure)};
  return {detail::make_result("norm conservation (t = 10)", t.norm_drift(), 1e-12),
          detail::make_result("energy drift (t = 10)", t.relative_energy_drift(), 1e-6)};
}

/// Canonical ensembles propagated to t = 5 on systems whose canonical density is
/// normalizable on an invariant domain: the spin-oscillator, and the decoupled toy
/// model. A delta ensemble serves as the negative control.
inline std::vector<CheckResult> check_stationarity_smoke(const CheckOptions& o) {
  SpinOscillatorParams sp;
  sp.coupling = 0.5;
  const EhrenfestModel osc = spin_oscillator_model(sp);
  SamplerConfig cfg;
  cfg.beta = 1.0;
  cfg.samples = 1000;
  cfg.burn_in = 500;
  cfg.thin = 5;
  cfg.chains = 4;
  cfg.classical_step = 1.0;
  cfg.seed = o.seed;
  const Ensemble e = metropolis_canonical(osc, cfg);
  const Observable r = classical_coordinate(false, 0);
  const std::vector<NamedObservable> osc_obs = {
      {"2 f_sigma_z", 2.0 * quadratic_observable(HermitianOperator::pauli_z())},
      {"2 f_sigma_x", 2.0 * quadratic_observable(HermitianOperator::pauli_x())},
      {"R^2", r * r}};
  auto max_z = [](const StationarityReport& rep) {
    double z = 0.0;
    for (const auto& s : rep.series) z = std::max(z, s.max_abs_z);
    return z;
  };
  std::vector<CheckResult> out;
  out.push_back(detail::make_result("spin-oscillator canonical ensemble stationary (max |z|)",
                                    max_z(liouville_stationarity_test(osc, e, 0.05, 100, osc_obs, o.hbar)), 3.0));

  const EhrenfestModel toy0 = toy::make_model(toy::ToyParams{0.0});
  cfg.classical_step = 0.5;
  const Ensemble t0 = metropolis_canonical(toy0, cfg);
  const std::vector<NamedObservable> toy_obs = {{"2 f_sigma_z", toy::sigma_z_observable()},
                                                {"I_phi^2", toy::I_phi_squared_observable()},
                                                {"cos phi", toy::cos_phi_observable()}};
  out.push_back(detail::make_result("decoupled toy canonical ensemble stationary (max |z|)",
                                    max_z(liouville_stationarity_test(toy0, t0, 0.05, 100, toy_obs, o.hbar)), 3.0));

  EhrenfestState x0(ClassicalState(Vector::Constant(1, 1.5), Vector::Zero(1)),
                    QuantumState::from_complex(ComplexVector::Unit(2, 0)));
  const Ensemble delta = Ensemble::uniform(std::vector<EhrenfestState>(200, x0));
  const StationarityReport bad = liouville_stationarity_test(osc, delta, 0.05, 100, osc_obs, o.hbar);
  out.push_back(detail::make_result("delta ensemble detected", bad.passed() ? 1.0 : 0.0, 0.0));
  return out;
}

/// The full suite used by the `check` command.
inline std::vector<CheckResult> run_invariant_checks(const CheckOptions& o) {
  require_positive_hbar(o.hbar);
  std::vector<CheckResult> all;
  auto append = [&all](std::vector<CheckResult> r) { all.insert(all.end(), r.begin(), r.end()); };
  append(check_bracket_algebra(o));
  all.push_back(check_jacobi(o));
  all.push_back(check_leibniz(o));
  all.push_back(check_basis_independence(o));
  all.push_back(check_gamma_compatibility(o));
  append(check_gamma_equivalence(o));
  append(check_critical_points(o));
  if (o.dynamics) {
    all.push_back(check_rhs_consistency(o));
    all.push_back(check_observable_preservation(o));
    append(check_conservation_smoke(o));
  }
  if (o.statistics) append(check_stationarity_smoke(o));
  return all;
}

}  // namespace ehrenfest
