#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "ehrenfest/dynamics.hpp"

namespace ehrenfest {

/// Runs fn(i) for i in [0, n) on up to `threads` workers with contiguous index blocks.
/// Results must be written to per-index slots; output is independent of `threads`.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = n * t / threads;
    const std::size_t hi = n * (t + 1) / threads;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
}

/// SplitMix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of chain c: splitmix64(master + c * golden) with the golden-ratio increment,
/// i.e. the c-th output of a SplitMix64 stream started at `master`.
inline std::uint64_t chain_seed(std::uint64_t master, std::uint64_t chain) {
  return splitmix64(master + chain * 0x9E3779B97F4A7C15ULL);
}

/// Uniform point on the unit sphere of C^n: 2n standard normals, normalized.
template <typename Rng>
QuantumState sample_sphere_uniform(std::size_t n, Rng& rng) {
  if (n < 1) throw ValidationError("sample_sphere_uniform: dimension must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto m = static_cast<Eigen::Index>(n);
  for (;;) {
    Vector q(m);
    Vector p(m);
    for (Eigen::Index k = 0; k < m; ++k) {
      q(k) = normal(rng);
      p(k) = normal(rng);
    }
    const double r = std::sqrt(q.squaredNorm() + p.squaredNorm());
    if (r > 1e-150) return {q / r, p / r};
  }
}

struct SamplerConfig {
  double beta = 1.0;
  long samples = 10000;  // recorded per chain
  long burn_in = 1000;
  long thin = 1;
  int chains = 1;
  double classical_step = 0.5;
  double quantum_rotation_scale = 0.5;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("sampler: beta must be positive");
    if (samples < 1) throw ValidationError("sampler: samples must be >= 1");
    if (burn_in < 0) throw ValidationError("sampler: burn_in must be >= 0");
    if (thin < 1) throw ValidationError("sampler: thin must be >= 1");
    if (chains < 1) throw ValidationError("sampler: chains must be >= 1");
    if (!(classical_step > 0.0) || !std::isfinite(classical_step)) {
      throw ValidationError("sampler: classical_step must be positive");
    }
    if (!(quantum_rotation_scale > 0.0) || !std::isfinite(quantum_rotation_scale)) {
      throw ValidationError("sampler: quantum_rotation_scale must be positive");
    }
  }
};

struct EnsembleMeta {
  std::uint64_t seed = 0;
  int chains = 0;
  long burn_in = 0;
  long thin = 1;
  double beta = 0.0;
  double acceptance_classical = 0.0;  // post burn-in, pooled over chains
  double acceptance_quantum = 0.0;
  long nonfinite_rejections = 0;
  std::vector<std::string> warnings;
};

/// Weighted states on M_C x S_Q.
struct Ensemble {
  std::vector<EhrenfestState> members;
  std::vector<double> weights;
  std::vector<int> chain;  // chain id per member, in chain-major order
  EnsembleMeta meta;

  [[nodiscard]] std::size_t size() const { return members.size(); }

  /// Uniform weights summing to one.
  static Ensemble uniform(std::vector<EhrenfestState> states) {
    Ensemble e;
    const double w = states.empty() ? 0.0 : 1.0 / static_cast<double>(states.size());
    e.weights.assign(states.size(), w);
    e.chain.assign(states.size(), 0);
    e.members = std::move(states);
    return e;
  }

  void validate() const {
    if (weights.size() != members.size()) throw ValidationError("ensemble: one weight per member required");
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("ensemble: weights must be nonnegative");
      sum += w;
    }
    if (!members.empty() && std::abs(sum - 1.0) > 1e-9) throw ValidationError("ensemble: weights must sum to 1");
    for (const auto& m : members) {
      if (!m.quantum.is_normalized(1e-9)) throw ValidationError("ensemble: member off the unit sphere");
    }
  }
};

namespace detail {

/// Classical Metropolis proposal. Gaussian steps; in action-angle charts angles are
/// wrapped and actions reflected at 0 (an involution, so the proposal stays symmetric).
template <typename Rng>
ClassicalState propose_classical(const EhrenfestModel& model, const ClassicalState& c, double step, double sign,
                                 Rng& rng) {
  std::normal_distribution<double> normal(0.0, step);
  ClassicalState out = c;
  for (Eigen::Index j = 0; j < out.R.size(); ++j) out.R(j) += sign * normal(rng);
  for (Eigen::Index j = 0; j < out.P.size(); ++j) out.P(j) += sign * normal(rng);
  if (model.chart == ClassicalChart::kActionAngle) {
    for (Eigen::Index j = 0; j < out.R.size(); ++j) {
      out.R(j) = wrap_angle(out.R(j));
      out.P(j) = std::abs(out.P(j));
    }
  }
  return out;
}

/// Quantum proposal: psi_R <- exp(s A) psi_R with A antisymmetric, N(0, 1) entries
/// above the diagonal. A and -A are equally likely, so the kernel is symmetric with
/// respect to the rotation-invariant measure on the sphere.
template <typename Rng>
QuantumState propose_quantum(const QuantumState& psi, double scale, Rng& rng) {
  // scale may be negative (reversed proposal sequence); only the sign of A flips
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index m = 2 * static_cast<Eigen::Index>(psi.dim());
  Matrix a = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      a(i, j) = normal(rng);
      a(j, i) = -a(i, j);
    }
  }
  const Matrix rot = (scale * a).exp();
  return QuantumState::from_interleaved(rot * psi.interleaved());
}

struct ChainResult {
  std::vector<EhrenfestState> samples;
  long classical_proposals = 0;
  long classical_accepted = 0;
  long quantum_proposals = 0;
  long quantum_accepted = 0;
  long nonfinite = 0;
};

/// `reverse` negates every random increment (the time-reversed proposal sequence).
inline ChainResult run_chain(const EhrenfestModel& model, const SamplerConfig& cfg, std::uint64_t seed,
                             bool reverse = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  ChainResult out;
  out.samples.reserve(static_cast<std::size_t>(cfg.samples));

  const auto nc = static_cast<Eigen::Index>(model.classical_dim);
  ClassicalState c = ClassicalState::zero(model.classical_dim);
  if (model.chart == ClassicalChart::kActionAngle) c.P = Vector::Constant(nc, 1.0 / cfg.beta);
  EhrenfestState x(c, sample_sphere_uniform(model.quantum_dim, rng));
  double f = total_energy(model, x);
  if (!std::isfinite(f)) throw NumericalError("sampler: non-finite energy at the initial state");

  const double sign = reverse ? -1.0 : 1.0;
  auto metropolis = [&](EhrenfestState&& y, long& proposals, long& accepted, bool counting) {
    const double fy = total_energy(model, y);
    if (counting) ++proposals;
    if (!std::isfinite(fy)) {
      ++out.nonfinite;
      return;
    }
    const double log_ratio = -cfg.beta * (fy - f);
    if (log_ratio >= 0.0 || unif(rng) < std::exp(log_ratio)) {
      x = std::move(y);
      f = fy;
      if (counting) ++accepted;
    }
  };

  const long total = cfg.burn_in + cfg.samples * cfg.thin;
  for (long it = 1; it <= total; ++it) {
    const bool counting = it > cfg.burn_in;
    if (nc > 0) {
      ClassicalState cp = propose_classical(model, x.classical, cfg.classical_step, sign, rng);
      metropolis(EhrenfestState(std::move(cp), x.quantum), out.classical_proposals, out.classical_accepted, counting);
    }
    QuantumState qp = propose_quantum(x.quantum, sign * cfg.quantum_rotation_scale, rng);
    metropolis(EhrenfestState(x.classical, std::move(qp)), out.quantum_proposals, out.quantum_accepted, counting);
    if (counting && (it - cfg.burn_in) % cfg.thin == 0) out.samples.push_back(x);
  }
  return out;
}

}  // namespace detail

/// Metropolis chains targeting exp(-beta f_H) with respect to dmu_C dOmega_Q.
///
/// Each iteration makes one classical and one quantum proposal. Chains run
/// concurrently; chain c is seeded with chain_seed(config.seed, c) and results are
/// concatenated in chain order, so the output does not depend on `threads`.
inline Ensemble metropolis_canonical(const EhrenfestModel& model, const SamplerConfig& config, unsigned threads = 1,
                                     bool reverse_proposals = false) {
  config.validate();
  model.validate();
  std::vector<detail::ChainResult> results(static_cast<std::size_t>(config.chains));
  parallel_for(results.size(), threads, [&](std::size_t c) {
    results[c] = detail::run_chain(model, config, chain_seed(config.seed, c), reverse_proposals);
  });

  Ensemble e;
  long cp = 0, ca = 0, qp = 0, qa = 0;
  for (std::size_t c = 0; c < results.size(); ++c) {
    for (auto& s : results[c].samples) {
      e.members.push_back(std::move(s));
      e.chain.push_back(static_cast<int>(c));
    }
    cp += results[c].classical_proposals;
    ca += results[c].classical_accepted;
    qp += results[c].quantum_proposals;
    qa += results[c].quantum_accepted;
    e.meta.nonfinite_rejections += results[c].nonfinite;
  }
  e.weights.assign(e.members.size(), 1.0 / static_cast<double>(e.members.size()));
  e.meta.seed = config.seed;
  e.meta.chains = config.chains;
  e.meta.burn_in = config.burn_in;
  e.meta.thin = config.thin;
  e.meta.beta = config.beta;
  e.meta.acceptance_classical = cp > 0 ? static_cast<double>(ca) / static_cast<double>(cp) : 1.0;
  e.meta.acceptance_quantum = qp > 0 ? static_cast<double>(qa) / static_cast<double>(qp) : 1.0;
  auto check_rate = [&](const char* name, double rate, long proposals) {
    if (proposals > 0 && (rate < 0.05 || rate > 0.95)) {
      e.meta.warnings.push_back(std::string(name) + " acceptance rate " + std::to_string(rate) +
                                " outside [0.05, 0.95]");
    }
  };
  check_rate("classical", e.meta.acceptance_classical, cp);
  check_rate("quantum", e.meta.acceptance_quantum, qp);
  if (e.meta.nonfinite_rejections > 0) {
    e.meta.warnings.push_back(std::to_string(e.meta.nonfinite_rejections) + " proposals rejected for non-finite f_H");
  }
  return e;
}

struct Average {
  double mean = 0.0;
  double std_error = 0.0;
  double n_eff = 0.0;
};

/// Weighted mean with a batch-means standard error over contiguous batches in member
/// order (min(batches, n) batches).
inline Average weighted_batch_mean(const std::vector<double>& values, const std::vector<double>& weights,
                                   int batches = 20) {
  const std::size_t n = values.size();
  if (n == 0) throw ValidationError("average: empty ensemble");
  if (weights.size() != n) throw ValidationError("average: one weight per value required");
  double wsum = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    wsum += weights[i];
    acc += weights[i] * values[i];
  }
  if (!(wsum > 0.0)) throw ValidationError("average: weights sum to zero");
  Average out;
  out.mean = acc / wsum;
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += weights[i] * (values[i] - out.mean) * (values[i] - out.mean);
  var /= wsum;

  const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(std::max(batches, 2)), n);
  if (nb < 2) {
    out.n_eff = 1.0;
    return out;
  }
  double se2 = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = n * b / nb;
    const std::size_t hi = n * (b + 1) / nb;
    double bw = 0.0;
    double bm = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      bw += weights[i];
      bm += weights[i] * values[i];
    }
    if (bw <= 0.0) continue;
    bm /= bw;
    const double share = bw / wsum;
    se2 += share * share * (bm - out.mean) * (bm - out.mean);
  }
  se2 *= static_cast<double>(nb) / static_cast<double>(nb - 1);
  out.std_error = std::sqrt(se2);
  out.n_eff = se2 > 0.0 ? var / se2 : static_cast<double>(n);
  return out;
}

/// Macroscopic average of an observable over the ensemble. Rejects functions that are
/// not phase invariant: their average over S_Q depends on the phase convention.
inline Average ensemble_average(const Observable& obs, const Ensemble& ensemble, int batches = 20) {
  if (!obs.phase_invariant) {
    throw ValidationError("ensemble_average: observable is not phase invariant");
  }
  if (ensemble.members.empty()) throw ValidationError("ensemble_average: empty ensemble");
  std::vector<double> values(ensemble.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = obs.eval(ensemble.members[i]);
  return weighted_batch_mean(values, ensemble.weights, batches);
}

struct NamedObservable {
  std::string name;
  Observable observable;
};

struct StationaritySeries {
  std::string name;
  std::vector<double> times;
  std::vector<double> means;
  std::vector<double> std_errors;
  std::vector<double> z_scores;  // mean of f(t) - f(0) over its batch-means standard error
  double max_abs_z = 0.0;
};

struct StationarityReport {
  std::vector<StationaritySeries> series;
  std::size_t members_used = 0;
  std::size_t members_excluded = 0;  // trajectory blow-ups
  double z_threshold = 3.0;
  [[nodiscard]] bool passed() const {
    for (const auto& s : series) {
      if (!(s.max_abs_z <= z_threshold)) return false;
    }
    return true;
  }
};

/// Propagates every member with the splitting integrator and tracks ensemble means of
/// the observables at `checkpoints` evenly spaced times up to n_steps * dt.
inline StationarityReport liouville_stationarity_test(const EhrenfestModel& model, const Ensemble& ensemble, double dt,
                                                      long n_steps, const std::vector<NamedObservable>& observables,
                                                      double hbar = 1.0, int checkpoints = 5, unsigned threads = 1) {
  if (ensemble.members.empty()) throw ValidationError("stationarity: empty ensemble");
  if (n_steps < 1 || checkpoints < 1) throw ValidationError("stationarity: need n_steps >= 1 and checkpoints >= 1");
  require_nonzero_step(dt);
  const std::size_t n = ensemble.size();
  const auto nobs = observables.size();
  const auto npts = static_cast<std::size_t>(checkpoints) + 1;
  std::vector<long> at_step(npts);
  for (std::size_t k = 0; k < npts; ++k) at_step[k] = static_cast<long>(k) * n_steps / checkpoints;

  // values[member][point * nobs + obs]
  std::vector<std::vector<double>> values(n);
  std::vector<char> ok(n, 1);
  parallel_for(n, threads, [&](std::size_t i) {
    auto& v = values[i];
    v.assign(npts * nobs, 0.0);
    EhrenfestState x = ensemble.members[i];
    long done = 0;
    for (std::size_t k = 0; k < npts; ++k) {
      try {
        for (; done < at_step[k]; ++done) x = step_strang(model, x, dt, hbar);
      } catch (const NumericalError&) {
        ok[i] = 0;
        return;
      }
      if (!x.all_finite()) {
        ok[i] = 0;
        return;
      }
      for (std::size_t o = 0; o < nobs; ++o) v[k * nobs + o] = observables[o].observable.eval(x);
    }
  });

  StationarityReport rep;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < n; ++i) {
    if (ok[i]) keep.push_back(i);
  }
  rep.members_used = keep.size();
  rep.members_excluded = n - keep.size();
  if (keep.empty()) throw NumericalError("stationarity: every trajectory failed");
  std::vector<double> w(keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) w[j] = ensemble.weights[keep[j]];

  for (std::size_t o = 0; o < nobs; ++o) {
    StationaritySeries s;
    s.name = observables[o].name;
    std::vector<double> col(keep.size());
    for (std::size_t k = 0; k < npts; ++k) {
      for (std::size_t j = 0; j < keep.size(); ++j) col[j] = values[keep[j]][k * nobs + o];
      const Average a = weighted_batch_mean(col, w);
      s.times.push_back(static_cast<double>(at_step[k]) * dt);
      s.means.push_back(a.mean);
      s.std_errors.push_back(a.std_error);
    }
    // Paired differences f(x_i(t)) - f(x_i(0)): the two means share members, so the
    // standard error of the difference is taken from the per-member differences.
    std::vector<double> diff(keep.size());
    for (std::size_t k = 0; k < npts; ++k) {
      for (std::size_t j = 0; j < keep.size(); ++j) {
        diff[j] = values[keep[j]][k * nobs + o] - values[keep[j]][o];
      }
      const Average d = weighted_batch_mean(diff, w);
      // Floor for exactly conserved observables, whose differences are rounding noise.
      const double floor = 1e-12 * (1.0 + std::abs(s.means[0]));
      const double z = d.mean / std::hypot(d.std_error, floor);
      s.z_scores.push_back(z);
      s.max_abs_z = std::max(s.max_abs_z, std::abs(z));
    }
    rep.series.push_back(std::move(s));
  }
  return rep;
}

struct VolumeReport {
  double initial_area = 0.0;
  double final_area = 0.0;
  double max_relative_deviation = 0.0;
};

enum class QuantumCoupling {
  kEvolving,  // full Ehrenfest step
  kFrozen,    // classical flow with each member's quantum state held fixed
};

/// Oriented-area check of the classical flow on a triangle of states in a 2-D
/// classical chart (classical_dim == 1), using the splitting integrator.
inline VolumeReport classical_volume_preservation_test(const EhrenfestModel& model,
                                                       const std::array<EhrenfestState, 3>& cloud, double dt,
                                                       long n_steps, QuantumCoupling coupling = QuantumCoupling::kEvolving,
                                                       double hbar = 1.0) {
  if (model.classical_dim != 1) throw ValidationError("volume test: needs a 2-D classical chart");
  require_nonzero_step(dt);
  auto area = [](const std::array<EhrenfestState, 3>& c) {
    const double ax = c[1].classical.R(0) - c[0].classical.R(0);
    const double ay = c[1].classical.P(0) - c[0].classical.P(0);
    const double bx = c[2].classical.R(0) - c[0].classical.R(0);
    const double by = c[2].classical.P(0) - c[0].classical.P(0);
    return 0.5 * (ax * by - ay * bx);
  };
  std::array<EhrenfestState, 3> c = cloud;
  VolumeReport rep;
  rep.initial_area = area(c);
  double extent = 0.0;
  for (const auto& s : c) {
    extent = std::max({extent, std::abs(s.classical.R(0) - c[0].classical.R(0)),
                       std::abs(s.classical.P(0) - c[0].classical.P(0))});
  }
  if (!(std::abs(rep.initial_area) > 1e-12 * extent * extent) || extent == 0.0) {
    throw ValidationError("volume test: degenerate simplex");
  }
  auto frozen_step = [&](const EhrenfestState& x) {
    // kick-drift-kick for T(P) + V(R) + <psi|H_e(R) psi> with psi fixed
    const Vector ph = x.classical.P + 0.5 * dt * ehrenfest_force(model, x.classical.R, x.quantum);
    const Vector r1 = x.classical.R + dt * model.velocity(ph);
    const Vector p1 = ph + 0.5 * dt * ehrenfest_force(model, r1, x.quantum);
    return EhrenfestState(ClassicalState(r1, p1), x.quantum);
  };
  for (long n = 0; n < n_steps; ++n) {
    for (auto& s : c) s = coupling == QuantumCoupling::kFrozen ? frozen_step(s) : step_strang(model, s, dt, hbar);
    rep.max_relative_deviation =
        std::max(rep.max_relative_deviation, std::abs(area(c) - rep.initial_area) / std::abs(rep.initial_area));
  }
  rep.final_area = area(c);
  return rep;
}

/// Kolmogorov-Smirnov distance of a sample from Uniform[0, 1].
inline double ks_statistic_uniform(std::vector<double> values) {
  if (values.empty()) throw ValidationError("ks: empty sample");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - x, x - static_cast<double>(i) / n});
  }
  return d;
}

/// Asymptotic critical value sqrt(-ln(alpha/2)/2)/sqrt(n); 1.628/sqrt(n) at alpha = 0.01.
inline double ks_critical_value(std::size_t n, double alpha = 0.01) {
  return std::sqrt(-0.5 * std::log(0.5 * alpha)) / std::sqrt(static_cast<double>(n));
}

}  // namespace ehrenfest
