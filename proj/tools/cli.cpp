#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "ehrenfest/checks.hpp"

namespace ehrenfest::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  auto f = open_output(path);
  f << j.dump(2) << '\n';
}

std::vector<std::string> state_columns(const EhrenfestModel& m) {
  std::vector<std::string> cols;
  for (const char* block : {"R", "P"}) {
    for (std::size_t j = 1; j <= m.classical_dim; ++j) cols.push_back(fmt::format("{}{}", block, j));
  }
  for (const char* block : {"q", "p"}) {
    for (std::size_t k = 1; k <= m.quantum_dim; ++k) cols.push_back(fmt::format("{}{}", block, k));
  }
  return cols;
}

void append_state(std::string& line, const EhrenfestState& x) {
  for (const Vector* v : {&x.classical.R, &x.classical.P, &x.quantum.q, &x.quantum.p}) {
    for (Eigen::Index i = 0; i < v->size(); ++i) {
      line += ',';
      line += num((*v)(i));
    }
  }
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

bool parse_index(const std::string& name, const std::string& prefix, std::size_t& index) {
  if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) return false;
  const std::string digits = name.substr(prefix.size());
  if (digits.find_first_not_of("0123456789") != std::string::npos) return false;
  index = static_cast<std::size_t>(std::stoul(digits));
  return true;
}

}  // namespace

Observable named_observable(const std::string& name, const RunConfig& cfg, const EhrenfestModel& model) {
  const bool toy = cfg.model.type == ModelType::kToy;
  auto need_toy = [&] {
    if (!toy) throw ValidationError("observable '" + name + "' is defined only for the toy model");
  };
  auto need_two_level = [&] {
    if (model.quantum_dim != 2) throw ValidationError("observable '" + name + "' needs a two-level quantum system");
  };
  if (name == "one") return constant_observable(1.0);
  if (name == "norm") return identity_observable();
  if (name == "energy") return hamiltonian_observable(model);
  if (name == "sigma_x" || name == "sigma_y" || name == "sigma_z") {
    need_two_level();
    const HermitianOperator s = name == "sigma_x"   ? HermitianOperator::pauli_x()
                                : name == "sigma_y" ? HermitianOperator::pauli_y()
                                                    : HermitianOperator::pauli_z();
    return 2.0 * quadratic_observable(s);
  }
  if (name == "I_theta") {
    need_toy();
    return toy::action_observable();
  }
  if (name == "I_phi_sq") {
    need_toy();
    return toy::I_phi_squared_observable();
  }
  if (name == "cos_phi") {
    need_toy();
    return toy::cos_phi_observable();
  }
  std::size_t i = 0;
  for (const char* block : {"R", "P"}) {
    if (parse_index(name, block, i)) {
      if (i < 1 || i > model.classical_dim) throw ValidationError("observable '" + name + "': index out of range");
      return classical_coordinate(block[0] == 'P', static_cast<Eigen::Index>(i - 1));
    }
  }
  for (const char* block : {"q", "p"}) {
    if (parse_index(name, block, i)) {
      if (i < 1 || i > model.quantum_dim) throw ValidationError("observable '" + name + "': index out of range");
      return quantum_coordinate(block[0] == 'p', static_cast<Eigen::Index>(i - 1));
    }
  }
  throw ValidationError("unknown observable '" + name + "'");
}

int cmd_simulate(const RunConfig& cfg, const RunOptions& opt, std::ostream& log) {
  const EhrenfestModel model = build_model(cfg);
  const EhrenfestState x0 = build_initial_state(cfg, model);
  const auto& in = cfg.integrator;
  const auto start = std::chrono::steady_clock::now();
  const Trajectory traj = propagate(model, x0, in.dt, in.steps, in.method, in.hbar, in.record_every);
  const double wall = elapsed_seconds(start);

  fs::create_directories(opt.out_dir);
  {
    auto f = open_output(opt.out_dir / "trajectory.csv");
    std::string header = "t";
    for (const auto& c : state_columns(model)) header += "," + c;
    f << header << ",energy,norm\n";
    std::string line;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      line = num(traj.times[i]);
      append_state(line, traj.states[i]);
      line += ',' + num(traj.energy[i]) + ',' + num(traj.norm[i]) + '\n';
      f << line;
    }
  }
  nlohmann::ordered_json s;
  s["command"] = "simulate";
  s["status"] = traj.failed ? "blow-up" : "ok";
  if (traj.failed) s["failure"] = traj.failure;
  s["recordedPoints"] = traj.size();
  s["finalTime"] = traj.times.back();
  s["energyDrift"] = traj.relative_energy_drift();
  s["normDrift"] = traj.norm_drift();
  s["seed"] = cfg.sampler.seed;
  s["config"] = cfg.to_json();
  write_json(opt.out_dir / "summary.json", s);

  log << fmt::format("simulate: {} points, energy drift {:.3e}, norm drift {:.3e}, wall time {:.3f} s\n",
                     traj.size(), traj.relative_energy_drift(), traj.norm_drift(), wall);
  if (traj.failed) {
    log << "simulate: " << traj.failure << '\n';
    return kNumerical;
  }
  return kOk;
}

int cmd_poincare(const RunConfig& cfg, const RunOptions& opt, std::ostream& log) {
  if (cfg.model.type != ModelType::kToy) {
    throw ValidationError("poincare: the section theta = 0 is defined only for the toy model");
  }
  const auto& i = cfg.initial;
  const toy::ToyState s0 = toy::ToyState::from_angles(i.theta, i.I_theta, i.I_phi, i.phi);
  const toy::ToyParams prm{cfg.model.epsilon};
  const auto& pc = cfg.poincare;
  const auto start = std::chrono::steady_clock::now();
  const toy::PoincareResult r =
      pc.reduced_chart ? toy::poincare_section_reduced(s0, prm, pc.crossings, pc.steps_per_period)
                       : toy::poincare_section(s0, prm, pc.crossings,
                                               toy::PoincareOptions{pc.steps_per_period, cfg.integrator.method});
  const double wall = elapsed_seconds(start);
  const double fill = toy::fill_fraction(r.records, pc.grid_x, pc.grid_y);

  fs::create_directories(opt.out_dir);
  {
    auto f = open_output(opt.out_dir / "poincare.csv");
    f << "n,phi,I_phi\n";
    for (const auto& rec : r.records) f << fmt::format("{},{},{}\n", rec.n, num(rec.phi), num(rec.I_phi));
  }
  nlohmann::ordered_json s;
  s["command"] = "poincare";
  s["status"] = r.truncated ? "truncated" : "ok";
  if (r.truncated) s["failure"] = r.failure;
  s["crossings"] = r.records.size();
  s["fillFraction"] = fill;
  s["energyDrift"] = r.energy_drift;
  s["seed"] = cfg.sampler.seed;
  s["config"] = cfg.to_json();
  write_json(opt.out_dir / "summary.json", s);

  log << fmt::format("poincare: {} crossings, fill fraction {:.4f}, energy drift {:.3e}, wall time {:.3f} s\n",
                     r.records.size(), fill, r.energy_drift, wall);
  if (r.truncated) {
    log << "poincare: " << r.failure << '\n';
    return kNumerical;
  }
  return kOk;
}

void write_ensemble_csv(const fs::path& path, const Ensemble& e, const RunConfig& cfg) {
  auto f = open_output(path);
  f << "# ensemble: canonical, exp(-beta f_H)\n";
  f << "# seed: " << e.meta.seed << '\n';
  f << "# acceptance: classical " << num(e.meta.acceptance_classical) << ", quantum "
    << num(e.meta.acceptance_quantum) << '\n';
  f << "# config: " << cfg.to_json().dump() << '\n';
  if (e.members.empty()) return;
  std::string header = "chain,weight";
  const auto& x0 = e.members.front();
  for (const char* block : {"R", "P"}) {
    for (Eigen::Index j = 1; j <= x0.classical.R.size(); ++j) header += fmt::format(",{}{}", block, j);
  }
  for (const char* block : {"q", "p"}) {
    for (Eigen::Index k = 1; k <= x0.quantum.q.size(); ++k) header += fmt::format(",{}{}", block, k);
  }
  f << header << '\n';
  std::string line;
  for (std::size_t i = 0; i < e.size(); ++i) {
    line = fmt::format("{},{}", e.chain[i], num(e.weights[i]));
    append_state(line, e.members[i]);
    line += '\n';
    f << line;
  }
}

Ensemble read_ensemble_csv(const fs::path& path, const EhrenfestModel& model) {
  std::ifstream f(path);
  if (!f) throw ValidationError("cannot open ensemble " + path.string());
  const auto nc = static_cast<Eigen::Index>(model.classical_dim);
  const auto nq = static_cast<Eigen::Index>(model.quantum_dim);
  const std::size_t ncols = 2 + 2 * static_cast<std::size_t>(nc + nq);
  Ensemble e;
  std::string line;
  long lineno = 0;
  bool header_seen = false;
  std::vector<double> v(ncols);
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      const auto commas = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
      if (commas + 1 != ncols) {
        throw ValidationError(fmt::format("ensemble {}:{}: expected {} columns for this model, header has {}",
                                          path.string(), lineno, ncols, commas + 1));
      }
      continue;
    }
    const char* p = line.c_str();
    for (std::size_t c = 0; c < ncols; ++c) {
      char* end = nullptr;
      v[c] = std::strtod(p, &end);
      if (end == p || (c + 1 < ncols && *end != ',') || (c + 1 == ncols && *end != '\0')) {
        throw ValidationError(fmt::format("ensemble {}:{}: malformed row", path.string(), lineno));
      }
      p = end + 1;
    }
    EhrenfestState x;
    x.classical.R = Eigen::Map<const Vector>(v.data() + 2, nc);
    x.classical.P = Eigen::Map<const Vector>(v.data() + 2 + nc, nc);
    x.quantum = QuantumState(Eigen::Map<const Vector>(v.data() + 2 + 2 * nc, nq),
                             Eigen::Map<const Vector>(v.data() + 2 + 2 * nc + nq, nq));
    e.chain.push_back(static_cast<int>(v[0]));
    e.weights.push_back(v[1]);
    e.members.push_back(std::move(x));
  }
  if (e.members.empty()) throw ValidationError("ensemble " + path.string() + " has no members");
  return e;
}

int cmd_sample(const RunConfig& cfg, const RunOptions& opt, std::ostream& log) {
  const EhrenfestModel model = build_model(cfg);
  const auto start = std::chrono::steady_clock::now();
  const Ensemble e = metropolis_canonical(model, cfg.sampler, opt.threads);
  const double wall = elapsed_seconds(start);
  fs::create_directories(opt.out_dir);
  write_ensemble_csv(opt.out_dir / "ensemble.csv", e, cfg);
  log << fmt::format("sample: {} members, acceptance classical {:.3f} quantum {:.3f}, wall time {:.3f} s\n",
                     e.size(), e.meta.acceptance_classical, e.meta.acceptance_quantum, wall);
  for (const auto& w : e.meta.warnings) log << "warning: " << w << '\n';
  return e.meta.warnings.empty() ? kOk : kSoftWarning;
}

int cmd_average(const RunConfig& cfg, const RunOptions& opt, const fs::path& ensemble_csv, std::ostream& log) {
  const EhrenfestModel model = build_model(cfg);
  std::vector<Observable> obs;
  for (const auto& name : cfg.average.observables) {
    obs.push_back(named_observable(name, cfg, model));
    if (!obs.back().phase_invariant) {
      throw ValidationError("observable '" + name + "' is not phase invariant, so its ensemble average is undefined");
    }
  }
  const Ensemble e = ensemble_csv.empty() ? metropolis_canonical(model, cfg.sampler, opt.threads)
                                          : read_ensemble_csv(ensemble_csv, model);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const Average a = ensemble_average(obs[k], e);
    rows.push_back({{"observable", cfg.average.observables[k]},
                    {"mean", a.mean},
                    {"stdError", a.std_error},
                    {"nEff", a.n_eff}});
    log << fmt::format("{:>10} = {:.6f} +- {:.6f}\n", cfg.average.observables[k], a.mean, a.std_error);
  }
  nlohmann::ordered_json s;
  s["command"] = "average";
  s["averages"] = rows;
  s["members"] = e.size();
  s["ensemble"] = ensemble_csv.empty() ? std::string("sampled") : ensemble_csv.filename().string();
  s["seed"] = cfg.sampler.seed;
  s["config"] = cfg.to_json();
  fs::create_directories(opt.out_dir);
  write_json(opt.out_dir / "averages.json", s);
  for (const auto& w : e.meta.warnings) log << "warning: " << w << '\n';
  return e.meta.warnings.empty() ? kOk : kSoftWarning;
}

int cmd_check(const RunConfig& cfg, const RunOptions& opt, std::ostream& log) {
  CheckOptions o;
  o.hbar = cfg.integrator.hbar;
  o.seed = cfg.sampler.seed;
  const auto results = run_invariant_checks(o);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  bool ok = true;
  for (const auto& r : results) {
    ok = ok && r.passed();
    log << fmt::format("{} {:<52} residual {:.3e} (tol {:.1e}){}\n", r.passed() ? "PASS" : "FAIL", r.name, r.residual,
                       r.tolerance, r.detail.empty() ? "" : "  " + r.detail);
    rows.push_back({{"name", r.name},
                    {"passed", r.passed()},
                    {"residual", r.residual},
                    {"tolerance", r.tolerance},
                    {"detail", r.detail}});
  }
  nlohmann::ordered_json s;
  s["command"] = "check";
  s["passed"] = ok;
  s["results"] = rows;
  s["seed"] = o.seed;
  s["config"] = cfg.to_json();
  fs::create_directories(opt.out_dir);
  write_json(opt.out_dir / "check.json", s);
  return ok ? kOk : kNumerical;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ehrenfest mixed quantum-classical dynamics and statistics"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string ensemble_path;
  auto* seed_opt = app.add_option("--seed", seed, "master seed, overrides sampler.seed");
  app.add_option("--config", config_path, "configuration file (INI or JSON)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads for sampling chains")->check(CLI::PositiveNumber);
  app.set_help_flag("-h,--help");
  auto* sim = app.add_subcommand("simulate", "propagate one trajectory");
  auto* poi = app.add_subcommand("poincare", "stroboscopic section of the toy model");
  auto* smp = app.add_subcommand("sample", "canonical ensemble by Metropolis chains");
  auto* avg = app.add_subcommand("average", "ensemble averages of observables");
  auto* chk = app.add_subcommand("check", "invariant check suite");
  avg->add_option("--ensemble", ensemble_path, "average over a stored ensemble CSV instead of sampling");
  for (auto* sub : {sim, poi, smp, avg, chk}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config(config_path);
    } else if (!chk->parsed()) {
      throw ValidationError("--config is required for this command");
    }
    if (seed_opt->count() > 0) cfg.sampler.seed = seed;
    RunOptions opt{out_dir, threads};
    if (sim->parsed()) return cmd_simulate(cfg, opt, out);
    if (poi->parsed()) return cmd_poincare(cfg, opt, out);
    if (smp->parsed()) return cmd_sample(cfg, opt, out);
    if (avg->parsed()) return cmd_average(cfg, opt, ensemble_path, out);
    return cmd_check(cfg, opt, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace ehrenfest::cli
