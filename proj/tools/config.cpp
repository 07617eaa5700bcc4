#include "config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

namespace ehrenfest::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& where, const std::string& value, const std::string& what) {
  throw ValidationError(fmt::format("config {}: '{}' {}", where, value, what));
}

double parse_double(const std::string& where, const std::string& text) {
  const std::string s = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) bad_value(where, text, "is not a number");
  if (!std::isfinite(v)) bad_value(where, text, "is not finite");
  return v;
}

template <typename Int>
Int parse_int(const std::string& where, const std::string& text) {
  const std::string s = trim(text);
  Int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) bad_value(where, text, "is not an integer");
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> parse_list(const std::string& where, const std::string& text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split_list(text)) out.push_back(parse_double(where, item));
  return out;
}

void require(bool ok, const std::string& where, const std::string& value, const std::string& what) {
  if (!ok) bad_value(where, value, what);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"model", {"type", "epsilon", "mass", "omega", "coupling", "splitting", "file"}},
      {"integrator", {"method", "dt", "steps", "record_every", "hbar"}},
      {"initial", {"theta", "I_theta", "I_phi", "phi", "R", "P", "q", "p"}},
      {"poincare", {"crossings", "steps_per_period", "grid_x", "grid_y", "chart"}},
      {"sampler", {"beta", "samples", "burn_in", "thin", "chains", "classical_step", "quantum_step", "seed"}},
      {"average", {"observables"}},
  };
  return keys;
}

/// Keys that only make sense for one model type.
bool applies(ModelType type, const std::string& section, const std::string& key) {
  static const std::set<std::string> toy_model = {"epsilon"};
  static const std::set<std::string> osc_model = {"mass", "omega", "coupling", "splitting"};
  static const std::set<std::string> toy_initial = {"theta", "I_theta", "I_phi", "phi"};
  if (section == "model") {
    if (toy_model.count(key)) return type == ModelType::kToy;
    if (osc_model.count(key)) return type == ModelType::kSpinOscillator;
    if (key == "file") return type == ModelType::kMatrixFile;
  }
  if (section == "initial") return toy_initial.count(key) ? type == ModelType::kToy : type != ModelType::kToy;
  return true;
}

ModelType parse_model_type(const std::string& s) {
  if (s == "toy") return ModelType::kToy;
  if (s == "spin-oscillator") return ModelType::kSpinOscillator;
  if (s == "matrix-file") return ModelType::kMatrixFile;
  bad_value("model.type", s, "is not one of toy, spin-oscillator, matrix-file");
}

Matrix read_matrix(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ValidationError(where + ": expected a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
      throw ValidationError(fmt::format("{}: row {} must have {} entries", where, r, n));
    }
    for (Eigen::Index c = 0; c < n; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ValidationError(fmt::format("{}: entry ({}, {}) is not a number", where, r, c));
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

HermitianOperator read_operator(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("re")) throw ValidationError(where + ": expected an object with \"re\" (and optional \"im\")");
  for (const auto& [k, v] : j.items()) {
    if (k != "re" && k != "im") throw ValidationError(fmt::format("{}: unknown key '{}'", where, k));
  }
  const Matrix re = read_matrix(j["re"], where + ".re");
  const Matrix im = j.contains("im") ? read_matrix(j["im"], where + ".im") : Matrix::Zero(re.rows(), re.cols());
  if (im.rows() != re.rows()) throw ValidationError(where + ": re and im differ in size");
  try {
    return HermitianOperator(re, im);
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

std::string json_scalar_text(const nlohmann::json& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  if (v.is_array()) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) out += ",";
      out += json_scalar_text(v[i], where);
    }
    return out;
  }
  throw ValidationError(fmt::format("config {}: unsupported JSON value {}", where, v.dump()));
}

}  // namespace

std::string to_string(ModelType type) {
  switch (type) {
    case ModelType::kToy:
      return "toy";
    case ModelType::kSpinOscillator:
      return "spin-oscillator";
    case ModelType::kMatrixFile:
      return "matrix-file";
  }
  return "unknown";
}

RawConfig read_ini(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError(fmt::format("config {}:{}: {}", path.string(), e.line(), e.message()));
  }
  RawConfig raw;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ValidationError(fmt::format("config {}: key '{}' is outside any [section]", path.string(), section));
    }
    auto& out = raw[section];
    for (const auto& [key, value] : body) out[key] = value.get_value<std::string>();
  }
  return raw;
}

RawConfig read_json_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(fmt::format("config {}: {}", path.string(), e.what()));
  }
  if (j.contains("config")) j = j["config"];
  if (!j.is_object()) throw ValidationError("config " + path.string() + ": expected a JSON object");
  RawConfig raw;
  for (const auto& [section, body] : j.items()) {
    if (!body.is_object()) throw ValidationError(fmt::format("config {}: section '{}' must be an object", path.string(), section));
    for (const auto& [key, value] : body.items()) {
      raw[section][key] = json_scalar_text(value, section + "." + key);
    }
  }
  return raw;
}

RunConfig resolve(const RawConfig& raw, const std::filesystem::path& base_dir) {
  RunConfig cfg;
  for (const auto& [section, body] : raw) {
    const auto it = known_keys().find(section);
    if (it == known_keys().end()) throw ValidationError(fmt::format("config: unknown section [{}]", section));
    for (const auto& [key, value] : body) {
      if (!it->second.count(key)) throw ValidationError(fmt::format("config: unknown key '{}.{}'", section, key));
    }
  }
  auto get = [&raw](const std::string& section, const std::string& key) -> const std::string* {
    const auto s = raw.find(section);
    if (s == raw.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  };

  if (const auto* v = get("model", "type")) cfg.model.type = parse_model_type(trim(*v));
  for (const auto& [section, body] : raw) {
    for (const auto& [key, value] : body) {
      if (!applies(cfg.model.type, section, key)) {
        throw ValidationError(fmt::format("config: key '{}.{}' does not apply to model type {}", section, key,
                                          to_string(cfg.model.type)));
      }
    }
  }

  auto number = [&](const std::string& section, const std::string& key, double& target) {
    if (const auto* v = get(section, key)) target = parse_double(section + "." + key, *v);
  };
  auto integer = [&](const std::string& section, const std::string& key, auto& target) {
    if (const auto* v = get(section, key)) {
      target = parse_int<std::remove_reference_t<decltype(target)>>(section + "." + key, *v);
    }
  };
  auto list = [&](const std::string& section, const std::string& key, std::vector<double>& target) {
    if (const auto* v = get(section, key)) target = parse_list(section + "." + key, *v);
  };

  // [model]
  number("model", "epsilon", cfg.model.epsilon);
  number("model", "mass", cfg.model.oscillator.mass);
  number("model", "omega", cfg.model.oscillator.omega);
  number("model", "coupling", cfg.model.oscillator.coupling);
  number("model", "splitting", cfg.model.oscillator.splitting);
  if (const auto* v = get("model", "file")) {
    std::filesystem::path f = trim(*v);
    if (f.is_relative()) f = base_dir / f;
    cfg.model.file = f.lexically_normal().string();
  }
  require(cfg.model.epsilon >= 0.0, "model.epsilon", fmt::format("{}", cfg.model.epsilon), "must be >= 0");
  require(cfg.model.oscillator.mass > 0.0, "model.mass", fmt::format("{}", cfg.model.oscillator.mass), "must be > 0");
  if (cfg.model.type == ModelType::kMatrixFile && cfg.model.file.empty()) {
    throw ValidationError("config: model.file is required for model type matrix-file");
  }

  // [integrator]
  if (const auto* v = get("integrator", "method")) {
    const std::string m = trim(*v);
    if (m == "strang") {
      cfg.integrator.method = Integrator::kStrang;
    } else if (m == "rk4") {
      cfg.integrator.method = Integrator::kRk4;
    } else {
      bad_value("integrator.method", m, "is not one of strang, rk4");
    }
  }
  number("integrator", "dt", cfg.integrator.dt);
  integer("integrator", "steps", cfg.integrator.steps);
  integer("integrator", "record_every", cfg.integrator.record_every);
  number("integrator", "hbar", cfg.integrator.hbar);
  require(cfg.integrator.dt > 0.0, "integrator.dt", fmt::format("{}", cfg.integrator.dt), "must be > 0");
  require(cfg.integrator.steps >= 1, "integrator.steps", std::to_string(cfg.integrator.steps), "must be >= 1");
  require(cfg.integrator.record_every >= 1, "integrator.record_every", std::to_string(cfg.integrator.record_every),
          "must be >= 1");
  require(cfg.integrator.hbar > 0.0, "integrator.hbar", fmt::format("{}", cfg.integrator.hbar), "must be > 0");

  // [initial]
  number("initial", "theta", cfg.initial.theta);
  number("initial", "I_theta", cfg.initial.I_theta);
  number("initial", "I_phi", cfg.initial.I_phi);
  number("initial", "phi", cfg.initial.phi);
  require(cfg.initial.I_theta >= 0.0, "initial.I_theta", fmt::format("{}", cfg.initial.I_theta), "must be >= 0");
  require(cfg.initial.I_phi >= 0.0 && cfg.initial.I_phi <= 1.0, "initial.I_phi", fmt::format("{}", cfg.initial.I_phi),
          "must lie in [0, 1]");
  list("initial", "R", cfg.initial.R);
  list("initial", "P", cfg.initial.P);
  list("initial", "q", cfg.initial.q);
  list("initial", "p", cfg.initial.p);
  if (cfg.model.type != ModelType::kToy) {
    std::size_t nc = 1, nq = 2;
    if (cfg.model.type == ModelType::kMatrixFile) {
      const LinearCouplingSpec spec = read_matrix_model(cfg.model.file);
      nc = static_cast<std::size_t>(spec.masses.size());
      nq = spec.h0.dim();
    }
    const double r0 = cfg.model.type == ModelType::kSpinOscillator ? 1.0 : 0.0;
    if (cfg.initial.R.empty()) cfg.initial.R.assign(nc, r0);
    if (cfg.initial.P.empty()) cfg.initial.P.assign(nc, 0.0);
    if (cfg.initial.q.empty()) {
      cfg.initial.q.assign(nq, 0.0);
      cfg.initial.q[0] = 1.0;
    }
    if (cfg.initial.p.empty()) cfg.initial.p.assign(nq, 0.0);
    auto sized = [](const std::vector<double>& v, std::size_t n, const char* key) {
      if (v.size() != n) {
        throw ValidationError(fmt::format("config initial.{}: expected {} values, got {}", key, n, v.size()));
      }
    };
    sized(cfg.initial.R, nc, "R");
    sized(cfg.initial.P, nc, "P");
    sized(cfg.initial.q, nq, "q");
    sized(cfg.initial.p, nq, "p");
    double n2 = 0.0;
    for (std::size_t k = 0; k < nq; ++k) n2 += cfg.initial.q[k] * cfg.initial.q[k] + cfg.initial.p[k] * cfg.initial.p[k];
    if (std::abs(n2 - 1.0) > 1e-9) {
      throw ValidationError(fmt::format("config initial.q/p: quantum state must be normalized (norm2 = {:.17g})", n2));
    }
  }

  // [poincare]
  integer("poincare", "crossings", cfg.poincare.crossings);
  integer("poincare", "steps_per_period", cfg.poincare.steps_per_period);
  integer("poincare", "grid_x", cfg.poincare.grid_x);
  integer("poincare", "grid_y", cfg.poincare.grid_y);
  if (const auto* v = get("poincare", "chart")) {
    const std::string c = trim(*v);
    if (c == "cartesian") {
      cfg.poincare.reduced_chart = false;
    } else if (c == "reduced") {
      cfg.poincare.reduced_chart = true;
    } else {
      bad_value("poincare.chart", c, "is not one of cartesian, reduced");
    }
  }
  require(cfg.poincare.crossings >= 1, "poincare.crossings", std::to_string(cfg.poincare.crossings), "must be >= 1");
  require(cfg.poincare.steps_per_period >= 1, "poincare.steps_per_period",
          std::to_string(cfg.poincare.steps_per_period), "must be >= 1");
  require(cfg.poincare.grid_x >= 2, "poincare.grid_x", std::to_string(cfg.poincare.grid_x), "must be >= 2");
  require(cfg.poincare.grid_y >= 2, "poincare.grid_y", std::to_string(cfg.poincare.grid_y), "must be >= 2");

  // [sampler]
  number("sampler", "beta", cfg.sampler.beta);
  integer("sampler", "samples", cfg.sampler.samples);
  integer("sampler", "burn_in", cfg.sampler.burn_in);
  integer("sampler", "thin", cfg.sampler.thin);
  integer("sampler", "chains", cfg.sampler.chains);
  number("sampler", "classical_step", cfg.sampler.classical_step);
  number("sampler", "quantum_step", cfg.sampler.quantum_rotation_scale);
  integer("sampler", "seed", cfg.sampler.seed);
  try {
    cfg.sampler.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(std::string("config [sampler]: ") + e.what());
  }

  // [average]
  if (const auto* v = get("average", "observables")) {
    cfg.average.observables = split_list(*v);
    for (const auto& name : cfg.average.observables) {
      if (name.empty()) bad_value("average.observables", *v, "contains an empty name");
    }
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  char c = 0;
  while (in.get(c) && std::isspace(static_cast<unsigned char>(c))) {
  }
  const RawConfig raw = c == '{' ? read_json_config(path) : read_ini(path);
  return resolve(raw, path.parent_path());
}

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  auto& m = j["model"];
  m["type"] = to_string(model.type);
  switch (model.type) {
    case ModelType::kToy:
      m["epsilon"] = model.epsilon;
      break;
    case ModelType::kSpinOscillator:
      m["mass"] = model.oscillator.mass;
      m["omega"] = model.oscillator.omega;
      m["coupling"] = model.oscillator.coupling;
      m["splitting"] = model.oscillator.splitting;
      break;
    case ModelType::kMatrixFile:
      m["file"] = model.file;
      break;
  }
  j["integrator"] = {{"method", ehrenfest::to_string(integrator.method)},
                     {"dt", integrator.dt},
                     {"steps", integrator.steps},
                     {"record_every", integrator.record_every},
                     {"hbar", integrator.hbar}};
  if (model.type == ModelType::kToy) {
    j["initial"] = {{"theta", initial.theta}, {"I_theta", initial.I_theta}, {"I_phi", initial.I_phi}, {"phi", initial.phi}};
  } else {
    j["initial"] = {{"R", initial.R}, {"P", initial.P}, {"q", initial.q}, {"p", initial.p}};
  }
  j["poincare"] = {{"crossings", poincare.crossings},
                   {"steps_per_period", poincare.steps_per_period},
                   {"grid_x", poincare.grid_x},
                   {"grid_y", poincare.grid_y},
                   {"chart", poincare.reduced_chart ? "reduced" : "cartesian"}};
  j["sampler"] = {{"beta", sampler.beta},
                  {"samples", sampler.samples},
                  {"burn_in", sampler.burn_in},
                  {"thin", sampler.thin},
                  {"chains", sampler.chains},
                  {"classical_step", sampler.classical_step},
                  {"quantum_step", sampler.quantum_rotation_scale},
                  {"seed", sampler.seed}};
  j["average"] = {{"observables", average.observables}};
  return j;
}

LinearCouplingSpec read_matrix_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open matrix model file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(fmt::format("matrix model {}: {}", path.string(), e.what()));
  }
  const std::string where = "matrix model " + path.string();
  for (const auto& [k, v] : j.items()) {
    if (k != "masses" && k != "omegas" && k != "H0" && k != "couplings") {
      throw ValidationError(fmt::format("{}: unknown key '{}'", where, k));
    }
  }
  if (!j.contains("masses") || !j.contains("H0") || !j.contains("couplings")) {
    throw ValidationError(where + ": requires masses, H0 and couplings");
  }
  auto vec = [&](const nlohmann::json& a, const std::string& key) {
    if (!a.is_array()) throw ValidationError(fmt::format("{}: {} must be an array", where, key));
    Vector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!a[i].is_number()) throw ValidationError(fmt::format("{}: {}[{}] is not a number", where, key, i));
      v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    }
    return v;
  };
  LinearCouplingSpec spec;
  spec.masses = vec(j["masses"], "masses");
  if (spec.masses.size() == 0) throw ValidationError(where + ": need at least one classical coordinate");
  if (j.contains("omegas")) spec.omegas = vec(j["omegas"], "omegas");
  spec.h0 = read_operator(j["H0"], where + " H0");
  if (!j["couplings"].is_array()) throw ValidationError(where + ": couplings must be an array");
  for (std::size_t i = 0; i < j["couplings"].size(); ++i) {
    spec.couplings.push_back(read_operator(j["couplings"][i], fmt::format("{} couplings[{}]", where, i)));
  }
  linear_coupling_model(spec);  // structural validation
  return spec;
}

EhrenfestModel build_model(const RunConfig& cfg) {
  switch (cfg.model.type) {
    case ModelType::kToy:
      return toy::make_model(toy::ToyParams{cfg.model.epsilon});
    case ModelType::kSpinOscillator:
      return spin_oscillator_model(cfg.model.oscillator);
    case ModelType::kMatrixFile:
      return linear_coupling_model(read_matrix_model(cfg.model.file));
  }
  throw ValidationError("unknown model type");
}

EhrenfestState build_initial_state(const RunConfig& cfg, const EhrenfestModel& model) {
  if (cfg.model.type == ModelType::kToy) {
    const auto& i = cfg.initial;
    return toy::ToyState::from_angles(i.theta, i.I_theta, i.I_phi, i.phi).to_ehrenfest();
  }
  auto to_vec = [](const std::vector<double>& v) {
    return Vector(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  return model.make_state(to_vec(cfg.initial.R), to_vec(cfg.initial.P),
                          QuantumState(to_vec(cfg.initial.q), to_vec(cfg.initial.p)));
}

}  // namespace ehrenfest::cli
