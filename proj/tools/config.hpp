#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ehrenfest/dynamics.hpp"
#include "ehrenfest/statmech.hpp"
#include "ehrenfest/toymodel.hpp"

namespace ehrenfest::cli {

enum class ModelType { kToy, kSpinOscillator, kMatrixFile };

struct ModelConfig {
  ModelType type = ModelType::kToy;
  double epsilon = 0.8;
  SpinOscillatorParams oscillator;
  std::string file;  // matrix-file model, resolved against the config directory
};

struct IntegratorConfig {
  Integrator method = Integrator::kStrang;
  double dt = 1e-3;
  long steps = 10000;
  long record_every = 100;
  double hbar = 1.0;
};

struct InitialConfig {
  // toy model
  double theta = 0.0;
  double I_theta = 1.0;
  double I_phi = 0.6;
  double phi = 1.0;
  // Cartesian models; empty means the model default
  std::vector<double> R, P, q, p;
};

struct PoincareConfig {
  long crossings = 30000;
  int steps_per_period = 200;
  int grid_x = 100;
  int grid_y = 100;
  bool reduced_chart = false;
};

struct AverageConfig {
  std::vector<std::string> observables = {"one"};
};

/// Fully resolved run configuration. Every field has a default; a config file only
/// overrides what it names.
struct RunConfig {
  ModelConfig model;
  IntegratorConfig integrator;
  InitialConfig initial;
  PoincareConfig poincare;
  SamplerConfig sampler;
  AverageConfig average;

  /// Typed JSON of the resolved configuration, in the same section/key layout as the
  /// text format. Loading it back reproduces this configuration.
  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

/// Raw section -> key -> value text, before typing.
using RawConfig = std::map<std::string, std::map<std::string, std::string>>;

/// Reads an INI-style file ("[section]" headers, "key = value" lines, ';' or '#'
/// comment lines). Syntax errors carry the line number.
RawConfig read_ini(const std::filesystem::path& path);

/// Reads a JSON config: either a bare config object or an output file that embeds
/// one under "config".
RawConfig read_json_config(const std::filesystem::path& path);

/// Types and validates raw text. Unknown sections or keys, and keys that do not
/// apply to the selected model, are errors naming section.key.
RunConfig resolve(const RawConfig& raw, const std::filesystem::path& base_dir);

/// Picks the reader from the file content (JSON if it starts with '{').
RunConfig load_config(const std::filesystem::path& path);

std::string to_string(ModelType type);

/// The model described by the configuration.
EhrenfestModel build_model(const RunConfig& cfg);

/// Initial state for the configured model; quantum part must be normalized.
EhrenfestState build_initial_state(const RunConfig& cfg, const EhrenfestModel& model);

/// Matrix model file: {"masses": [...], "omegas": [...]?, "H0": {"re": [[...]], "im": [[...]]?},
/// "couplings": [{"re": ..., "im": ...}, ...]}.
LinearCouplingSpec read_matrix_model(const std::filesystem::path& path);

}  // namespace ehrenfest::cli
