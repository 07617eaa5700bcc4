#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "config.hpp"

namespace ehrenfest::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kNumerical = 2, kSoftWarning = 3 };

struct RunOptions {
  std::filesystem::path out_dir = ".";
  unsigned threads = 1;
};

/// Observable by name: one, norm, energy, sigma_x/y/z, I_theta, I_phi_sq, cos_phi,
/// R<j>, P<j>, q<k>, p<k> (1-based). Model-specific names are checked against the model.
Observable named_observable(const std::string& name, const RunConfig& cfg, const EhrenfestModel& model);

int cmd_simulate(const RunConfig& cfg, const RunOptions& opt, std::ostream& log);
int cmd_poincare(const RunConfig& cfg, const RunOptions& opt, std::ostream& log);
int cmd_sample(const RunConfig& cfg, const RunOptions& opt, std::ostream& log);
int cmd_average(const RunConfig& cfg, const RunOptions& opt, const std::filesystem::path& ensemble_csv,
                std::ostream& log);
int cmd_check(const RunConfig& cfg, const RunOptions& opt, std::ostream& log);

/// Ensemble CSV: '#' comment lines, header "chain,weight,R1..,P1..,q1..,p1..", one row per member.
void write_ensemble_csv(const std::filesystem::path& path, const Ensemble& e, const RunConfig& cfg);
Ensemble read_ensemble_csv(const std::filesystem::path& path, const EhrenfestModel& model);

/// Full command line: subcommand plus flags. Returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ehrenfest::cli
