#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cvqkd/channel.hpp"
#include "cvqkd/homodyne.hpp"
#include "cvqkd/montecarlo.hpp"
#include "cvqkd/optimizer.hpp"
#include "cvqkd/security.hpp"

namespace cvqkd::app {

// Flat dotted-key configuration, e.g. `channel.eta_ch = 0.77`.
using ConfigMap = std::map<std::string, std::string>;

ConfigMap default_config();
// Operating point of the 100 m rooftop experiment.
ConfigMap rooftop_preset();
// `key = value` lines; `#` starts a comment. Unknown keys are rejected when
// the configuration is resolved, not here.
ConfigMap parse_config(std::istream& in);
ConfigMap load_config_file(const std::filesystem::path& path);

struct RunConfig {
  ChannelParams channel;
  FramePlan plan;
  double alpha = 0.0;
  std::optional<double> threshold;  // absent: optimal threshold
  CascadeModel cascade = CascadeModel::default_table();
  QuadratureConvention key_rate_convention = QuadratureConvention::half();
  QuadratureConvention homodyne_convention = QuadratureConvention::quarter();
  EveKnowledge eve = EveKnowledge::outcome_magnitude;
  std::vector<double> eta_grid;
  std::vector<double> threshold_grid;
  std::vector<double> error_thresholds;
  std::pair<double, double> alpha_range{0.05, 3.0};
  std::uint64_t pulses = 0;
  std::uint64_t seed = 0;
  std::vector<double> mc_thresholds;
  double reference_excess_noise = 0.0;
  bool dump_session = false;
  std::filesystem::path out_dir;
  ConfigMap entries;  // resolved key/value echo

  KeyRateModel key_rate_model() const;
  ExperimentSettings experiment() const;
};

// Validates every field; throws ValidationError listing all problems.
RunConfig resolve(const ConfigMap& entries);

enum ExitCode : int { kSuccess = 0, kValidationError = 2, kNonConvergence = 3 };

struct CommandResult {
  int exit_code = kSuccess;
  std::vector<std::filesystem::path> artifacts;
};

CommandResult cmd_keyrate(const RunConfig& config, std::ostream& log);
CommandResult cmd_curves(const RunConfig& config, std::ostream& log);
CommandResult cmd_simulate(const RunConfig& config, std::ostream& log);
CommandResult cmd_noise(const RunConfig& config, std::ostream& log);
CommandResult cmd_optimize_alpha(const RunConfig& config, std::ostream& log);
CommandResult cmd_optimize_threshold(const RunConfig& config, std::ostream& log);

// Writes <out>/manifest.json: command, resolved configuration, seed and the
// SHA-256 of every artifact.
std::filesystem::path write_manifest(const std::string& command, const RunConfig& config,
                                     const std::vector<std::filesystem::path>& artifacts);
std::string sha256_file(const std::filesystem::path& path);

// Full command-line entry point (argv[0] excluded). Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cvqkd::app
