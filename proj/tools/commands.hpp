#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace resgame::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitSolver = 2,
  kExitVerification = 3,
};

// Malformed or inconsistent configuration; maps to kExitValidation.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string command;
  std::string config_path;
  std::string preset;
  std::string out_path;
  std::string figure;
  std::string sweep_kind;
  std::string method = "closed-form";
  std::string value_csv;
  std::string deviations_csv;
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
};

// Preset (if any) with the config file merge-patched over it.
nlohmann::json load_config(const Options& opts);

// Names accepted by --preset.
std::vector<std::string> preset_names();

// Runs one subcommand; main output goes to `out` unless opts.out_path is set,
// diagnostics to `err`. Returns an ExitCode.
int run_command(const Options& opts, std::ostream& out, std::ostream& err);

// Full command line, including argv[0].
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace resgame::cli
