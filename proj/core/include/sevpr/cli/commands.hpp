#ifndef SEVPR_CLI_COMMANDS_HPP
#define SEVPR_CLI_COMMANDS_HPP

#include <optional>
#include <ostream>
#include <string>

#include "sevpr/cli/config.hpp"

namespace sevpr::cli {

// Command implementations shared by the binary and the test suites. Each
// echoes the effective config into out_dir, writes its primary outputs
// there, and throws config_error / io_error / numeric_error on failure
// (mapped to exit codes 2 / 3 / 4 by the executable).

void cmd_synth(const Options& o, const std::string& out_dir, std::ostream& log);

// `manifest` names one traverse manifest. Writes vol_NNNNN_{mcs,tss}.spk per
// volume plus summary.txt. checkpoint, when given, supplies the trained
// event encoder; otherwise the encoder is seed-initialized.
void cmd_convert(const Options& o, const std::string& manifest,
                 const std::optional<std::string>& checkpoint,
                 const std::string& out_dir, std::ostream& log);

// `dataset` is a dataset directory or dataset.txt listing >= 2 traverse
// manifests; traverse 0 is the database, the rest are queries.
void cmd_train(const Options& o, const std::string& dataset,
               const std::string& out_dir, std::ostream& log);

void cmd_eval(const Options& o, const std::string& dataset,
              const std::string& checkpoint, const std::string& out_dir,
              std::ostream& log);

struct EnergyArgs {
  std::optional<std::string> checkpoint; // model params (measured mode)
  std::optional<std::string> dataset;    // recorded inputs (measured mode)
  // Direct count injection (GOps); bypasses the graph when present.
  std::optional<double> inject_mac_g;
  std::optional<double> inject_ac_g;
};

void cmd_energy(const Options& o, const EnergyArgs& args,
                const std::string& out_dir, std::ostream& log);

} // namespace sevpr::cli

#endif
