// Command-line front end: synth | convert | train | eval | energy.
// Exit codes: 0 success, 2 config/usage error, 3 I/O error, 4 numerical
// failure.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sevpr/cli/commands.hpp"
#include "sevpr/cli/config.hpp"
#include "sevpr/errors.hpp"

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> overrides; // key=value, win over the config file
  std::string out_dir;
};

void add_common(CLI::App* cmd, Common& c, bool out_required = true) {
  cmd->add_option("--config", c.config_path, "key=value config file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides,
                  "config override key=value (repeatable; wins over --config)");
  auto* out = cmd->add_option("--out", c.out_dir, "output directory");
  if (out_required) out->required();
}

sevpr::cli::Options make_options(const Common& c) {
  sevpr::cli::Options o = sevpr::cli::load_options(c.config_path);
  for (const auto& kv : c.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos)
      throw sevpr::config_error("--set expects key=value, got: " + kv);
    sevpr::cli::set_option(o, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return o;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiking event-camera place recognition toolkit"};
  app.require_subcommand(1);

  // synth
  Common synth_c;
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(synth, synth_c);
  std::optional<std::uint64_t> seed;
  std::optional<int> places, traverses;
  synth->add_option("--seed", seed, "root seed");
  synth->add_option("--places", places, "number of places");
  synth->add_option("--traverses", traverses, "number of traverses");

  // convert
  Common conv_c;
  std::string conv_manifest;
  std::optional<std::string> conv_ckpt;
  auto* convert =
      app.add_subcommand("convert", "slice volumes and dump spike tensors");
  add_common(convert, conv_c);
  convert->add_option("--manifest", conv_manifest, "traverse manifest")
      ->required()
      ->check(CLI::ExistingFile);
  convert->add_option("--checkpoint", conv_ckpt,
                      "model checkpoint supplying the trained event encoder");

  // train
  Common train_c;
  std::string train_dataset;
  auto* train = app.add_subcommand("train", "weakly supervised triplet training");
  add_common(train, train_c);
  train->add_option("--dataset", train_dataset,
                    "dataset directory or dataset.txt")
      ->required();

  // eval
  Common eval_c;
  std::string eval_dataset, eval_ckpt;
  std::string phi_sweep;
  auto* eval = app.add_subcommand("eval", "retrieval metrics");
  add_common(eval, eval_c);
  eval->add_option("--dataset", eval_dataset, "dataset directory or dataset.txt")
      ->required();
  eval->add_option("--checkpoint", eval_ckpt, "model checkpoint")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--phi-sweep", phi_sweep,
                   "comma-separated geographic thresholds in meters");

  // energy
  Common energy_c;
  sevpr::cli::EnergyArgs eargs;
  std::optional<std::string> energy_mode;
  std::optional<double> energy_rate;
  auto* energy = app.add_subcommand("energy", "operation counts and energy");
  add_common(energy, energy_c);
  energy->add_option("--checkpoint", eargs.checkpoint, "model checkpoint");
  energy->add_option("--dataset", eargs.dataset,
                     "dataset for the recorded input batch (snn-measured)");
  energy->add_option("--mode", energy_mode, "ann | snn-static | snn-measured");
  energy->add_option("--rate", energy_rate, "assumed firing rate (snn-static)");
  energy->add_option("--mac-g", eargs.inject_mac_g,
                     "inject MAC count in GOps and print energy");
  energy->add_option("--ac-g", eargs.inject_ac_g,
                     "inject AC count in GOps and print energy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      auto o = make_options(synth_c);
      if (seed) o.seed = *seed;
      if (places) o.synth.places = *places;
      if (traverses) o.synth.traverses = *traverses;
      sevpr::cli::cmd_synth(o, synth_c.out_dir, std::cout);
    } else if (convert->parsed()) {
      auto o = make_options(conv_c);
      sevpr::cli::cmd_convert(o, conv_manifest, conv_ckpt, conv_c.out_dir,
                              std::cout);
    } else if (train->parsed()) {
      auto o = make_options(train_c);
      sevpr::cli::cmd_train(o, train_dataset, train_c.out_dir, std::cout);
    } else if (eval->parsed()) {
      auto o = make_options(eval_c);
      if (!phi_sweep.empty())
        sevpr::cli::set_option(o, "eval.phi_sweep", phi_sweep);
      sevpr::cli::cmd_eval(o, eval_dataset, eval_ckpt, eval_c.out_dir, std::cout);
    } else if (energy->parsed()) {
      auto o = make_options(energy_c);
      if (energy_mode) o.energy.mode = *energy_mode;
      if (energy_rate) o.energy.static_rate = *energy_rate;
      sevpr::cli::cmd_energy(o, eargs, energy_c.out_dir, std::cout);
    }
  } catch (const sevpr::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sevpr::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const sevpr::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
