#ifndef SEVPR_CLI_CONFIG_HPP
#define SEVPR_CLI_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace sevpr::cli {

// Every tunable of the toolkit, addressable as section-prefixed keys in a
// plain key=value config file (e.g. "repr.eta_ms=50"). Unknown keys are
// rejected; missing keys keep these defaults; flags override file values.
struct Options {
  std::uint64_t seed = 1;
  int threads = 1;

  struct {
    int time_steps = 4;
    int smlp_hidden = 32;
    double eta_ms = 50.0;
  } repr;

  struct {
    double scale = 1.0;
  } net;

  struct {
    double margin = 0.1;
    int negatives = 5;
    double lr = 0.001;
    int batch = 2;
    int cache_batch = 100;
    double r_pos_m = 15.0;
    double r_neg_m = 75.0;
    int epochs = 30;
    int max_steps = 500;
    std::string optimizer = "sgd";
    double momentum = 0.9;
    int checkpoint_every = 0;
    int hard_negative_pool = 1000;
  } train;

  struct {
    double phi_m = 75.0;
    std::vector<double> phi_sweep; // empty = no sweep
    std::vector<int> recall_ns{1, 5, 10, 20};
  } eval;

  struct {
    std::string mode = "ann"; // ann | snn-static | snn-measured
    double static_rate = 0.15;
    int batch_volumes = 4; // recorded inputs for snn-measured
  } energy;

  struct {
    int places = 20;
    int traverses = 2;
    int width = 32;
    int height = 32;
    int events_per_place = 64;
    double noise_rate = 0.1;
    double interval_s = 0.25;
    double spacing_m = 100.0;
    std::string format = "binary"; // binary | csv
  } synth;
};

// All recognized keys in declaration order.
std::vector<std::string> option_keys();

// Throws config_error for unknown keys or unparsable values.
void set_option(Options& o, const std::string& key, const std::string& value);
std::string get_option(const Options& o, const std::string& key);

// Parses a key=value file ('#' comments, blank lines ignored).
Options load_options(const std::string& config_path);

// Full effective config, one sorted key=value per line.
std::string render_options(const Options& o);
void echo_options(const Options& o, const std::string& dir);

} // namespace sevpr::cli

#endif
