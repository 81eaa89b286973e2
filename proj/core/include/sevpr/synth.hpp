#ifndef SEVPR_SYNTH_HPP
#define SEVPR_SYNTH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sevpr/event.hpp"

namespace sevpr::io {

// Desk-scale synthetic dataset: n_places distinct "places" on a 1D planar
// track, visited once per traverse. Every place owns a seed-derived set of
// structure pixels; each traverse fires one event per structure pixel with
// small per-traverse timing jitter, plus uniform noise events. Place spacing
// keeps same-index poses within and cross-index poses beyond the 75 m
// evaluation radius.
struct SynthConfig {
  int n_places = 20;
  int traverses = 2;
  Resolution resolution{32, 32};
  int events_per_place = 64;
  double noise_rate = 0.1; // noise events per structure event
  std::uint64_t seed = 1;
  double interval_s = 0.25;
  double spacing_m = 100.0;
  bool csv_events = false; // default binary
};

// Writes traverse_<k>.events.{bin|csv}, traverse_<k>.poses.csv,
// traverse_<k>.manifest and dataset.txt under out_dir. Bit-deterministic for
// a fixed config. Returns the per-traverse manifests in traverse order.
std::vector<DatasetManifest> synth_dataset(const SynthConfig& cfg,
                                           const std::string& out_dir);

// Convenience for loading what synth_dataset (or a user) laid out: reads
// dataset.txt (one manifest path per line, relative to the list file).
std::vector<DatasetManifest> load_dataset_list(const std::string& list_path);

} // namespace sevpr::io

#endif
