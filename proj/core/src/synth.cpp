#include "sevpr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "sevpr/errors.hpp"
#include "sevpr/event_io.hpp"
#include "sevpr/rng.hpp"

namespace sevpr::io {

namespace fs = std::filesystem;

namespace {

void validate(const SynthConfig& cfg) {
  if (cfg.n_places < 2) throw config_error("synth: n_places must be >= 2");
  if (cfg.traverses < 2) throw config_error("synth: traverses must be >= 2");
  if (cfg.events_per_place < 1)
    throw config_error("synth: events_per_place must be >= 1");
  const long long pixels =
      (long long)cfg.resolution.width * cfg.resolution.height;
  if (pixels < cfg.events_per_place)
    throw config_error("synth: resolution too small to host " +
                       std::to_string(cfg.events_per_place) + " distinct pixels");
  if (cfg.noise_rate < 0) throw config_error("synth: noise_rate must be >= 0");
  if (cfg.interval_s <= 0) throw config_error("synth: interval_s must be > 0");
  if (cfg.spacing_m < 100.0)
    throw config_error("synth: spacing_m must be >= 100 to keep places "
                       "unambiguous at the 75 m radius");
}

// Distinct structure pixels for one place: partial Fisher-Yates keyed by
// (seed, place).
std::vector<int> structure_pixels(const SynthConfig& cfg, int place) {
  const int total = cfg.resolution.width * cfg.resolution.height;
  std::vector<int> idx(total);
  for (int i = 0; i < total; ++i) idx[i] = i;
  rng::Stream st(cfg.seed, rng::hash(0, {rng::label("synth.pixels"),
                                         std::uint64_t(place)}));
  std::vector<int> out(cfg.events_per_place);
  for (int j = 0; j < cfg.events_per_place; ++j) {
    const int pick = j + int(st.below(std::uint64_t(total - j)));
    std::swap(idx[j], idx[pick]);
    out[j] = idx[j];
  }
  return out;
}

} // namespace

std::vector<DatasetManifest> synth_dataset(const SynthConfig& cfg,
                                           const std::string& out_dir) {
  validate(cfg);
  fs::create_directories(out_dir);

  const auto interval_us = std::uint64_t(std::llround(cfg.interval_s * 1e6));
  const int n_noise =
      int(std::llround(cfg.noise_rate * cfg.events_per_place));

  // Per-place data shared by all traverses.
  std::vector<std::vector<int>> pixels(cfg.n_places);
  for (int k = 0; k < cfg.n_places; ++k) pixels[k] = structure_pixels(cfg, k);

  std::vector<DatasetManifest> manifests;
  for (int r = 0; r < cfg.traverses; ++r) {
    EventStream stream;
    stream.resolution = cfg.resolution;
    std::vector<GeoPose> poses;

    for (int k = 0; k < cfg.n_places; ++k) {
      const std::uint64_t w_start = std::uint64_t(k) * interval_us;
      for (int j = 0; j < cfg.events_per_place; ++j) {
        const int pix = pixels[k][j];
        Event e;
        e.x = std::uint16_t(pix % cfg.resolution.width);
        e.y = std::uint16_t(pix / cfg.resolution.width);
        e.p = rng::hash(cfg.seed, {rng::label("synth.pol"), std::uint64_t(k),
                                   std::uint64_t(j)}) & 1 ? 1 : -1;
        if (k == 0 && j == 0) {
          // Pin each traverse's first event to t=0 so volume slicing aligns
          // windows with places for every traverse.
          e.t = w_start;
        } else {
          const double frac =
              rng::uniform(cfg.seed, {rng::label("synth.frac"), std::uint64_t(k),
                                      std::uint64_t(j)}, 0.05, 0.95);
          const double jitter =
              rng::uniform(cfg.seed, {rng::label("synth.jitter"), std::uint64_t(k),
                                      std::uint64_t(j), std::uint64_t(r)},
                           -0.02, 0.02);
          double f = std::clamp(frac + jitter, 0.0, 0.999);
          e.t = w_start + std::uint64_t(f * double(interval_us));
        }
        stream.events.push_back(e);
      }
      for (int i = 0; i < n_noise; ++i) {
        rng::Stream st(cfg.seed, rng::hash(0, {rng::label("synth.noise"),
                                               std::uint64_t(r), std::uint64_t(k),
                                               std::uint64_t(i)}));
        Event e;
        e.x = std::uint16_t(st.below(std::uint64_t(cfg.resolution.width)));
        e.y = std::uint16_t(st.below(std::uint64_t(cfg.resolution.height)));
        e.p = (st.next() & 1) ? 1 : -1;
        e.t = w_start + st.below(interval_us);
        stream.events.push_back(e);
      }

      GeoPose pose;
      pose.mode = CoordMode::Planar;
      pose.t = w_start + interval_us / 2;
      pose.a = double(k) * cfg.spacing_m +
               rng::uniform(cfg.seed, {rng::label("synth.pose_e"),
                                       std::uint64_t(r), std::uint64_t(k)},
                            -5.0, 5.0);
      pose.b = rng::uniform(cfg.seed, {rng::label("synth.pose_n"),
                                       std::uint64_t(r), std::uint64_t(k)},
                            -5.0, 5.0);
      poses.push_back(pose);
    }

    std::stable_sort(stream.events.begin(), stream.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });

    const std::string stem = "traverse_" + std::to_string(r);
    DatasetManifest m;
    m.name = stem;
    m.resolution = cfg.resolution;
    m.interval_s = cfg.interval_s;
    m.coord_mode = CoordMode::Planar;
    m.event_format = cfg.csv_events ? DatasetManifest::EventFormat::Csv
                                    : DatasetManifest::EventFormat::Binary;
    m.event_path = (fs::path(out_dir) /
                    (stem + (cfg.csv_events ? ".events.csv" : ".events.bin")))
                       .string();
    m.pose_path = (fs::path(out_dir) / (stem + ".poses.csv")).string();
    if (cfg.csv_events)
      save_events_csv(stream, m.event_path);
    else
      save_events_bin(stream, m.event_path);
    save_poses_csv(poses, m.pose_path);
    save_manifest(m, (fs::path(out_dir) / (stem + ".manifest")).string());
    manifests.push_back(m);
  }

  std::ofstream list((fs::path(out_dir) / "dataset.txt").string(), std::ios::trunc);
  if (!list) throw io_error("cannot write dataset list in " + out_dir);
  for (int r = 0; r < cfg.traverses; ++r)
    list << "traverse_" << r << ".manifest\n";
  return manifests;
}

std::vector<DatasetManifest> load_dataset_list(const std::string& list_path) {
  std::ifstream in(list_path);
  if (!in) throw io_error("cannot open dataset list: " + list_path);
  fs::path base = fs::path(list_path).parent_path();
  std::vector<DatasetManifest> out;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    out.push_back(load_manifest((base / line).string()));
  }
  if (out.empty()) throw io_error(list_path + ": no manifests listed");
  return out;
}

} // namespace sevpr::io
