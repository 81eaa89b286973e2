#include "sevpr/dataset.hpp"

#include "sevpr/errors.hpp"
#include "sevpr/event_io.hpp"
#include "sevpr/rng.hpp"

namespace sevpr {

DatasetVolumes load_dataset_volumes(const std::vector<DatasetManifest>& ms,
                                    std::uint64_t seed) {
  if (ms.empty()) throw config_error("dataset has no manifests");
  DatasetVolumes out;
  out.resolution = ms[0].resolution;
  out.interval_s = ms[0].interval_s;
  for (std::size_t t = 0; t < ms.size(); ++t) {
    const auto& m = ms[t];
    if (!(m.resolution == out.resolution))
      throw config_error("dataset manifests disagree on resolution");
    EventStream stream = io::load_events(m);
    std::vector<GeoPose> poses;
    if (!m.pose_path.empty())
      poses = io::load_poses_csv(m.pose_path, m.coord_mode);
    auto vols = io::slice_volumes(stream, m.interval_s, poses);
    for (std::size_t i = 0; i < vols.size(); ++i) {
      DatasetVolumes::Entry e;
      e.traverse = int(t);
      e.index = int(i);
      e.vol = std::move(vols[i]);
      e.tss_seed = rng::hash(seed, {rng::label("tss.volume"), std::uint64_t(t),
                                    std::uint64_t(i)});
      if (t == 0)
        out.db.push_back(std::move(e));
      else
        out.queries.push_back(std::move(e));
    }
  }
  return out;
}

} // namespace sevpr
