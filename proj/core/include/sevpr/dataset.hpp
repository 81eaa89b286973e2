#ifndef SEVPR_DATASET_HPP
#define SEVPR_DATASET_HPP

#include <cstdint>
#include <vector>

#include "sevpr/event.hpp"

namespace sevpr {

// Volumes of a multi-traverse dataset with the roles used throughout:
// traverse 0 is the database, later traverses are queries. Every volume
// carries the seed its stochastic representation sampling is keyed by, so
// any consumer reproduces identical tensors.
struct DatasetVolumes {
  struct Entry {
    int traverse = 0;
    int index = 0; // volume index within the traverse
    EventVolume vol;
    std::uint64_t tss_seed = 0;
  };
  std::vector<Entry> db;
  std::vector<Entry> queries;
  Resolution resolution;
  double interval_s = 0.25;
};

DatasetVolumes load_dataset_volumes(const std::vector<DatasetManifest>& ms,
                                    std::uint64_t seed);

} // namespace sevpr

#endif
