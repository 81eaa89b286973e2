#ifndef SEVPR_SNN_CHECKPOINT_HPP
#define SEVPR_SNN_CHECKPOINT_HPP

#include <string>
#include <vector>

#include "sevpr/snn/params.hpp"

namespace sevpr::snn {

struct NamedTensorF32 {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;
};

// "SEW1" container: magic, a manifest of section names (may be empty), then
// named f32 tensors. Layout, all little-endian:
//   "SEW1"
//   u32 manifest_count, then per section: u32 len, bytes
//   u32 tensor_count,   then per tensor:  u32 name_len, name,
//                       u32 ndim, u32 dims[ndim], f32 data[prod(dims)]
// Round-trips are bit-exact.
struct Checkpoint {
  std::vector<std::string> manifest;
  std::vector<NamedTensorF32> tensors;
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Registry snapshot/restore. Parameters narrow to f32 on save. restore
// requires the checkpoint and registry to agree on names and shapes.
Checkpoint snapshot(const ParamRegistry& reg, std::vector<std::string> manifest);
void restore(const Checkpoint& c, const ParamRegistry& reg);

} // namespace sevpr::snn

#endif
