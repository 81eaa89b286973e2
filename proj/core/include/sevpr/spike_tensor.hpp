#ifndef SEVPR_SPIKE_TENSOR_HPP
#define SEVPR_SPIKE_TENSOR_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace sevpr {

// Binary T x C x H x W tensor, the universal activation format of the
// network. Stored one byte per element; the SPK1 file format bit-packs.
struct SpikeTensor {
  int t = 0, c = 0, h = 0, w = 0;
  std::vector<std::uint8_t> data; // values 0/1, index [t][c][y][x]

  SpikeTensor() = default;
  SpikeTensor(int t_, int c_, int h_, int w_)
      : t(t_), c(c_), h(h_), w(w_),
        data(std::size_t(t_) * c_ * h_ * w_, 0) {}

  std::size_t size() const { return data.size(); }

  std::size_t index(int ti, int ci, int yi, int xi) const {
    return ((std::size_t(ti) * c + ci) * h + yi) * w + xi;
  }
  std::uint8_t& at(int ti, int ci, int yi, int xi) {
    return data[index(ti, ci, yi, xi)];
  }
  std::uint8_t at(int ti, int ci, int yi, int xi) const {
    return data[index(ti, ci, yi, xi)];
  }

  bool same_shape(const SpikeTensor& o) const {
    return t == o.t && c == o.c && h == o.h && w == o.w;
  }

  // Throws numeric_error unless dims are positive and every element is 0/1.
  void validate(const char* what) const;

  std::size_t count_ones() const;
};

// "SPK1" dump: magic, four u32 LE dims (T,C,H,W), then the payload bit-packed
// in flat index order, LSB first within each byte.
void save_spike_tensor(const SpikeTensor& s, const std::string& path);
SpikeTensor load_spike_tensor(const std::string& path);

} // namespace sevpr

#endif
