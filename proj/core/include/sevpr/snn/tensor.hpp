#ifndef SEVPR_SNN_TENSOR_HPP
#define SEVPR_SNN_TENSOR_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "sevpr/spike_tensor.hpp"

namespace sevpr::snn {

struct Shape4 {
  int t = 0, c = 0, h = 0, w = 0;
  bool operator==(const Shape4&) const = default;
  std::size_t count() const { return std::size_t(t) * c * h * w; }
};

// Dense real tensor indexed [t][c][y][x]. The engine runs in double
// precision so finite-difference oracles are meaningful; checkpoints narrow
// to f32.
struct Tensor4 {
  int t = 0, c = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor4() = default;
  Tensor4(int t_, int c_, int h_, int w_)
      : t(t_), c(c_), h(h_), w(w_), v(std::size_t(t_) * c_ * h_ * w_, 0.0) {}
  explicit Tensor4(Shape4 s) : Tensor4(s.t, s.c, s.h, s.w) {}

  Shape4 shape() const { return {t, c, h, w}; }
  std::size_t size() const { return v.size(); }
  void zero() { std::fill(v.begin(), v.end(), 0.0); }

  std::size_t index(int ti, int ci, int yi, int xi) const {
    return ((std::size_t(ti) * c + ci) * h + yi) * w + xi;
  }
  double& at(int ti, int ci, int yi, int xi) { return v[index(ti, ci, yi, xi)]; }
  double at(int ti, int ci, int yi, int xi) const { return v[index(ti, ci, yi, xi)]; }

  bool all_finite() const {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  }

  bool is_binary() const {
    for (double x : v)
      if (x != 0.0 && x != 1.0) return false;
    return true;
  }

  static Tensor4 from_spikes(const SpikeTensor& s) {
    Tensor4 out(s.t, s.c, s.h, s.w);
    for (std::size_t i = 0; i < s.data.size(); ++i) out.v[i] = double(s.data[i]);
    return out;
  }

  SpikeTensor to_spikes() const {
    SpikeTensor out(t, c, h, w);
    for (std::size_t i = 0; i < v.size(); ++i) out.data[i] = v[i] != 0.0 ? 1 : 0;
    return out;
  }
};

} // namespace sevpr::snn

#endif
