#ifndef SEVPR_SNN_NETWORK_HPP
#define SEVPR_SNN_NETWORK_HPP

#include <memory>
#include <string>
#include <vector>

#include "sevpr/snn/layers.hpp"

namespace sevpr::snn {

// A plain sequential chain of layers with shape checking at build time.
class Network {
public:
  Network() = default;
  explicit Network(Shape4 input) : in_shape_(input), out_shape_(input) {}

  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  Network(Network&&) = default;
  Network& operator=(Network&&) = default;

  void set_input(Shape4 s) {
    in_shape_ = s;
    out_shape_ = s;
  }

  // Appends a layer built by fn(current output shape).
  template <typename LayerT, typename... Args>
  LayerT* add(Args&&... args) {
    auto layer = std::make_unique<LayerT>(std::forward<Args>(args)...);
    LayerT* raw = layer.get();
    layers_.push_back(std::move(layer));
    out_shape_ = raw->out_shape();
    return raw;
  }

  Shape4 in_shape() const { return in_shape_; }
  Shape4 out_shape() const { return out_shape_; }
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }

  Tensor4 forward(const Tensor4& x, const FwdCtx& ctx, Tape* tape) const;
  // Walks layers in reverse, consuming the tape; returns gradient w.r.t. the
  // network input and accumulates parameter gradients into gs.
  Tensor4 backward(const Tensor4& g_out, const Tape& tape, GradSink& gs) const;

  void describe(GraphInfo& g) const;
  void update_stats(const Tape& tape, double momentum);

private:
  Shape4 in_shape_{};
  Shape4 out_shape_{};
  std::vector<std::unique_ptr<Layer>> layers_;
};

} // namespace sevpr::snn

#endif
