#include "sevpr/snn/network.hpp"

#include "sevpr/errors.hpp"

namespace sevpr::snn {

Tensor4 Network::forward(const Tensor4& x, const FwdCtx& ctx, Tape* tape) const {
  if (!(x.shape() == in_shape_))
    throw config_error("network input shape mismatch");
  if (tape) {
    tape->nodes.clear();
    tape->nodes.resize(layers_.size());
  }
  Tensor4 cur = x;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    cur = layers_[i]->forward(cur, ctx, tape ? &tape->nodes[i] : nullptr);
  return cur;
}

Tensor4 Network::backward(const Tensor4& g_out, const Tape& tape,
                          GradSink& gs) const {
  if (tape.nodes.size() != layers_.size())
    throw config_error("network backward: tape does not match layer count");
  Tensor4 g = g_out;
  for (std::size_t i = layers_.size(); i-- > 0;)
    g = layers_[i]->backward(g, *tape.nodes[i], gs);
  return g;
}

void Network::describe(GraphInfo& g) const {
  for (const auto& l : layers_) l->describe(g);
}

void Network::update_stats(const Tape& tape, double momentum) {
  if (tape.nodes.size() != layers_.size())
    throw config_error("network update_stats: tape does not match layer count");
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i]->update_stats(*tape.nodes[i], momentum);
}

} // namespace sevpr::snn
