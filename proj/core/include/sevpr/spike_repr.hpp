#ifndef SEVPR_SPIKE_REPR_HPP
#define SEVPR_SPIKE_REPR_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "sevpr/event.hpp"
#include "sevpr/snn/graph.hpp"
#include "sevpr/snn/lif.hpp"
#include "sevpr/snn/params.hpp"
#include "sevpr/snn/tensor.hpp"
#include "sevpr/spike_tensor.hpp"

namespace sevpr::repr {

struct ReprFlags {
  bool empty = false;           // volume had no events
  bool degenerate_time = false; // all events share one timestamp
};

// Affine map of a timestamp onto [0, T-1]:
//   t* = (T-1) (t - t_first) / (t_last - t_first)
// A single-timestamp volume maps everything to 0 (degenerate, flagged by
// the callers).
double normalize_timestamp(std::uint64_t t, std::uint64_t t_first,
                           std::uint64_t t_last, int t_steps);

// Learnable temporal kernel: two fully connected layers (1 -> hidden ->
// t_steps), each followed by a single-step LIF from rest. One evaluation
// maps the scalar offset (t' - t*) to the kernel value read at output
// neuron t'. Shared across polarities.
class SmlpEncoder {
public:
  SmlpEncoder(int hidden, int t_steps, snn::LifParams lif = {});

  // Hands the weights to a registry under `prefix`.fc1/.fc2 so the encoder
  // trains and checkpoints with the rest of a model.
  void register_params(snn::ParamRegistry& reg, const std::string& prefix);

  int hidden() const { return hidden_; }
  int t_steps() const { return t_steps_; }
  const snn::LifParams& lif() const { return lif_; }

  struct EvalTape {
    double input = 0.0;
    int t_prime = 0;
    std::vector<double> u1; // pre-threshold hidden currents
    std::vector<double> s1; // hidden spikes (binary or smoothed)
    double u2 = 0.0;
  };

  // Kernel value in {0,1} (Spiking) or (0,1) (Smoothed).
  double eval(double offset, int t_prime, snn::Mode mode,
              EvalTape* tape = nullptr) const;
  bool kernel(double offset, int t_prime) const {
    return eval(offset, t_prime, snn::Mode::Spiking) != 0.0;
  }

  void backward(const EvalTape& tape, double g, snn::GradSink& gs) const;

  std::vector<double> w1, b1; // hidden x 1, hidden
  std::vector<double> w2, b2; // t_steps x hidden, t_steps

private:
  int hidden_, t_steps_;
  snn::LifParams lif_;
  std::size_t w1_off_ = 0, b1_off_ = 0, w2_off_ = 0, b2_off_ = 0;
  bool registered_ = false;
};

// Differentiable accumulation record for one volume's MCS build.
struct McsTape {
  std::vector<SmlpEncoder::EvalTape> evals;
  std::vector<std::size_t> cells; // flat tensor index per deposit
  snn::Shape4 shape;
};

// Event-to-spike encoding. Every event contributes the kernel value at each
// integer step t'; contributions accumulate per (t', polarity channel, y, x)
// and are binarized by count > 0. The binarization gradient is
// straight-through: Smoothed mode emits the raw accumulated sum instead.
snn::Tensor4 build_mcs_forward(const EventVolume& vol, const SmlpEncoder& enc,
                               int t_steps, snn::Mode mode, McsTape* tape,
                               ReprFlags* flags = nullptr,
                               snn::OpRecorder* rec = nullptr);

void mcs_backward(const McsTape& tape, const snn::Tensor4& g,
                  const SmlpEncoder& enc, snn::GradSink& gs);

SpikeTensor build_mcs_tensor(const EventVolume& vol, const SmlpEncoder& enc,
                             int t_steps, ReprFlags* flags = nullptr);

// Test seam: the spiking kernel replaced by an arbitrary predicate.
SpikeTensor build_mcs_tensor_with_kernel(
    const EventVolume& vol, int t_steps,
    const std::function<bool(double offset, int t_prime)>& kernel,
    ReprFlags* flags = nullptr);

// Per-pixel exponential recency map, channel 0/1 = positive/negative.
struct TsMap {
  int h = 0, w = 0;
  std::vector<double> v; // [c][y][x], values in [0,1]

  TsMap() = default;
  TsMap(int h_, int w_) : h(h_), w(w_), v(std::size_t(2) * h_ * w_, 0.0) {}
  double& at(int c, int y, int x) { return v[(std::size_t(c) * h + y) * w + x]; }
  double at(int c, int y, int x) const { return v[(std::size_t(c) * h + y) * w + x]; }
};

// exp(-(t_end - t_last)/eta); pixels that never fired stay at 0.
double ts_value(std::uint64_t t_end, std::uint64_t t_last, double eta_s);
TsMap build_ts_map(const EventVolume& vol, double eta_s);

// Independent Bernoulli draws per element, probability = map value.
// Deterministic: draw (t',c,y,x) is a pure function of (seed,c,y,x,t').
SpikeTensor sample_tss_tensor(const TsMap& map, int t_steps, std::uint64_t seed);

} // namespace sevpr::repr

#endif
