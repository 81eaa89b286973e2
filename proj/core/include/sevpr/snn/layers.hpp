#ifndef SEVPR_SNN_LAYERS_HPP
#define SEVPR_SNN_LAYERS_HPP

#include <memory>
#include <string>
#include <vector>

#include "sevpr/snn/graph.hpp"
#include "sevpr/snn/lif.hpp"
#include "sevpr/snn/params.hpp"
#include "sevpr/snn/tensor.hpp"

namespace sevpr::snn {

struct FwdCtx {
  Mode mode = Mode::Spiking;
  bool bn_training = false; // batch statistics vs running statistics
  OpRecorder* recorder = nullptr;
};

struct TapeNode {
  virtual ~TapeNode() = default;
};
using TapePtr = std::unique_ptr<TapeNode>;

// One forward pass worth of recorded values, one node per layer. A tape is
// consumed exactly once by the matching backward pass.
struct Tape {
  std::vector<TapePtr> nodes;
};

// Layers are immutable during forward/backward; per-pass state (membrane
// traces, batch statistics, argmax masks) lives on the tape, so concurrent
// passes over one network are safe.
class Layer {
public:
  Layer(std::string name, Shape4 in, Shape4 out)
      : name_(std::move(name)), in_shape_(in), out_shape_(out) {}
  virtual ~Layer() = default;

  const std::string& name() const { return name_; }
  Shape4 in_shape() const { return in_shape_; }
  Shape4 out_shape() const { return out_shape_; }

  // tape == nullptr runs inference without recording.
  virtual Tensor4 forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const = 0;
  virtual Tensor4 backward(const Tensor4& g_out, const TapeNode& tape,
                           GradSink& gs) const = 0;

  virtual void describe(GraphInfo& g) const { (void)g; }
  // Deterministic post-batch update of running statistics (BN only).
  virtual void update_stats(const TapeNode& tape, double momentum) {
    (void)tape;
    (void)momentum;
  }

protected:
  std::string name_;
  Shape4 in_shape_;
  Shape4 out_shape_;
};

// 2D convolution applied independently at every time step. No bias; a
// normalization layer always follows in this architecture.
class Conv2d : public Layer {
public:
  Conv2d(ParamRegistry& reg, std::string name, Shape4 in, int c_out, int kernel,
         int stride, int pad, bool spike_input);

  Tensor4 forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const override;
  Tensor4 backward(const Tensor4& g_out, const TapeNode& tape,
                   GradSink& gs) const override;
  void describe(GraphInfo& g) const override;

  std::vector<double>& weights() { return w_; }

private:
  int c_out_, k_, stride_, pad_;
  bool spike_input_;
  std::vector<double> w_; // [c_out][c_in][k][k]
  std::size_t grad_off_ = 0;
};

// Per-channel batch normalization; statistics are taken jointly over the
// time and spatial axes of the pass.
class BatchNorm : public Layer {
public:
  static constexpr double kEps = 1e-5;

  BatchNorm(ParamRegistry& reg, std::string name, Shape4 in);

  Tensor4 forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const override;
  Tensor4 backward(const Tensor4& g_out, const TapeNode& tape,
                   GradSink& gs) const override;
  void describe(GraphInfo& g) const override;
  void update_stats(const TapeNode& tape, double momentum) override;

  // Inference-mode affine view, used by the fold-into-conv check.
  void inference_affine(std::vector<double>& scale, std::vector<double>& shift) const;

  std::vector<double>& gamma() { return gamma_; }
  std::vector<double>& beta() { return beta_; }
  std::vector<double>& running_mean() { return run_mean_; }
  std::vector<double>& running_var() { return run_var_; }

private:
  std::vector<double> gamma_, beta_, run_mean_, run_var_;
  std::size_t gamma_off_ = 0, beta_off_ = 0;
};

// Stateful spiking nonlinearity over the time axis.
class Lif : public Layer {
public:
  Lif(std::string name, Shape4 in, LifParams p = {});

  Tensor4 forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const override;
  Tensor4 backward(const Tensor4& g_out, const TapeNode& tape,
                   GradSink& gs) const override;

  const LifParams& params() const { return p_; }

private:
  LifParams p_;
};

class MaxPool : public Layer {
public:
  MaxPool(std::string name, Shape4 in, int kernel, int stride, int pad);

  Tensor4 forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const override;
  Tensor4 backward(const Tensor4& g_out, const TapeNode& tape,
                   GradSink& gs) const override;

private:
  int k_, stride_, pad_;
};

// Fully connected layer on (T, C, 1, 1) tensors, applied per time step.
class Linear : public Layer {
public:
  Linear(ParamRegistry& reg, std::string name, Shape4 in, int out_features,
         bool spike_input, InitSpec w_init = {}, InitSpec b_init = InitSpec::zero());

  Tensor4 forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const override;
  Tensor4 backward(const Tensor4& g_out, const TapeNode& tape,
                   GradSink& gs) const override;
  void describe(GraphInfo& g) const override;

private:
  int out_, in_;
  bool spike_input_;
  std::vector<double> w_, b_; // w row-major [out][in]
  std::size_t w_off_ = 0, b_off_ = 0;
};

// Spike-element-wise residual block:
//   F(x) = BN2(Conv2(LIF1(BN1(Conv1(x)))))
//   out  = LIF2(F(x) + skip(x))
// skip is identity, or 1x1 conv + BN when the shape changes. The residual
// addition happens on pre-spike real values.
class SewBlock : public Layer {
public:
  SewBlock(ParamRegistry& reg, std::string name, Shape4 in, int c_out, int stride,
           LifParams lif = {});

  Tensor4 forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const override;
  Tensor4 backward(const Tensor4& g_out, const TapeNode& tape,
                   GradSink& gs) const override;
  void describe(GraphInfo& g) const override;
  void update_stats(const TapeNode& tape, double momentum) override;

private:
  std::unique_ptr<Conv2d> conv1_;
  std::unique_ptr<BatchNorm> bn1_;
  std::unique_ptr<Lif> lif1_;
  std::unique_ptr<Conv2d> conv2_;
  std::unique_ptr<BatchNorm> bn2_;
  std::unique_ptr<Conv2d> proj_conv_; // null for identity skip
  std::unique_ptr<BatchNorm> proj_bn_;
  std::unique_ptr<Lif> lif2_;
};

} // namespace sevpr::snn

#endif
