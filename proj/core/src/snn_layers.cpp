#include "sevpr/snn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "sevpr/errors.hpp"

namespace sevpr::snn {

namespace {

void check_shape(const Tensor4& x, Shape4 want, const std::string& who) {
  if (!(x.shape() == want))
    throw config_error(who + ": input shape mismatch");
}

int conv_out(int in, int k, int stride, int pad) {
  const int out = (in + 2 * pad - k) / stride + 1;
  if (out <= 0) throw config_error("layer output dimension is not positive");
  return out;
}

// Number of kernel offsets along one axis through which input position i
// feeds some output position. Separable, so 2D fan-out is the product.
std::vector<int> fanout_table(int in, int out, int k, int stride, int pad) {
  std::vector<int> tab(in, 0);
  for (int i = 0; i < in; ++i) {
    int n = 0;
    for (int kk = 0; kk < k; ++kk) {
      const int num = i + pad - kk;
      if (num < 0) continue;
      if (num % stride != 0) continue;
      if (num / stride >= out) continue;
      ++n;
    }
    tab[i] = n;
  }
  return tab;
}

} // namespace

// ---------------------------------------------------------------- Conv2d

struct ConvTape : TapeNode {
  Tensor4 x;
};

Conv2d::Conv2d(ParamRegistry& reg, std::string name, Shape4 in, int c_out,
               int kernel, int stride, int pad, bool spike_input)
    : Layer(std::move(name), in,
            Shape4{in.t, c_out, conv_out(in.h, kernel, stride, pad),
                   conv_out(in.w, kernel, stride, pad)}),
      c_out_(c_out), k_(kernel), stride_(stride), pad_(pad),
      spike_input_(spike_input),
      w_(std::size_t(c_out) * in.c * kernel * kernel, 0.0) {
  const double bound = std::sqrt(6.0 / (double(in.c) * kernel * kernel));
  reg.register_param(name_ + ".w", {c_out, in.c, kernel, kernel}, w_.data(),
                     w_.size(), true, InitSpec::uniform(bound));
  grad_off_ = reg.entries().back().grad_off;
}

Tensor4 Conv2d::forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const {
  check_shape(x, in_shape_, name_);
  const int Hi = x.h, Wi = x.w, Ci = in_shape_.c;
  const int Ho = out_shape_.h, Wo = out_shape_.w;
  Tensor4 out(x.t, c_out_, Ho, Wo);
  for (int t = 0; t < x.t; ++t) {
    for (int co = 0; co < c_out_; ++co) {
      const double* wco = &w_[std::size_t(co) * Ci * k_ * k_];
      for (int oy = 0; oy < Ho; ++oy) {
        const int iy0 = oy * stride_ - pad_;
        for (int ox = 0; ox < Wo; ++ox) {
          const int ix0 = ox * stride_ - pad_;
          double acc = 0.0;
          for (int ci = 0; ci < Ci; ++ci) {
            const double* xc = &x.v[x.index(t, ci, 0, 0)];
            const double* wk = wco + std::size_t(ci) * k_ * k_;
            for (int ky = 0; ky < k_; ++ky) {
              const int iy = iy0 + ky;
              if (iy < 0 || iy >= Hi) continue;
              const double* xr = xc + std::size_t(iy) * Wi;
              const double* wr = wk + std::size_t(ky) * k_;
              for (int kx = 0; kx < k_; ++kx) {
                const int ix = ix0 + kx;
                if (ix < 0 || ix >= Wi) continue;
                acc += wr[kx] * xr[ix];
              }
            }
          }
          out.at(t, co, oy, ox) = acc;
        }
      }
    }
  }
  if (ctx.recorder) {
    if (spike_input_) {
      // Event-driven cost: each nonzero input element costs its fan-out,
      // once per output channel.
      const auto fy = fanout_table(Hi, Ho, k_, stride_, pad_);
      const auto fx = fanout_table(Wi, Wo, k_, stride_, pad_);
      double taps = 0.0;
      for (int t = 0; t < x.t; ++t)
        for (int ci = 0; ci < Ci; ++ci)
          for (int y = 0; y < Hi; ++y) {
            const double* xr = &x.v[x.index(t, ci, y, 0)];
            for (int xI = 0; xI < Wi; ++xI)
              if (xr[xI] != 0.0) taps += double(fy[y]) * fx[xI];
          }
      ctx.recorder->add_ac(name_, taps * c_out_);
    } else {
      ctx.recorder->add_mac(name_, double(x.t) * Ho * Wo * c_out_ * k_ * k_ * Ci);
    }
  }
  if (tape) {
    auto node = std::make_unique<ConvTape>();
    node->x = x;
    *tape = std::move(node);
  }
  return out;
}

Tensor4 Conv2d::backward(const Tensor4& g_out, const TapeNode& tape,
                         GradSink& gs) const {
  const auto& tp = static_cast<const ConvTape&>(tape);
  const Tensor4& x = tp.x;
  const int Hi = x.h, Wi = x.w, Ci = in_shape_.c;
  const int Ho = out_shape_.h, Wo = out_shape_.w;
  Tensor4 gx(x.t, Ci, Hi, Wi);
  double* gw = &gs.g[grad_off_];
  for (int t = 0; t < x.t; ++t) {
    for (int co = 0; co < c_out_; ++co) {
      const double* wco = &w_[std::size_t(co) * Ci * k_ * k_];
      double* gwco = gw + std::size_t(co) * Ci * k_ * k_;
      for (int oy = 0; oy < Ho; ++oy) {
        const int iy0 = oy * stride_ - pad_;
        for (int ox = 0; ox < Wo; ++ox) {
          const int ix0 = ox * stride_ - pad_;
          const double g = g_out.at(t, co, oy, ox);
          if (g == 0.0) continue;
          for (int ci = 0; ci < Ci; ++ci) {
            const double* xc = &x.v[x.index(t, ci, 0, 0)];
            double* gxc = &gx.v[gx.index(t, ci, 0, 0)];
            const double* wk = wco + std::size_t(ci) * k_ * k_;
            double* gwk = gwco + std::size_t(ci) * k_ * k_;
            for (int ky = 0; ky < k_; ++ky) {
              const int iy = iy0 + ky;
              if (iy < 0 || iy >= Hi) continue;
              for (int kx = 0; kx < k_; ++kx) {
                const int ix = ix0 + kx;
                if (ix < 0 || ix >= Wi) continue;
                const std::size_t xi = std::size_t(iy) * Wi + ix;
                gwk[ky * k_ + kx] += g * xc[xi];
                gxc[xi] += g * wk[ky * k_ + kx];
              }
            }
          }
        }
      }
    }
  }
  return gx;
}

void Conv2d::describe(GraphInfo& g) const {
  LayerDesc d;
  d.name = name_;
  d.kind = LayerDesc::Kind::Conv;
  d.params = (long long)w_.size();
  d.synops_per_step =
      double(out_shape_.h) * out_shape_.w * c_out_ * k_ * k_ * in_shape_.c;
  d.t_steps = in_shape_.t;
  d.spike_input = spike_input_;
  g.layers.push_back(std::move(d));
}

// ------------------------------------------------------------- BatchNorm

struct BnTape : TapeNode {
  Tensor4 xhat;
  std::vector<double> inv_std;
  std::vector<double> batch_mean, batch_var; // empty for inference passes
  bool training = false;
};

BatchNorm::BatchNorm(ParamRegistry& reg, std::string name, Shape4 in)
    : Layer(std::move(name), in, in),
      gamma_(in.c, 1.0), beta_(in.c, 0.0), run_mean_(in.c, 0.0),
      run_var_(in.c, 1.0) {
  reg.register_param(name_ + ".gamma", {in.c}, gamma_.data(), gamma_.size(), true,
                     InitSpec::one());
  gamma_off_ = reg.entries().back().grad_off;
  reg.register_param(name_ + ".beta", {in.c}, beta_.data(), beta_.size(), true,
                     InitSpec::zero());
  beta_off_ = reg.entries().back().grad_off;
  reg.register_param(name_ + ".running_mean", {in.c}, run_mean_.data(),
                     run_mean_.size(), false, InitSpec::zero());
  reg.register_param(name_ + ".running_var", {in.c}, run_var_.data(),
                     run_var_.size(), false, InitSpec::one());
}

Tensor4 BatchNorm::forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const {
  check_shape(x, in_shape_, name_);
  const int C = in_shape_.c;
  const std::size_t plane = std::size_t(x.h) * x.w;
  const double n = double(x.t) * plane;
  std::vector<double> mean(C, 0.0), var(C, 0.0), inv_std(C, 0.0);

  if (ctx.bn_training) {
    for (int t = 0; t < x.t; ++t)
      for (int c = 0; c < C; ++c) {
        const double* p = &x.v[x.index(t, c, 0, 0)];
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) s += p[i];
        mean[c] += s;
      }
    for (int c = 0; c < C; ++c) mean[c] /= n;
    for (int t = 0; t < x.t; ++t)
      for (int c = 0; c < C; ++c) {
        const double* p = &x.v[x.index(t, c, 0, 0)];
        double s = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
          const double d = p[i] - mean[c];
          s += d * d;
        }
        var[c] += s;
      }
    for (int c = 0; c < C; ++c) var[c] /= n;
  } else {
    mean = run_mean_;
    var = run_var_;
  }
  for (int c = 0; c < C; ++c) inv_std[c] = 1.0 / std::sqrt(var[c] + kEps);

  Tensor4 out(x.t, C, x.h, x.w);
  Tensor4 xhat(x.t, C, x.h, x.w);
  for (int t = 0; t < x.t; ++t)
    for (int c = 0; c < C; ++c) {
      const double* p = &x.v[x.index(t, c, 0, 0)];
      double* q = &out.v[out.index(t, c, 0, 0)];
      double* xh = &xhat.v[xhat.index(t, c, 0, 0)];
      const double m = mean[c], is = inv_std[c], g = gamma_[c], b = beta_[c];
      for (std::size_t i = 0; i < plane; ++i) {
        xh[i] = (p[i] - m) * is;
        q[i] = g * xh[i] + b;
      }
    }

  if (tape) {
    auto node = std::make_unique<BnTape>();
    node->xhat = std::move(xhat);
    node->inv_std = std::move(inv_std);
    node->training = ctx.bn_training;
    if (ctx.bn_training) {
      node->batch_mean = std::move(mean);
      node->batch_var = std::move(var);
    }
    *tape = std::move(node);
  }
  return out;
}

Tensor4 BatchNorm::backward(const Tensor4& g_out, const TapeNode& tape,
                            GradSink& gs) const {
  const auto& tp = static_cast<const BnTape&>(tape);
  const int C = in_shape_.c;
  const std::size_t plane = std::size_t(g_out.h) * g_out.w;
  const double n = double(g_out.t) * plane;
  double* dgamma = &gs.g[gamma_off_];
  double* dbeta = &gs.g[beta_off_];

  std::vector<double> sum_g(C, 0.0), sum_gx(C, 0.0);
  for (int t = 0; t < g_out.t; ++t)
    for (int c = 0; c < C; ++c) {
      const double* g = &g_out.v[g_out.index(t, c, 0, 0)];
      const double* xh = &tp.xhat.v[tp.xhat.index(t, c, 0, 0)];
      double a = 0.0, b = 0.0;
      for (std::size_t i = 0; i < plane; ++i) {
        a += g[i];
        b += g[i] * xh[i];
      }
      sum_g[c] += a;
      sum_gx[c] += b;
    }
  for (int c = 0; c < C; ++c) {
    dgamma[c] += sum_gx[c];
    dbeta[c] += sum_g[c];
  }

  Tensor4 gx(g_out.t, C, g_out.h, g_out.w);
  for (int t = 0; t < g_out.t; ++t)
    for (int c = 0; c < C; ++c) {
      const double* g = &g_out.v[g_out.index(t, c, 0, 0)];
      const double* xh = &tp.xhat.v[tp.xhat.index(t, c, 0, 0)];
      double* q = &gx.v[gx.index(t, c, 0, 0)];
      const double scale = gamma_[c] * tp.inv_std[c];
      if (tp.training) {
        const double mg = sum_g[c] / n, mgx = sum_gx[c] / n;
        for (std::size_t i = 0; i < plane; ++i)
          q[i] = scale * (g[i] - mg - xh[i] * mgx);
      } else {
        for (std::size_t i = 0; i < plane; ++i) q[i] = scale * g[i];
      }
    }
  return gx;
}

void BatchNorm::describe(GraphInfo& g) const { g.other_params += 2LL * in_shape_.c; }

void BatchNorm::update_stats(const TapeNode& tape, double momentum) {
  const auto& tp = static_cast<const BnTape&>(tape);
  if (!tp.training) return;
  for (int c = 0; c < in_shape_.c; ++c) {
    run_mean_[c] = (1.0 - momentum) * run_mean_[c] + momentum * tp.batch_mean[c];
    run_var_[c] = (1.0 - momentum) * run_var_[c] + momentum * tp.batch_var[c];
  }
}

void BatchNorm::inference_affine(std::vector<double>& scale,
                                 std::vector<double>& shift) const {
  scale.resize(gamma_.size());
  shift.resize(gamma_.size());
  for (std::size_t c = 0; c < gamma_.size(); ++c) {
    scale[c] = gamma_[c] / std::sqrt(run_var_[c] + kEps);
    shift[c] = beta_[c] - scale[c] * run_mean_[c];
  }
}

// ------------------------------------------------------------------- Lif

struct LifTape : TapeNode {
  Tensor4 u;                     // membrane at the spike decision
  std::vector<std::uint8_t> s;   // hard spike decisions, size T*C*H*W
};

Lif::Lif(std::string name, Shape4 in, LifParams p)
    : Layer(std::move(name), in, in), p_(p) {}

Tensor4 Lif::forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const {
  check_shape(x, in_shape_, name_);
  if (!x.all_finite())
    throw numeric_error(name_ + ": non-finite input current");
  const std::size_t n = std::size_t(x.c) * x.h * x.w;
  Tensor4 out(x.t, x.c, x.h, x.w);
  std::unique_ptr<LifTape> node;
  if (tape) {
    node = std::make_unique<LifTape>();
    node->u = Tensor4(x.t, x.c, x.h, x.w);
    node->s.assign(std::size_t(x.t) * n, 0);
  }

  std::vector<double> u(n, 0.0);
  std::vector<std::uint8_t> s_prev(n, 0);
  double spike_count = 0.0;
  for (int t = 0; t < x.t; ++t) {
    const double* xt = &x.v[std::size_t(t) * n];
    double* ot = &out.v[std::size_t(t) * n];
    double* ut = node ? &node->u.v[std::size_t(t) * n] : nullptr;
    std::uint8_t* st = node ? &node->s[std::size_t(t) * n] : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = p_.decay * u[i] * (1.0 - double(s_prev[i])) + xt[i];
      const bool hard = u[i] >= p_.v_threshold;
      if (node) {
        st[i] = hard ? 1 : 0;
        ut[i] = u[i];
      }
      if (ctx.mode == Mode::Spiking)
        ot[i] = hard ? 1.0 : 0.0;
      else
        ot[i] = surrogate_smooth(u[i] - p_.v_threshold, p_.surrogate_alpha);
      s_prev[i] = hard ? 1 : 0;
      spike_count += hard ? 1.0 : 0.0;
    }
  }
  if (ctx.recorder)
    ctx.recorder->add_lif(name_, spike_count, double(x.t) * n);
  if (tape) *tape = std::move(node);
  return out;
}

Tensor4 Lif::backward(const Tensor4& g_out, const TapeNode& tape,
                      GradSink& gs) const {
  (void)gs;
  const auto& tp = static_cast<const LifTape&>(tape);
  const std::size_t n = std::size_t(g_out.c) * g_out.h * g_out.w;
  Tensor4 gx(g_out.t, g_out.c, g_out.h, g_out.w);
  std::vector<double> carry(n, 0.0); // raw dL/du_{t+1}
  for (int t = g_out.t - 1; t >= 0; --t) {
    const double* g = &g_out.v[std::size_t(t) * n];
    const double* u = &tp.u.v[std::size_t(t) * n];
    const std::uint8_t* s = &tp.s[std::size_t(t) * n];
    double* q = &gx.v[std::size_t(t) * n];
    for (std::size_t i = 0; i < n; ++i) {
      // u_{t+1} = decay * u_t * (1 - s_t) + I_{t+1}: the leak gradient
      // arriving from step t+1 is gated by this step's own spike.
      const double du = g[i] * surrogate_deriv(u[i] - p_.v_threshold,
                                               p_.surrogate_alpha) +
                        carry[i] * p_.decay * (1.0 - double(s[i]));
      q[i] = du;
      carry[i] = du;
    }
  }
  return gx;
}

// --------------------------------------------------------------- MaxPool

struct PoolTape : TapeNode {
  std::vector<std::int32_t> argmax; // flat input index per output element
};

MaxPool::MaxPool(std::string name, Shape4 in, int kernel, int stride, int pad)
    : Layer(std::move(name), in,
            Shape4{in.t, in.c, conv_out(in.h, kernel, stride, pad),
                   conv_out(in.w, kernel, stride, pad)}),
      k_(kernel), stride_(stride), pad_(pad) {}

Tensor4 MaxPool::forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const {
  (void)ctx;
  check_shape(x, in_shape_, name_);
  const int Ho = out_shape_.h, Wo = out_shape_.w;
  Tensor4 out(x.t, x.c, Ho, Wo);
  auto node = tape ? std::make_unique<PoolTape>() : nullptr;
  if (node) node->argmax.assign(out.size(), -1);
  for (int t = 0; t < x.t; ++t)
    for (int c = 0; c < x.c; ++c)
      for (int oy = 0; oy < Ho; ++oy)
        for (int ox = 0; ox < Wo; ++ox) {
          double best = 0.0;
          std::int32_t arg = -1;
          for (int ky = 0; ky < k_; ++ky) {
            const int iy = oy * stride_ - pad_ + ky;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < k_; ++kx) {
              const int ix = ox * stride_ - pad_ + kx;
              if (ix < 0 || ix >= x.w) continue;
              const double v = x.at(t, c, iy, ix);
              if (arg < 0 || v > best) {
                best = v;
                arg = std::int32_t(x.index(t, c, iy, ix));
              }
            }
          }
          out.at(t, c, oy, ox) = best;
          if (node) node->argmax[out.index(t, c, oy, ox)] = arg;
        }
  if (tape) *tape = std::move(node);
  return out;
}

Tensor4 MaxPool::backward(const Tensor4& g_out, const TapeNode& tape,
                          GradSink& gs) const {
  (void)gs;
  const auto& tp = static_cast<const PoolTape&>(tape);
  Tensor4 gx(in_shape_);
  for (std::size_t i = 0; i < g_out.size(); ++i)
    if (tp.argmax[i] >= 0) gx.v[std::size_t(tp.argmax[i])] += g_out.v[i];
  return gx;
}

// ---------------------------------------------------------------- Linear

struct LinearTape : TapeNode {
  Tensor4 x;
};

Linear::Linear(ParamRegistry& reg, std::string name, Shape4 in, int out_features,
               bool spike_input, InitSpec w_init, InitSpec b_init)
    : Layer(std::move(name), in, Shape4{in.t, out_features, 1, 1}),
      out_(out_features), in_(in.c), spike_input_(spike_input),
      w_(std::size_t(out_features) * in.c, 0.0), b_(out_features, 0.0) {
  if (in.h != 1 || in.w != 1)
    throw config_error(name_ + ": Linear expects (T,C,1,1) input");
  if (w_init.kind == InitSpec::Kind::Zero && w_init.bound == 0.0)
    w_init = InitSpec::uniform(std::sqrt(6.0 / in.c));
  reg.register_param(name_ + ".w", {out_, in_}, w_.data(), w_.size(), true, w_init);
  w_off_ = reg.entries().back().grad_off;
  reg.register_param(name_ + ".b", {out_}, b_.data(), b_.size(), true, b_init);
  b_off_ = reg.entries().back().grad_off;
}

Tensor4 Linear::forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const {
  check_shape(x, in_shape_, name_);
  Tensor4 out(x.t, out_, 1, 1);
  for (int t = 0; t < x.t; ++t) {
    const double* xt = &x.v[std::size_t(t) * in_];
    double* ot = &out.v[std::size_t(t) * out_];
    for (int o = 0; o < out_; ++o) {
      const double* wr = &w_[std::size_t(o) * in_];
      double acc = b_[o];
      for (int i = 0; i < in_; ++i) acc += wr[i] * xt[i];
      ot[o] = acc;
    }
  }
  if (ctx.recorder) {
    if (spike_input_) {
      double nnz = 0.0;
      for (double v : x.v) nnz += (v != 0.0) ? 1.0 : 0.0;
      ctx.recorder->add_ac(name_, nnz * out_);
    } else {
      ctx.recorder->add_mac(name_, double(x.t) * in_ * out_);
    }
  }
  if (tape) {
    auto node = std::make_unique<LinearTape>();
    node->x = x;
    *tape = std::move(node);
  }
  return out;
}

Tensor4 Linear::backward(const Tensor4& g_out, const TapeNode& tape,
                         GradSink& gs) const {
  const auto& tp = static_cast<const LinearTape&>(tape);
  Tensor4 gx(g_out.t, in_, 1, 1);
  double* gw = &gs.g[w_off_];
  double* gb = &gs.g[b_off_];
  for (int t = 0; t < g_out.t; ++t) {
    const double* g = &g_out.v[std::size_t(t) * out_];
    const double* xt = &tp.x.v[std::size_t(t) * in_];
    double* q = &gx.v[std::size_t(t) * in_];
    for (int o = 0; o < out_; ++o) {
      const double go = g[o];
      if (go == 0.0) continue;
      gb[o] += go;
      const double* wr = &w_[std::size_t(o) * in_];
      double* gwr = gw + std::size_t(o) * in_;
      for (int i = 0; i < in_; ++i) {
        gwr[i] += go * xt[i];
        q[i] += go * wr[i];
      }
    }
  }
  return gx;
}

void Linear::describe(GraphInfo& g) const {
  LayerDesc d;
  d.name = name_;
  d.kind = LayerDesc::Kind::Fc;
  d.params = (long long)(w_.size() + b_.size());
  d.synops_per_step = double(in_) * out_;
  d.t_steps = in_shape_.t;
  d.spike_input = spike_input_;
  g.layers.push_back(std::move(d));
}

// -------------------------------------------------------------- SewBlock

struct SewTape : TapeNode {
  TapePtr c1, b1, l1, c2, b2, pc, pb, l2;
};

SewBlock::SewBlock(ParamRegistry& reg, std::string name, Shape4 in, int c_out,
                   int stride, LifParams lif)
    : Layer(name, in,
            Shape4{in.t, c_out, conv_out(in.h, 3, stride, 1),
                   conv_out(in.w, 3, stride, 1)}) {
  conv1_ = std::make_unique<Conv2d>(reg, name + ".conv1", in, c_out, 3, stride, 1,
                                    true);
  bn1_ = std::make_unique<BatchNorm>(reg, name + ".bn1", conv1_->out_shape());
  lif1_ = std::make_unique<Lif>(name + ".lif1", bn1_->out_shape(), lif);
  conv2_ = std::make_unique<Conv2d>(reg, name + ".conv2", lif1_->out_shape(), c_out,
                                    3, 1, 1, true);
  bn2_ = std::make_unique<BatchNorm>(reg, name + ".bn2", conv2_->out_shape());
  if (stride != 1 || in.c != c_out) {
    proj_conv_ = std::make_unique<Conv2d>(reg, name + ".proj", in, c_out, 1, stride,
                                          0, true);
    proj_bn_ = std::make_unique<BatchNorm>(reg, name + ".proj_bn",
                                           proj_conv_->out_shape());
  }
  lif2_ = std::make_unique<Lif>(name + ".lif2", bn2_->out_shape(), lif);
}

Tensor4 SewBlock::forward(const Tensor4& x, const FwdCtx& ctx, TapePtr* tape) const {
  auto node = tape ? std::make_unique<SewTape>() : nullptr;

  Tensor4 f = conv1_->forward(x, ctx, node ? &node->c1 : nullptr);
  f = bn1_->forward(f, ctx, node ? &node->b1 : nullptr);
  f = lif1_->forward(f, ctx, node ? &node->l1 : nullptr);
  f = conv2_->forward(f, ctx, node ? &node->c2 : nullptr);
  f = bn2_->forward(f, ctx, node ? &node->b2 : nullptr);

  if (proj_conv_) {
    Tensor4 skip = proj_conv_->forward(x, ctx, node ? &node->pc : nullptr);
    skip = proj_bn_->forward(skip, ctx, node ? &node->pb : nullptr);
    for (std::size_t i = 0; i < f.size(); ++i) f.v[i] += skip.v[i];
  } else {
    for (std::size_t i = 0; i < f.size(); ++i) f.v[i] += x.v[i];
  }
  Tensor4 out = lif2_->forward(f, ctx, node ? &node->l2 : nullptr);
  if (tape) *tape = std::move(node);
  return out;
}

Tensor4 SewBlock::backward(const Tensor4& g_out, const TapeNode& tape,
                           GradSink& gs) const {
  const auto& tp = static_cast<const SewTape&>(tape);
  Tensor4 g_sum = lif2_->backward(g_out, *tp.l2, gs);

  Tensor4 g = bn2_->backward(g_sum, *tp.b2, gs);
  g = conv2_->backward(g, *tp.c2, gs);
  g = lif1_->backward(g, *tp.l1, gs);
  g = bn1_->backward(g, *tp.b1, gs);
  Tensor4 gx = conv1_->backward(g, *tp.c1, gs);

  if (proj_conv_) {
    Tensor4 gp = proj_bn_->backward(g_sum, *tp.pb, gs);
    gp = proj_conv_->backward(gp, *tp.pc, gs);
    for (std::size_t i = 0; i < gx.size(); ++i) gx.v[i] += gp.v[i];
  } else {
    for (std::size_t i = 0; i < gx.size(); ++i) gx.v[i] += g_sum.v[i];
  }
  return gx;
}

void SewBlock::describe(GraphInfo& g) const {
  conv1_->describe(g);
  bn1_->describe(g);
  conv2_->describe(g);
  bn2_->describe(g);
  if (proj_conv_) {
    proj_conv_->describe(g);
    proj_bn_->describe(g);
  }
}

void SewBlock::update_stats(const TapeNode& tape, double momentum) {
  const auto& tp = static_cast<const SewTape&>(tape);
  bn1_->update_stats(*tp.b1, momentum);
  bn2_->update_stats(*tp.b2, momentum);
  if (proj_bn_) proj_bn_->update_stats(*tp.pb, momentum);
}

} // namespace sevpr::snn
