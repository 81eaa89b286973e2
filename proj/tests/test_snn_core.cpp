#include <doctest.h>

#include <cmath>

#include "sevpr/errors.hpp"
#include "sevpr/parallel.hpp"
#include "sevpr/rng.hpp"
#include "sevpr/snn/checkpoint.hpp"
#include "sevpr/snn/network.hpp"
#include "testutil.hpp"

using namespace sevpr;
using snn::FwdCtx;
using snn::Mode;
using snn::Shape4;
using snn::Tensor4;

namespace {

Tensor4 constant_input(Shape4 s, double v) {
  Tensor4 x(s);
  std::fill(x.v.begin(), x.v.end(), v);
  return x;
}

} // namespace

TEST_CASE("lif: threshold exactly reached spikes at the first step and resets") {
  snn::Lif lif("lif", {4, 1, 1, 1});
  Tensor4 x = constant_input({4, 1, 1, 1}, 0.0);
  x.at(0, 0, 0, 0) = 1.0;
  FwdCtx ctx{Mode::Spiking, false, nullptr};
  snn::TapePtr tape;
  Tensor4 out = lif.forward(x, ctx, &tape);
  CHECK(out.at(0, 0, 0, 0) == 1.0);
  CHECK(out.at(1, 0, 0, 0) == 0.0);
  CHECK(out.at(2, 0, 0, 0) == 0.0);
}

TEST_CASE("lif: zero drive never spikes") {
  snn::Lif lif("lif", {8, 2, 3, 3});
  FwdCtx ctx{Mode::Spiking, false, nullptr};
  Tensor4 out = lif.forward(constant_input({8, 2, 3, 3}, 0.0), ctx, nullptr);
  for (double v : out.v) CHECK(v == 0.0);
}

TEST_CASE("lif: hand-iterated subthreshold recurrence 0.4 -> 0.6") {
  // Two drives of 0.4 at decay 0.5 leave u = 0.4 then 0.6, no spike.
  {
    snn::Lif lif("lif", {2, 1, 1, 1});
    Tensor4 x = constant_input({2, 1, 1, 1}, 0.4);
    FwdCtx ctx{Mode::Spiking, false, nullptr};
    Tensor4 out = lif.forward(x, ctx, nullptr);
    CHECK(out.at(0, 0, 0, 0) == 0.0);
    CHECK(out.at(1, 0, 0, 0) == 0.0);
  }
  // Witness that u after step 2 is exactly 0.6: a third drive of 0.7
  // reaches 0.5*0.6 + 0.7 = 1.0, the threshold, and must spike.
  {
    snn::Lif lif("lif", {3, 1, 1, 1});
    Tensor4 x = constant_input({3, 1, 1, 1}, 0.4);
    x.at(2, 0, 0, 0) = 0.7;
    FwdCtx ctx{Mode::Spiking, false, nullptr};
    Tensor4 out = lif.forward(x, ctx, nullptr);
    CHECK(out.at(2, 0, 0, 0) == 1.0);
  }
}

TEST_CASE("lif: membrane after a spiking step resets before the next leak") {
  snn::Lif lif("lif", {3, 1, 1, 1});
  Tensor4 x = constant_input({3, 1, 1, 1}, 1.0);
  FwdCtx ctx{Mode::Spiking, false, nullptr};
  Tensor4 out = lif.forward(x, ctx, nullptr);
  // Every step: u = 0.5*0*(1-1) + 1.0 = 1.0 -> spike each step.
  for (double v : out.v) CHECK(v == 1.0);
}

TEST_CASE("lif rejects non-finite input") {
  snn::Lif lif("lif", {1, 1, 1, 1});
  Tensor4 x(1, 1, 1, 1);
  x.v[0] = std::nan("");
  FwdCtx ctx{Mode::Spiking, false, nullptr};
  CHECK_THROWS_AS(lif.forward(x, ctx, nullptr), numeric_error);
}

TEST_CASE("surrogate derivative peak and tails") {
  CHECK(snn::surrogate_deriv(0.0, 2.0) == doctest::Approx(1.0)); // alpha/2
  CHECK(snn::surrogate_deriv(100.0, 2.0) < 1e-4);
  CHECK(snn::surrogate_deriv(-100.0, 2.0) < 1e-4);
  // The smooth spike is the primitive of the derivative.
  const double h = 1e-6;
  for (double u : {-1.3, -0.2, 0.0, 0.4, 2.0}) {
    const double fd = (snn::surrogate_smooth(u + h, 2.0) -
                       snn::surrogate_smooth(u - h, 2.0)) /
                      (2 * h);
    CHECK(fd == doctest::Approx(snn::surrogate_deriv(u, 2.0)).epsilon(1e-6));
  }
}

TEST_CASE("sew block: zero conv weights + identity bn reproduce binary input") {
  snn::ParamRegistry reg;
  snn::SewBlock block(reg, "b", {4, 3, 6, 6}, 3, 1);
  reg.init_all(1);
  // Zero the convolution weights; BN stays at its init (identity in
  // inference mode: gamma 1, beta 0, running mean 0, var 1).
  for (const auto& e : reg.entries())
    if (e.name.find(".conv") != std::string::npos)
      for (std::size_t i = 0; i < e.n; ++i) e.w[i] = 0.0;

  Tensor4 x(4, 3, 6, 6);
  for (std::size_t i = 0; i < x.size(); ++i)
    x.v[i] = (rng::hash(9, {i}) & 1) ? 1.0 : 0.0;
  FwdCtx ctx{Mode::Spiking, false, nullptr};
  Tensor4 out = block.forward(x, ctx, nullptr);
  // F(x) = 0, so out = LIF2(x): binary drive reproduces the pattern.
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(out.v[i] == x.v[i]);
}

TEST_CASE("sew block: all-zero input propagates zeros") {
  snn::ParamRegistry reg;
  snn::SewBlock block(reg, "b", {4, 2, 8, 8}, 4, 2);
  reg.init_all(3);
  FwdCtx ctx{Mode::Spiking, false, nullptr};
  Tensor4 out = block.forward(constant_input({4, 2, 8, 8}, 0.0), ctx, nullptr);
  for (double v : out.v) CHECK(v == 0.0);
}

TEST_CASE("sew block output is binary for random weights") {
  for (int trial = 0; trial < 100; ++trial) {
    snn::ParamRegistry reg;
    snn::SewBlock block(reg, "b", {2, 2, 4, 4}, 3, 1 + (trial % 2));
    reg.init_all(std::uint64_t(trial));
    Tensor4 x(2, 2, 4, 4);
    for (std::size_t i = 0; i < x.size(); ++i)
      x.v[i] = (rng::hash(trial, {i, 7}) & 1) ? 1.0 : 0.0;
    FwdCtx ctx{Mode::Spiking, true, nullptr};
    snn::Tape tape; // exercise the taped path too
    snn::TapePtr node;
    Tensor4 out = block.forward(x, ctx, &node);
    CHECK(out.is_binary());
  }
}

TEST_CASE("batchnorm inference mode folds into the preceding conv") {
  snn::ParamRegistry reg;
  const Shape4 in{2, 3, 5, 5};
  snn::Conv2d conv(reg, "conv", in, 4, 3, 1, 1, true);
  snn::BatchNorm bn(reg, "bn", conv.out_shape());
  reg.init_all(11);
  // Give the BN non-trivial inference statistics.
  for (int c = 0; c < 4; ++c) {
    bn.gamma()[c] = 0.5 + 0.3 * c;
    bn.beta()[c] = -0.2 + 0.1 * c;
    bn.running_mean()[c] = 0.05 * (c + 1);
    bn.running_var()[c] = 0.5 + 0.2 * c;
  }
  Tensor4 x(in);
  for (std::size_t i = 0; i < x.size(); ++i)
    x.v[i] = rng::uniform(3, {i}) - 0.3;

  FwdCtx ctx{Mode::Spiking, false, nullptr};
  Tensor4 ref = bn.forward(conv.forward(x, ctx, nullptr), ctx, nullptr);

  // Fold: w' = w * scale_c, bias' = shift_c.
  std::vector<double> scale, shift;
  bn.inference_affine(scale, shift);
  snn::ParamRegistry reg2;
  snn::Conv2d folded(reg2, "folded", in, 4, 3, 1, 1, true);
  for (int co = 0; co < 4; ++co)
    for (int k = 0; k < 3 * 3 * 3; ++k)
      folded.weights()[std::size_t(co) * 27 + k] =
          conv.weights()[std::size_t(co) * 27 + k] * scale[co];
  Tensor4 y = folded.forward(x, ctx, nullptr);
  for (int t = 0; t < y.t; ++t)
    for (int c = 0; c < 4; ++c)
      for (int i = 0; i < 5 * 5; ++i) {
        const std::size_t idx = y.index(t, c, i / 5, i % 5);
        CHECK(std::abs((y.v[idx] + shift[c]) - ref.v[idx]) <= 1e-6);
      }
}

TEST_CASE("network forward is bit-deterministic across runs and schedules") {
  snn::ParamRegistry reg;
  snn::Network net(Shape4{4, 2, 16, 16});
  net.add<snn::Conv2d>(reg, "c1", net.out_shape(), 4, 3, 1, 1, true);
  net.add<snn::BatchNorm>(reg, "b1", net.out_shape());
  net.add<snn::Lif>("l1", net.out_shape());
  net.add<snn::SewBlock>(reg, "s1", net.out_shape(), 8, 2);
  reg.init_all(123);

  Tensor4 x(4, 2, 16, 16);
  for (std::size_t i = 0; i < x.size(); ++i)
    x.v[i] = (rng::hash(1, {i}) % 4 == 0) ? 1.0 : 0.0;
  FwdCtx ctx{Mode::Spiking, false, nullptr};
  Tensor4 ref = net.forward(x, ctx, nullptr);

  std::vector<Tensor4> outs(8);
  parallel_for(outs.size(), 8,
               [&](std::size_t i) { outs[i] = net.forward(x, ctx, nullptr); });
  for (const auto& o : outs) CHECK(o.v == ref.v);
}

TEST_CASE("checkpoint SEW1 round-trips bit-exactly") {
  testutil::TmpDir tmp("ckpt");
  snn::Checkpoint c;
  c.manifest = {"smlp", "sr13_mcs", "sr13_tss", "cda"};
  snn::NamedTensorF32 t1;
  t1.name = "alpha.w";
  t1.shape = {2, 3};
  t1.data = {1.0f, -2.5f, 0.125f, 3.14159f, -0.0f, 1e-20f};
  snn::NamedTensorF32 t2;
  t2.name = "beta.b";
  t2.shape = {4};
  t2.data = {0.0f, -1.0f, 2.0f, -3.0f};
  c.tensors = {t1, t2};
  snn::save_checkpoint(c, tmp.file("a.sewckpt"));
  snn::Checkpoint back = snn::load_checkpoint(tmp.file("a.sewckpt"));
  CHECK(back.manifest == c.manifest);
  REQUIRE(back.tensors.size() == 2);
  CHECK(back.tensors[0].name == "alpha.w");
  CHECK(back.tensors[0].shape == t1.shape);
  CHECK(back.tensors[0].data == t1.data);
  snn::save_checkpoint(back, tmp.file("b.sewckpt"));
  CHECK(testutil::read_file(tmp.file("a.sewckpt")) ==
        testutil::read_file(tmp.file("b.sewckpt")));
}

TEST_CASE("checkpoint restore validates names and shapes") {
  testutil::TmpDir tmp("ckpt");
  snn::ParamRegistry reg;
  snn::Conv2d conv(reg, "conv", {1, 1, 4, 4}, 1, 3, 1, 1, true);
  reg.init_all(2);
  snn::save_checkpoint(snn::snapshot(reg, {}), tmp.file("ok.sewckpt"));
  snn::restore(snn::load_checkpoint(tmp.file("ok.sewckpt")), reg);

  snn::Checkpoint bad = snn::snapshot(reg, {});
  bad.tensors[0].name = "other";
  CHECK_THROWS_AS(snn::restore(bad, reg), io_error);
  snn::Checkpoint bad2 = snn::snapshot(reg, {});
  bad2.tensors[0].shape = {1, 1, 9, 9};
  CHECK_THROWS_AS(snn::restore(bad2, reg), io_error);
}

TEST_CASE("registry init is deterministic and keyed by name") {
  snn::ParamRegistry r1, r2;
  snn::Conv2d c1(r1, "conv", {1, 2, 4, 4}, 2, 3, 1, 1, true);
  snn::Conv2d c2(r2, "conv", {1, 2, 4, 4}, 2, 3, 1, 1, true);
  r1.init_all(9);
  r2.init_all(9);
  CHECK(c1.weights() == c2.weights());
  r2.init_all(10);
  CHECK(c1.weights() != c2.weights());
}
