#include "sevpr/descriptor.hpp"

#include <cmath>

#include "sevpr/errors.hpp"

namespace sevpr::desc {

using snn::Shape4;
using snn::Tensor4;

int ModelConfig::width(int stage) const {
  static constexpr int base[3] = {64, 128, 256};
  const int w = int(std::lround(base[stage] * scale));
  return w < 1 ? 1 : w;
}

// ------------------------------------------------------------ SSD algebra

SsdOut ssd_extract(const snn::Tensor4& a, const snn::Tensor4& b) {
  if (!(a.shape() == b.shape()))
    throw config_error("ssd_extract: feature map shapes differ");
  SsdOut out;
  out.x1 = Tensor4(a.shape());
  out.x2 = Tensor4(a.shape());
  out.x3 = Tensor4(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double shared = a.v[i] * b.v[i];
    out.x1.v[i] = shared;
    out.x2.v[i] = a.v[i] - shared;
    out.x3.v[i] = b.v[i] - shared;
  }
  return out;
}

void ssd_backward(const snn::Tensor4& a, const snn::Tensor4& b,
                  const snn::Tensor4& g1, const snn::Tensor4& g2,
                  const snn::Tensor4& g3, snn::Tensor4& g_a, snn::Tensor4& g_b) {
  g_a = Tensor4(a.shape());
  g_b = Tensor4(b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    // x1 = ab, x2 = a - ab, x3 = b - ab
    const double d_ab = g1.v[i] - g2.v[i] - g3.v[i];
    g_a.v[i] = g2.v[i] + d_ab * b.v[i];
    g_b.v[i] = g3.v[i] + d_ab * a.v[i];
  }
}

// ---------------------------------------------------------------- pooling

snn::Tensor4 pool_descriptor(const snn::Tensor4& x, PoolRecord* rec) {
  const std::size_t plane = std::size_t(x.h) * x.w;
  Tensor4 out(x.t, x.c, 1, 1);
  std::vector<double> norms(x.t, 0.0);
  for (int t = 0; t < x.t; ++t) {
    double sq = 0.0;
    for (int c = 0; c < x.c; ++c) {
      const double* p = &x.v[x.index(t, c, 0, 0)];
      double s = 0.0;
      for (std::size_t i = 0; i < plane; ++i) s += p[i];
      const double g = s / double(plane);
      out.at(t, c, 0, 0) = g;
      sq += g * g;
    }
    const double n = std::sqrt(sq);
    norms[t] = n;
    if (n > 0.0)
      for (int c = 0; c < x.c; ++c) out.at(t, c, 0, 0) /= n;
  }
  if (rec) {
    rec->in_shape = x.shape();
    rec->normed = out;
    rec->norms = std::move(norms);
  }
  return out;
}

snn::Tensor4 pool_descriptor_backward(const snn::Tensor4& g, const PoolRecord& rec) {
  const Shape4 s = rec.in_shape;
  const std::size_t plane = std::size_t(s.h) * s.w;
  Tensor4 gx(s);
  for (int t = 0; t < s.t; ++t) {
    const double n = rec.norms[t];
    if (n == 0.0) continue; // guarded zero row, no gradient
    double dot = 0.0;
    for (int c = 0; c < s.c; ++c)
      dot += g.at(t, c, 0, 0) * rec.normed.at(t, c, 0, 0);
    for (int c = 0; c < s.c; ++c) {
      const double d_gap = (g.at(t, c, 0, 0) - rec.normed.at(t, c, 0, 0) * dot) / n;
      const double per_px = d_gap / double(plane);
      double* q = &gx.v[gx.index(t, c, 0, 0)];
      for (std::size_t i = 0; i < plane; ++i) q[i] = per_px;
    }
  }
  return gx;
}

// ---------------------------------------------------------- model wiring

namespace {

snn::Network build_sr13(snn::ParamRegistry& reg, const std::string& prefix,
                        Shape4 in, const ModelConfig& cfg) {
  if (in.h < 8 || in.w < 8)
    throw config_error("descriptor model needs input of at least 8x8");
  snn::Network net(in);
  const int c1 = cfg.width(0), c2 = cfg.width(1), c3 = cfg.width(2);
  net.add<snn::Conv2d>(reg, prefix + ".stem.conv", in, c1, 7, 2, 3, true);
  net.add<snn::BatchNorm>(reg, prefix + ".stem.bn", net.out_shape());
  net.add<snn::Lif>(prefix + ".stem.lif", net.out_shape(), cfg.lif);
  net.add<snn::MaxPool>(prefix + ".stem.pool", net.out_shape(), 3, 2, 1);
  net.add<snn::SewBlock>(reg, prefix + ".s1.b1", net.out_shape(), c1, 1, cfg.lif);
  net.add<snn::SewBlock>(reg, prefix + ".s1.b2", net.out_shape(), c1, 1, cfg.lif);
  net.add<snn::SewBlock>(reg, prefix + ".s2.b1", net.out_shape(), c2, 2, cfg.lif);
  net.add<snn::SewBlock>(reg, prefix + ".s2.b2", net.out_shape(), c2, 1, cfg.lif);
  net.add<snn::SewBlock>(reg, prefix + ".s3.b1", net.out_shape(), c3, 2, cfg.lif);
  net.add<snn::SewBlock>(reg, prefix + ".s3.b2", net.out_shape(), c3, 1, cfg.lif);
  return net;
}

std::array<double, 3> softmax3(const std::array<double, 3>& m) {
  const double mx = std::max(m[0], std::max(m[1], m[2]));
  std::array<double, 3> e{std::exp(m[0] - mx), std::exp(m[1] - mx),
                          std::exp(m[2] - mx)};
  const double s = e[0] + e[1] + e[2];
  return {e[0] / s, e[1] / s, e[2] / s};
}

} // namespace

DescriptorModel::DescriptorModel(const ModelConfig& cfg)
    : cfg_(cfg), encoder_(cfg.smlp_hidden, cfg.t_steps, cfg.lif) {
  encoder_.register_params(reg_, "smlp");
  const Shape4 in{cfg.t_steps, 2, cfg.input.height, cfg.input.width};
  net_mcs_ = build_sr13(reg_, "sr13_mcs", in, cfg_);
  net_tss_ = build_sr13(reg_, "sr13_tss", in, cfg_);

  const int C = cfg_.feature_channels();
  if (!(net_mcs_.out_shape() == Shape4{cfg.t_steps, C, net_mcs_.out_shape().h,
                                       net_mcs_.out_shape().w}))
    throw config_error("descriptor model: stream output width mismatch");
  snn::Network cda(Shape4{cfg.t_steps, C, 1, 1});
  cda.add<snn::Linear>(reg_, "cda.fc1", cda.out_shape(), cfg.cda_hidden, false);
  cda.add<snn::Lif>("cda.lif", cda.out_shape(), cfg_.lif);
  cda.add<snn::Linear>(reg_, "cda.fc2", cda.out_shape(), 3, true);
  net_cda_ = std::move(cda);
}

DescriptorModel::Output DescriptorModel::describe_volume(
    const EventVolume& vol, std::uint64_t tss_seed, snn::OpRecorder* rec) const {
  return run(vol, tss_seed, snn::Mode::Spiking, false, nullptr, rec);
}

DescriptorModel::Output DescriptorModel::forward(const EventVolume& vol,
                                                 std::uint64_t tss_seed,
                                                 snn::Mode mode, bool bn_training,
                                                 ForwardTape& tape,
                                                 snn::OpRecorder* rec) const {
  return run(vol, tss_seed, mode, bn_training, &tape, rec);
}

DescriptorModel::Output DescriptorModel::run(const EventVolume& vol,
                                             std::uint64_t tss_seed,
                                             snn::Mode mode, bool bn_training,
                                             ForwardTape* tape,
                                             snn::OpRecorder* rec) const {
  Output out;
  out.descriptor.assign(std::size_t(cfg_.descriptor_dim()), 0.0);
  if (tape) {
    *tape = ForwardTape{};
    tape->mode = mode;
  }
  if (vol.events.empty()) {
    out.degenerate = true;
    out.repr_flags.empty = true;
    if (tape) tape->empty_volume = true;
    return out;
  }

  const snn::FwdCtx ctx{mode, bn_training, rec};

  Tensor4 mcs_in = repr::build_mcs_forward(vol, encoder_, cfg_.t_steps, mode,
                                           tape ? &tape->mcs : nullptr,
                                           &out.repr_flags, rec);
  const repr::TsMap ts = repr::build_ts_map(vol, cfg_.eta_s);
  Tensor4 tss_in = Tensor4::from_spikes(
      repr::sample_tss_tensor(ts, cfg_.t_steps, tss_seed));

  Tensor4 m_mcs = net_mcs_.forward(mcs_in, ctx, tape ? &tape->net_mcs : nullptr);
  Tensor4 m_tss = net_tss_.forward(tss_in, ctx, tape ? &tape->net_tss : nullptr);

  SsdOut ssd = ssd_extract(m_mcs, m_tss);

  std::array<PoolRecord, 3> pool_local;
  std::array<PoolRecord, 3>& pool = tape ? tape->pool : pool_local;
  std::array<Tensor4, 3> d;
  d[0] = pool_descriptor(ssd.x1, &pool[0]);
  d[1] = pool_descriptor(ssd.x2, &pool[1]);
  d[2] = pool_descriptor(ssd.x3, &pool[2]);

  // Weight path: elementwise sum -> FC/LIF/FC -> temporal mean -> softmax.
  Tensor4 d_add(cfg_.t_steps, cfg_.feature_channels(), 1, 1);
  for (std::size_t i = 0; i < d_add.size(); ++i)
    d_add.v[i] = d[0].v[i] + d[1].v[i] + d[2].v[i];
  Tensor4 cda_out =
      net_cda_.forward(d_add, ctx, tape ? &tape->net_cda : nullptr);
  std::array<double, 3> mean3{};
  for (int t = 0; t < cda_out.t; ++t)
    for (int k = 0; k < 3; ++k) mean3[k] += cda_out.at(t, k, 0, 0);
  for (int k = 0; k < 3; ++k) mean3[k] /= double(cda_out.t);
  const std::array<double, 3> w = softmax3(mean3);
  out.weights = w;

  // Aggregation path: temporal mean -> intra-norm per sub-descriptor ->
  // weight -> flatten -> final L2 norm.
  const int C = cfg_.feature_channels();
  std::array<std::vector<double>, 3> mean_rows;
  std::array<double, 3> row_norms{};
  std::vector<double> flat(std::size_t(3) * C, 0.0);
  for (int i = 0; i < 3; ++i) {
    mean_rows[i].assign(C, 0.0);
    for (int t = 0; t < cfg_.t_steps; ++t)
      for (int c = 0; c < C; ++c) mean_rows[i][c] += d[i].at(t, c, 0, 0);
    double sq = 0.0;
    for (int c = 0; c < C; ++c) {
      mean_rows[i][c] /= double(cfg_.t_steps);
      sq += mean_rows[i][c] * mean_rows[i][c];
    }
    row_norms[i] = std::sqrt(sq);
    if (row_norms[i] > 0.0)
      for (int c = 0; c < C; ++c)
        flat[std::size_t(i) * C + c] = w[i] * mean_rows[i][c] / row_norms[i];
  }
  double flat_sq = 0.0;
  for (double v : flat) flat_sq += v * v;
  const double flat_norm = std::sqrt(flat_sq);
  if (flat_norm > 0.0) {
    for (std::size_t i = 0; i < flat.size(); ++i)
      out.descriptor[i] = flat[i] / flat_norm;
  } else {
    out.degenerate = true;
  }

  if (tape) {
    tape->tss_in = std::move(tss_in);
    tape->m_mcs = std::move(m_mcs);
    tape->m_tss = std::move(m_tss);
    tape->d = std::move(d);
    tape->cda_out = std::move(cda_out);
    tape->w = w;
    tape->mean_rows = std::move(mean_rows);
    tape->row_norms = row_norms;
    tape->flat = std::move(flat);
    tape->flat_norm = flat_norm;
  }
  return out;
}

void DescriptorModel::backward(const ForwardTape& tape,
                               const std::vector<double>& g_descriptor,
                               snn::GradSink& gs) const {
  if (tape.empty_volume) return;
  const int C = cfg_.feature_channels();
  const int T = cfg_.t_steps;

  // Final L2 normalization.
  std::vector<double> g_flat(std::size_t(3) * C, 0.0);
  if (tape.flat_norm > 0.0) {
    double dot = 0.0;
    for (std::size_t i = 0; i < g_flat.size(); ++i)
      dot += g_descriptor[i] * tape.flat[i] / tape.flat_norm;
    for (std::size_t i = 0; i < g_flat.size(); ++i)
      g_flat[i] = (g_descriptor[i] - (tape.flat[i] / tape.flat_norm) * dot) /
                  tape.flat_norm;
  }

  // Weighted intra-normalized rows.
  std::array<double, 3> g_w{};
  std::array<Tensor4, 3> g_d;
  for (int i = 0; i < 3; ++i) g_d[i] = Tensor4(T, C, 1, 1);
  for (int i = 0; i < 3; ++i) {
    if (tape.row_norms[i] == 0.0) continue;
    std::vector<double> r(C), g_r(C);
    for (int c = 0; c < C; ++c)
      r[c] = tape.mean_rows[i][c] / tape.row_norms[i];
    for (int c = 0; c < C; ++c) {
      g_w[i] += g_flat[std::size_t(i) * C + c] * r[c];
      g_r[c] = g_flat[std::size_t(i) * C + c] * tape.w[i];
    }
    double dot = 0.0;
    for (int c = 0; c < C; ++c) dot += g_r[c] * r[c];
    for (int c = 0; c < C; ++c) {
      const double g_mean = (g_r[c] - r[c] * dot) / tape.row_norms[i];
      for (int t = 0; t < T; ++t) g_d[i].at(t, c, 0, 0) += g_mean / double(T);
    }
  }

  // Softmax and the weight path.
  double wg = 0.0;
  for (int k = 0; k < 3; ++k) wg += g_w[k] * tape.w[k];
  Tensor4 g_cda(T, 3, 1, 1);
  for (int k = 0; k < 3; ++k) {
    const double g_mean3 = tape.w[k] * (g_w[k] - wg);
    for (int t = 0; t < T; ++t) g_cda.at(t, k, 0, 0) = g_mean3 / double(T);
  }
  Tensor4 g_d_add = net_cda_.backward(g_cda, tape.net_cda, gs);
  for (int i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < g_d[i].size(); ++j)
      g_d[i].v[j] += g_d_add.v[j];

  // Pooling, SSD split, streams, encoder.
  Tensor4 g_x1 = pool_descriptor_backward(g_d[0], tape.pool[0]);
  Tensor4 g_x2 = pool_descriptor_backward(g_d[1], tape.pool[1]);
  Tensor4 g_x3 = pool_descriptor_backward(g_d[2], tape.pool[2]);
  Tensor4 g_mcs_map, g_tss_map;
  ssd_backward(tape.m_mcs, tape.m_tss, g_x1, g_x2, g_x3, g_mcs_map, g_tss_map);

  Tensor4 g_mcs_in = net_mcs_.backward(g_mcs_map, tape.net_mcs, gs);
  (void)net_tss_.backward(g_tss_map, tape.net_tss, gs); // TSS input is data
  repr::mcs_backward(tape.mcs, g_mcs_in, encoder_, gs);
}

void DescriptorModel::update_bn_stats(const ForwardTape& tape, double momentum) {
  if (tape.empty_volume) return;
  net_mcs_.update_stats(tape.net_mcs, momentum);
  net_tss_.update_stats(tape.net_tss, momentum);
  net_cda_.update_stats(tape.net_cda, momentum);
}

FeatureMaps DescriptorModel::bsr_encode(const SpikeTensor& mcs,
                                        const SpikeTensor& tss) const {
  mcs.validate("bsr_encode mcs input");
  tss.validate("bsr_encode tss input");
  if (!mcs.same_shape(tss))
    throw config_error("bsr_encode: stream input shapes differ");
  const snn::FwdCtx ctx{snn::Mode::Spiking, false, nullptr};
  FeatureMaps out;
  out.mcs = net_mcs_.forward(Tensor4::from_spikes(mcs), ctx, nullptr);
  out.tss = net_tss_.forward(Tensor4::from_spikes(tss), ctx, nullptr);
  return out;
}

std::array<double, 3> DescriptorModel::cda_weights(const snn::Tensor4& d1,
                                                   const snn::Tensor4& d2,
                                                   const snn::Tensor4& d3) const {
  if (!(d1.shape() == d2.shape()) || !(d1.shape() == d3.shape()))
    throw config_error("cda_weights: sub-descriptor shapes differ");
  if (!(d1.shape() == net_cda_.in_shape()))
    throw config_error("cda_weights: sub-descriptor width does not match FC1");
  Tensor4 d_add(d1.shape());
  for (std::size_t i = 0; i < d_add.size(); ++i)
    d_add.v[i] = d1.v[i] + d2.v[i] + d3.v[i];
  const snn::FwdCtx ctx{snn::Mode::Spiking, false, nullptr};
  Tensor4 o = net_cda_.forward(d_add, ctx, nullptr);
  std::array<double, 3> mean3{};
  for (int t = 0; t < o.t; ++t)
    for (int k = 0; k < 3; ++k) mean3[k] += o.at(t, k, 0, 0);
  for (int k = 0; k < 3; ++k) mean3[k] /= double(o.t);
  return softmax3(mean3);
}

std::vector<double> DescriptorModel::cda_aggregate(const snn::Tensor4& d1,
                                                   const snn::Tensor4& d2,
                                                   const snn::Tensor4& d3,
                                                   const std::array<double, 3>& w,
                                                   bool* degenerate) const {
  const int C = d1.c, T = d1.t;
  const snn::Tensor4* ds[3] = {&d1, &d2, &d3};
  std::vector<double> flat(std::size_t(3) * C, 0.0);
  for (int i = 0; i < 3; ++i) {
    std::vector<double> row(C, 0.0);
    for (int t = 0; t < T; ++t)
      for (int c = 0; c < C; ++c) row[c] += ds[i]->at(t, c, 0, 0);
    double sq = 0.0;
    for (int c = 0; c < C; ++c) {
      row[c] /= double(T);
      sq += row[c] * row[c];
    }
    const double n = std::sqrt(sq);
    if (n > 0.0)
      for (int c = 0; c < C; ++c) flat[std::size_t(i) * C + c] = w[i] * row[c] / n;
  }
  double sq = 0.0;
  for (double v : flat) sq += v * v;
  const double n = std::sqrt(sq);
  if (degenerate) *degenerate = (n == 0.0);
  if (n > 0.0)
    for (double& v : flat) v /= n;
  return flat;
}

snn::GraphInfo DescriptorModel::graph_info() const {
  snn::GraphInfo g;
  g.t_steps = cfg_.t_steps;
  // The event-to-spike encoder's cost depends on the event count, so its
  // synaptic ops are only filled by recording; static entries carry params.
  snn::LayerDesc fc1;
  fc1.name = "smlp.fc1";
  fc1.kind = snn::LayerDesc::Kind::Fc;
  fc1.params = 2LL * cfg_.smlp_hidden;
  fc1.t_steps = cfg_.t_steps;
  fc1.spike_input = false;
  g.layers.push_back(fc1);
  snn::LayerDesc fc2;
  fc2.name = "smlp.fc2";
  fc2.kind = snn::LayerDesc::Kind::Fc;
  fc2.params = (long long)cfg_.t_steps * cfg_.smlp_hidden + cfg_.t_steps;
  fc2.t_steps = cfg_.t_steps;
  fc2.spike_input = true;
  g.layers.push_back(fc2);
  net_mcs_.describe(g);
  net_tss_.describe(g);
  net_cda_.describe(g);
  return g;
}

snn::Checkpoint DescriptorModel::snapshot() const {
  return snn::snapshot(reg_, {"smlp", "sr13_mcs", "sr13_tss", "cda"});
}

double descriptor_distance_sq(const std::vector<double>& a,
                              const std::vector<double>& b) {
  if (a.size() != b.size())
    throw config_error("descriptor_distance_sq: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

} // namespace sevpr::desc
