#include "sevpr/spike_repr.hpp"

#include <cmath>

#include "sevpr/errors.hpp"
#include "sevpr/rng.hpp"

namespace sevpr::repr {

double normalize_timestamp(std::uint64_t t, std::uint64_t t_first,
                           std::uint64_t t_last, int t_steps) {
  if (t < t_first || t > t_last)
    throw config_error("normalize_timestamp: t outside [t_first, t_last]");
  if (t_last == t_first) return 0.0;
  return double(t_steps - 1) * double(t - t_first) / double(t_last - t_first);
}

// ------------------------------------------------------------ SmlpEncoder

SmlpEncoder::SmlpEncoder(int hidden, int t_steps, snn::LifParams lif)
    : w1(hidden, 0.0), b1(hidden, 0.0),
      w2(std::size_t(t_steps) * hidden, 0.0), b2(t_steps, 0.0),
      hidden_(hidden), t_steps_(t_steps), lif_(lif) {
  if (hidden < 1 || t_steps < 1)
    throw config_error("SmlpEncoder: hidden and t_steps must be >= 1");
}

void SmlpEncoder::register_params(snn::ParamRegistry& reg,
                                  const std::string& prefix) {
  // Bounds chosen so the untrained kernel fires at a moderate rate over
  // offsets in [-(T-1), T-1]; training reshapes it from there.
  reg.register_param(prefix + ".fc1.w", {hidden_, 1}, w1.data(), w1.size(), true,
                     snn::InitSpec::uniform(1.0));
  w1_off_ = reg.entries().back().grad_off;
  reg.register_param(prefix + ".fc1.b", {hidden_}, b1.data(), b1.size(), true,
                     snn::InitSpec::uniform(2.0));
  b1_off_ = reg.entries().back().grad_off;
  reg.register_param(prefix + ".fc2.w", {t_steps_, hidden_}, w2.data(), w2.size(),
                     true, snn::InitSpec::uniform(3.0 / std::sqrt(double(hidden_))));
  w2_off_ = reg.entries().back().grad_off;
  reg.register_param(prefix + ".fc2.b", {t_steps_}, b2.data(), b2.size(), true,
                     snn::InitSpec::uniform(0.5));
  b2_off_ = reg.entries().back().grad_off;
  registered_ = true;
}

double SmlpEncoder::eval(double offset, int t_prime, snn::Mode mode,
                         EvalTape* tape) const {
  const double vth = lif_.v_threshold;
  const double alpha = lif_.surrogate_alpha;
  double u2 = b2[t_prime];
  const double* w2r = &w2[std::size_t(t_prime) * hidden_];

  std::vector<double>* u1 = nullptr;
  std::vector<double>* s1 = nullptr;
  std::vector<double> local_u1, local_s1;
  if (tape) {
    tape->input = offset;
    tape->t_prime = t_prime;
    tape->u1.resize(hidden_);
    tape->s1.resize(hidden_);
    u1 = &tape->u1;
    s1 = &tape->s1;
  } else {
    u1 = &local_u1;
    s1 = &local_s1;
    local_u1.resize(hidden_);
    local_s1.resize(hidden_);
  }
  for (int j = 0; j < hidden_; ++j) {
    const double u = w1[j] * offset + b1[j];
    const double s = (mode == snn::Mode::Spiking)
                         ? (u >= vth ? 1.0 : 0.0)
                         : snn::surrogate_smooth(u - vth, alpha);
    (*u1)[j] = u;
    (*s1)[j] = s;
    u2 += w2r[j] * s;
  }
  if (tape) tape->u2 = u2;
  return (mode == snn::Mode::Spiking)
             ? (u2 >= vth ? 1.0 : 0.0)
             : snn::surrogate_smooth(u2 - vth, alpha);
}

void SmlpEncoder::backward(const EvalTape& tape, double g, snn::GradSink& gs) const {
  if (!registered_)
    throw config_error("SmlpEncoder::backward requires registered parameters");
  if (g == 0.0) return;
  const double vth = lif_.v_threshold;
  const double alpha = lif_.surrogate_alpha;
  const double du2 = g * snn::surrogate_deriv(tape.u2 - vth, alpha);
  const int tp = tape.t_prime;
  gs.g[b2_off_ + tp] += du2;
  double* gw2 = &gs.g[w2_off_ + std::size_t(tp) * hidden_];
  const double* w2r = &w2[std::size_t(tp) * hidden_];
  for (int j = 0; j < hidden_; ++j) {
    gw2[j] += du2 * tape.s1[j];
    const double ds1 = du2 * w2r[j];
    const double du1 = ds1 * snn::surrogate_deriv(tape.u1[j] - vth, alpha);
    gs.g[w1_off_ + j] += du1 * tape.input;
    gs.g[b1_off_ + j] += du1;
  }
}

// ------------------------------------------------------------ MCS-Tensor

namespace {

// Shared accumulation skeleton; `contrib` returns the kernel value for one
// (event, t') pair.
template <typename Fn>
snn::Tensor4 accumulate_mcs(const EventVolume& vol, int t_steps,
                            ReprFlags* flags, Fn&& contrib) {
  snn::Tensor4 acc(t_steps, 2, vol.resolution.height, vol.resolution.width);
  if (vol.events.empty()) {
    if (flags) flags->empty = true;
    return acc;
  }
  const std::uint64_t t_first = vol.events.front().t;
  const std::uint64_t t_last = vol.events.back().t;
  if (flags && t_last == t_first) flags->degenerate_time = true;
  for (const Event& e : vol.events) {
    const double t_star = normalize_timestamp(e.t, t_first, t_last, t_steps);
    const int ch = e.p > 0 ? 0 : 1;
    for (int tp = 0; tp < t_steps; ++tp) {
      const double v = contrib(double(tp) - t_star, tp);
      if (v != 0.0) acc.at(tp, ch, e.y, e.x) += v;
    }
  }
  return acc;
}

} // namespace

snn::Tensor4 build_mcs_forward(const EventVolume& vol, const SmlpEncoder& enc,
                               int t_steps, snn::Mode mode, McsTape* tape,
                               ReprFlags* flags, snn::OpRecorder* rec) {
  if (enc.t_steps() != t_steps)
    throw config_error("build_mcs_forward: encoder t_steps mismatch");
  if (tape) {
    tape->evals.clear();
    tape->cells.clear();
    tape->shape = {t_steps, 2, vol.resolution.height, vol.resolution.width};
  }
  double mac_fc1 = 0, ac_fc2 = 0, spikes1 = 0, slots1 = 0, spikes2 = 0, slots2 = 0;

  snn::Tensor4 acc(t_steps, 2, vol.resolution.height, vol.resolution.width);
  if (vol.events.empty()) {
    if (flags) flags->empty = true;
    return acc;
  }
  const std::uint64_t t_first = vol.events.front().t;
  const std::uint64_t t_last = vol.events.back().t;
  if (flags && t_last == t_first) flags->degenerate_time = true;

  SmlpEncoder::EvalTape scratch;
  for (const Event& e : vol.events) {
    const double t_star = normalize_timestamp(e.t, t_first, t_last, t_steps);
    const int ch = e.p > 0 ? 0 : 1;
    for (int tp = 0; tp < t_steps; ++tp) {
      SmlpEncoder::EvalTape* et = (tape || rec) ? &scratch : nullptr;
      const double v = enc.eval(double(tp) - t_star, tp, mode, et);
      const std::size_t cell = acc.index(tp, ch, e.y, e.x);
      acc.v[cell] += v;
      if (rec) {
        mac_fc1 += enc.hidden();
        double nnz = 0;
        for (double s : scratch.s1) nnz += (s != 0.0) ? 1 : 0;
        ac_fc2 += nnz;
        spikes1 += nnz;
        slots1 += enc.hidden();
        spikes2 += (v != 0.0) ? 1 : 0;
        slots2 += 1;
      }
      if (tape) {
        tape->evals.push_back(std::move(scratch));
        tape->cells.push_back(cell);
        scratch = SmlpEncoder::EvalTape{};
      }
    }
  }
  if (rec) {
    rec->add_mac("smlp.fc1", mac_fc1);
    rec->add_ac("smlp.fc2", ac_fc2);
    rec->add_lif("smlp.lif1", spikes1, slots1);
    rec->add_lif("smlp.lif2", spikes2, slots2);
  }
  if (mode == snn::Mode::Spiking)
    for (double& x : acc.v) x = x > 0.0 ? 1.0 : 0.0;
  return acc;
}

void mcs_backward(const McsTape& tape, const snn::Tensor4& g,
                  const SmlpEncoder& enc, snn::GradSink& gs) {
  for (std::size_t i = 0; i < tape.evals.size(); ++i)
    enc.backward(tape.evals[i], g.v[tape.cells[i]], gs);
}

SpikeTensor build_mcs_tensor(const EventVolume& vol, const SmlpEncoder& enc,
                             int t_steps, ReprFlags* flags) {
  return build_mcs_forward(vol, enc, t_steps, snn::Mode::Spiking, nullptr, flags)
      .to_spikes();
}

SpikeTensor build_mcs_tensor_with_kernel(
    const EventVolume& vol, int t_steps,
    const std::function<bool(double, int)>& kernel, ReprFlags* flags) {
  snn::Tensor4 acc = accumulate_mcs(vol, t_steps, flags,
                                    [&](double off, int tp) -> double {
                                      return kernel(off, tp) ? 1.0 : 0.0;
                                    });
  for (double& x : acc.v) x = x > 0.0 ? 1.0 : 0.0;
  return acc.to_spikes();
}

// ------------------------------------------------------------ TSS-Tensor

double ts_value(std::uint64_t t_end, std::uint64_t t_last, double eta_s) {
  if (eta_s <= 0) throw config_error("ts_value: eta must be > 0");
  if (t_last > t_end) throw config_error("ts_value: t_last after t_end");
  const double dt_s = double(t_end - t_last) * 1e-6;
  return std::exp(-dt_s / eta_s);
}

TsMap build_ts_map(const EventVolume& vol, double eta_s) {
  if (eta_s <= 0) throw config_error("build_ts_map: eta must be > 0");
  const int H = vol.resolution.height, W = vol.resolution.width;
  TsMap map(H, W);
  // Most-recent event per (polarity, pixel); -1 marks "never".
  std::vector<std::int64_t> last(std::size_t(2) * H * W, -1);
  for (const Event& e : vol.events) {
    const int ch = e.p > 0 ? 0 : 1;
    auto& slot = last[(std::size_t(ch) * H + e.y) * W + e.x];
    slot = std::max<std::int64_t>(slot, std::int64_t(e.t));
  }
  for (std::size_t i = 0; i < last.size(); ++i)
    if (last[i] >= 0)
      map.v[i] = ts_value(vol.t_end, std::uint64_t(last[i]), eta_s);
  return map;
}

SpikeTensor sample_tss_tensor(const TsMap& map, int t_steps, std::uint64_t seed) {
  for (double p : map.v)
    if (p < 0.0 || p > 1.0)
      throw numeric_error("sample_tss_tensor: map value outside [0,1]");
  static constexpr std::uint64_t kLabel = rng::label("tss.sample");
  SpikeTensor out(t_steps, 2, map.h, map.w);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < map.h; ++y)
      for (int x = 0; x < map.w; ++x) {
        const double p = map.at(c, y, x);
        if (p == 0.0) continue;
        for (int tp = 0; tp < t_steps; ++tp) {
          const double u = rng::uniform(
              seed, {kLabel, std::uint64_t(c), std::uint64_t(y), std::uint64_t(x),
                     std::uint64_t(tp)});
          out.at(tp, c, y, x) = (u < p) ? 1 : 0;
        }
      }
  return out;
}

} // namespace sevpr::repr
