#ifndef SEVPR_DESCRIPTOR_HPP
#define SEVPR_DESCRIPTOR_HPP

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "sevpr/event.hpp"
#include "sevpr/snn/checkpoint.hpp"
#include "sevpr/snn/network.hpp"
#include "sevpr/spike_repr.hpp"

namespace sevpr::desc {

// Widths follow (64,128,256) scaled and rounded, never below 1. The final
// width doubles as the aggregation FC input, so it tracks scale
// automatically.
struct ModelConfig {
  int t_steps = 4;
  int smlp_hidden = 32;
  double eta_s = 0.05;
  double scale = 1.0; // desk-scale presets: 1/8, 1/4, 1
  Resolution input{32, 32};
  snn::LifParams lif{};
  int cda_hidden = 64;

  int width(int stage) const; // stage 0..2
  int feature_channels() const { return width(2); }
  int descriptor_dim() const { return 3 * feature_channels(); }
};

struct FeatureMaps {
  snn::Tensor4 mcs, tss;
};

// Shared/specific split of two equal-shaped maps:
//   x1 = a*b,  x2 = a - x1,  x3 = b - x1
// On binary inputs this is AND / a AND NOT b / b AND NOT a, exactly.
struct SsdOut {
  snn::Tensor4 x1, x2, x3;
};
SsdOut ssd_extract(const snn::Tensor4& m_mcs, const snn::Tensor4& m_tss);
void ssd_backward(const snn::Tensor4& m_mcs, const snn::Tensor4& m_tss,
                  const snn::Tensor4& g1, const snn::Tensor4& g2,
                  const snn::Tensor4& g3, snn::Tensor4& g_mcs,
                  snn::Tensor4& g_tss);

// Global average pool over space followed by L2 normalization per time step
// along channels; all-zero rows stay zero.
struct PoolRecord {
  snn::Shape4 in_shape;
  snn::Tensor4 normed; // (T,C,1,1), the output
  std::vector<double> norms; // per time step, 0 marks a guarded zero row
};
snn::Tensor4 pool_descriptor(const snn::Tensor4& x, PoolRecord* rec = nullptr);
snn::Tensor4 pool_descriptor_backward(const snn::Tensor4& g, const PoolRecord& rec);

// The full pipeline: representations -> dual SR13 streams -> shared/specific
// split -> pooling -> learned weighting -> aggregation.
class DescriptorModel {
public:
  explicit DescriptorModel(const ModelConfig& cfg);
  DescriptorModel(const DescriptorModel&) = delete;
  DescriptorModel& operator=(const DescriptorModel&) = delete;

  const ModelConfig& config() const { return cfg_; }
  snn::ParamRegistry& params() { return reg_; }
  const snn::ParamRegistry& params() const { return reg_; }
  repr::SmlpEncoder& encoder() { return encoder_; }
  snn::Network& net_mcs() { return net_mcs_; }
  snn::Network& net_tss() { return net_tss_; }
  snn::Network& net_cda() { return net_cda_; }

  void init(std::uint64_t seed) { reg_.init_all(seed); }

  struct ForwardTape {
    bool empty_volume = false;
    snn::Mode mode = snn::Mode::Spiking;
    repr::McsTape mcs;
    snn::Tensor4 tss_in;
    snn::Tape net_mcs, net_tss, net_cda;
    snn::Tensor4 m_mcs, m_tss; // feature maps
    std::array<PoolRecord, 3> pool;
    std::array<snn::Tensor4, 3> d; // (T,C,1,1) sub-descriptors
    snn::Tensor4 cda_out;          // (T,3,1,1)
    std::array<double, 3> w{};     // simplex weights
    std::array<std::vector<double>, 3> mean_rows; // temporal means, length C
    std::array<double, 3> row_norms{};
    std::vector<double> flat;
    double flat_norm = 0.0;
  };

  struct Output {
    std::vector<double> descriptor; // length 3C, unit norm unless degenerate
    bool degenerate = false;
    std::array<double, 3> weights{};
    repr::ReprFlags repr_flags;
  };

  // Inference in spiking mode with running BN statistics.
  Output describe_volume(const EventVolume& vol, std::uint64_t tss_seed,
                         snn::OpRecorder* rec = nullptr) const;

  // Training / oracle path. bn_training selects batch statistics.
  Output forward(const EventVolume& vol, std::uint64_t tss_seed, snn::Mode mode,
                 bool bn_training, ForwardTape& tape,
                 snn::OpRecorder* rec = nullptr) const;
  void backward(const ForwardTape& tape, const std::vector<double>& g_descriptor,
                snn::GradSink& gs) const;
  void update_bn_stats(const ForwardTape& tape, double momentum);

  // Spec-facing sub-operations, also used directly by tests.
  FeatureMaps bsr_encode(const SpikeTensor& mcs, const SpikeTensor& tss) const;
  std::array<double, 3> cda_weights(const snn::Tensor4& d1, const snn::Tensor4& d2,
                                    const snn::Tensor4& d3) const;
  std::vector<double> cda_aggregate(const snn::Tensor4& d1, const snn::Tensor4& d2,
                                    const snn::Tensor4& d3,
                                    const std::array<double, 3>& w,
                                    bool* degenerate = nullptr) const;

  snn::GraphInfo graph_info() const;

  snn::Checkpoint snapshot() const;
  void restore(const snn::Checkpoint& c) { snn::restore(c, reg_); }
  void save(const std::string& path) const { snn::save_checkpoint(snapshot(), path); }
  void load(const std::string& path) { restore(snn::load_checkpoint(path)); }

private:
  Output run(const EventVolume& vol, std::uint64_t tss_seed, snn::Mode mode,
             bool bn_training, ForwardTape* tape, snn::OpRecorder* rec) const;

  ModelConfig cfg_;
  snn::ParamRegistry reg_;
  repr::SmlpEncoder encoder_;
  snn::Network net_mcs_, net_tss_, net_cda_;
};

// Squared Euclidean distance between equal-length descriptors.
double descriptor_distance_sq(const std::vector<double>& a,
                              const std::vector<double>& b);

} // namespace sevpr::desc

#endif
