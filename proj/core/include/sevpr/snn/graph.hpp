#ifndef SEVPR_SNN_GRAPH_HPP
#define SEVPR_SNN_GRAPH_HPP

#include <map>
#include <string>
#include <vector>

namespace sevpr::snn {

// Static per-layer metadata for synaptic-operation counting. One entry per
// conv/FC layer; normalization, pooling and elementwise ops are excluded
// from op counts by design (their parameters are still tallied).
struct LayerDesc {
  std::string name;
  enum class Kind { Conv, Fc } kind = Kind::Conv;
  long long params = 0;
  double synops_per_step = 0; // out_elements * taps (full density)
  int t_steps = 1;            // temporal multiplicity in spiking modes
  bool spike_input = false;   // binary input -> AC; real input -> MAC
};

struct GraphInfo {
  std::vector<LayerDesc> layers;
  long long other_params = 0; // BN scale/shift etc.
  int t_steps = 1;

  long long total_params() const {
    long long p = other_params;
    for (const auto& l : layers) p += l.params;
    return p;
  }
};

// Collects actual operation and spike counts during a recording forward
// pass. Keyed by layer name; std::map keeps report order deterministic.
struct OpRecorder {
  struct Ops {
    double ac = 0;
    double mac = 0;
  };
  struct LifStat {
    double spikes = 0;
    double neuron_steps = 0;
  };
  std::map<std::string, Ops> ops;
  std::map<std::string, LifStat> lif;

  void add_ac(const std::string& name, double v) { ops[name].ac += v; }
  void add_mac(const std::string& name, double v) { ops[name].mac += v; }
  void add_lif(const std::string& name, double spikes, double neuron_steps) {
    auto& s = lif[name];
    s.spikes += spikes;
    s.neuron_steps += neuron_steps;
  }
};

} // namespace sevpr::snn

#endif
