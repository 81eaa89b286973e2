#ifndef SEVPR_ENERGY_HPP
#define SEVPR_ENERGY_HPP

#include <string>
#include <vector>

#include "sevpr/snn/graph.hpp"

namespace sevpr::energy {

// 45 nm CMOS cost model: 4.6 pJ per MAC, 0.9 pJ per AC.
inline constexpr double kMacJoules = 4.6e-12;
inline constexpr double kAcJoules = 0.9e-12;

double energy_joules(double o_ac, double o_mac);
double energy_mj(double o_ac, double o_mac);

struct OpCountReport {
  struct Row {
    std::string name;
    double o_ac = 0;
    double o_mac = 0;
    long long params = 0;
  };
  std::string mode; // ann | snn-static | snn-measured
  int t_steps = 1;
  std::vector<Row> rows;
  long long other_params = 0;
  std::vector<std::string> notes;

  double total_ac() const;
  double total_mac() const;
  long long total_params() const;
  double energy_mj() const { return energy::energy_mj(total_ac(), total_mac()); }
};

// ann: the non-spiking counterpart — every synaptic op is a MAC, one pass
// (no temporal multiplicity).
OpCountReport count_ops_ann(const snn::GraphInfo& g);

// snn-static: spike-gated layers accumulate at an assumed firing rate over
// T steps; real-valued layers are MACs over T steps.
OpCountReport count_ops_static(const snn::GraphInfo& g, double assumed_rate);

// snn-measured: counts gathered by a recording forward pass, averaged over
// `samples` inputs.
OpCountReport count_ops_measured(const snn::GraphInfo& g,
                                 const snn::OpRecorder& rec, int samples);

struct SpikeRates {
  struct Row {
    std::string layer;
    double rate = 0; // spikes / (neurons * T), in [0,1]
  };
  std::vector<Row> rows;
};

SpikeRates measure_spike_rates(const snn::OpRecorder& rec);

std::string report_table(const OpCountReport& r);
std::string report_csv(const OpCountReport& r);

} // namespace sevpr::energy

#endif
