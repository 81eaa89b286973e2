#include "sevpr/energy.hpp"

#include <cstdio>
#include <sstream>

#include "sevpr/errors.hpp"

namespace sevpr::energy {

double energy_joules(double o_ac, double o_mac) {
  if (o_ac < 0 || o_mac < 0)
    throw config_error("energy: operation counts must be >= 0");
  return kMacJoules * o_mac + kAcJoules * o_ac;
}

double energy_mj(double o_ac, double o_mac) {
  return energy_joules(o_ac, o_mac) * 1e3;
}

double OpCountReport::total_ac() const {
  double s = 0;
  for (const auto& r : rows) s += r.o_ac;
  return s;
}

double OpCountReport::total_mac() const {
  double s = 0;
  for (const auto& r : rows) s += r.o_mac;
  return s;
}

long long OpCountReport::total_params() const {
  long long s = other_params;
  for (const auto& r : rows) s += r.params;
  return s;
}

namespace {

OpCountReport base_report(const snn::GraphInfo& g, std::string mode) {
  OpCountReport rep;
  rep.mode = std::move(mode);
  rep.t_steps = g.t_steps;
  rep.other_params = g.other_params;
  for (const auto& l : g.layers)
    rep.rows.push_back({l.name, 0.0, 0.0, l.params});
  rep.notes.push_back(
      "normalization/pooling ops and bias additions excluded from counts");
  return rep;
}

} // namespace

OpCountReport count_ops_ann(const snn::GraphInfo& g) {
  OpCountReport rep = base_report(g, "ann");
  for (std::size_t i = 0; i < g.layers.size(); ++i)
    rep.rows[i].o_mac = g.layers[i].synops_per_step;
  rep.notes.push_back(
      "event-to-spike encoder cost is data-dependent and reported only in "
      "snn-measured mode");
  return rep;
}

OpCountReport count_ops_static(const snn::GraphInfo& g, double assumed_rate) {
  if (assumed_rate < 0 || assumed_rate > 1)
    throw config_error("count_ops_static: rate must be in [0,1]");
  OpCountReport rep = base_report(g, "snn-static");
  for (std::size_t i = 0; i < g.layers.size(); ++i) {
    const auto& l = g.layers[i];
    if (l.spike_input)
      rep.rows[i].o_ac = assumed_rate * l.synops_per_step * l.t_steps;
    else
      rep.rows[i].o_mac = l.synops_per_step * l.t_steps;
  }
  char buf[80];
  std::snprintf(buf, sizeof buf, "assumed firing rate %.4f (no recording supplied)",
                assumed_rate);
  rep.notes.push_back(buf);
  rep.notes.push_back(
      "event-to-spike encoder cost is data-dependent and reported only in "
      "snn-measured mode");
  return rep;
}

OpCountReport count_ops_measured(const snn::GraphInfo& g,
                                 const snn::OpRecorder& rec, int samples) {
  if (samples < 1)
    throw config_error("count_ops_measured: needs at least one recorded sample");
  if (rec.ops.empty())
    throw config_error("count_ops_measured: recorder holds no counts; run a "
                       "recording forward pass first");
  OpCountReport rep = base_report(g, "snn-measured");
  for (auto& row : rep.rows) {
    auto it = rec.ops.find(row.name);
    if (it == rec.ops.end()) continue;
    row.o_ac = it->second.ac / samples;
    row.o_mac = it->second.mac / samples;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "averaged over %d recorded input(s)", samples);
  rep.notes.push_back(buf);
  return rep;
}

SpikeRates measure_spike_rates(const snn::OpRecorder& rec) {
  SpikeRates out;
  for (const auto& [name, st] : rec.lif) {
    SpikeRates::Row r;
    r.layer = name;
    r.rate = st.neuron_steps > 0 ? st.spikes / st.neuron_steps : 0.0;
    out.rows.push_back(std::move(r));
  }
  return out;
}

std::string report_table(const OpCountReport& r) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "mode=%s  T=%d\n", r.mode.c_str(), r.t_steps);
  os << buf;
  os << "layer                        params      O_AC          O_MAC\n";
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%-26s %9lld  %12.6g  %12.6g\n",
                  row.name.c_str(), row.params, row.o_ac, row.o_mac);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "%-26s %9lld\n", "other (normalization)",
                r.other_params);
  os << buf;
  std::snprintf(buf, sizeof buf,
                "total: params=%lld  O_AC=%.6g  O_MAC=%.6g  energy=%.3f mJ\n",
                r.total_params(), r.total_ac(), r.total_mac(), r.energy_mj());
  os << buf;
  for (const auto& n : r.notes) os << "# " << n << "\n";
  return os.str();
}

std::string report_csv(const OpCountReport& r) {
  std::ostringstream os;
  os << "layer,params,o_ac,o_mac\n";
  char buf[160];
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%s,%lld,%.9g,%.9g\n", row.name.c_str(),
                  row.params, row.o_ac, row.o_mac);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "other,%lld,0,0\n", r.other_params);
  os << buf;
  std::snprintf(buf, sizeof buf, "total,%lld,%.9g,%.9g\n", r.total_params(),
                r.total_ac(), r.total_mac());
  os << buf;
  std::snprintf(buf, sizeof buf, "energy_mj,,%.3f,\n", r.energy_mj());
  os << buf;
  return os.str();
}

} // namespace sevpr::energy
