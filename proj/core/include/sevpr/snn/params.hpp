#ifndef SEVPR_SNN_PARAMS_HPP
#define SEVPR_SNN_PARAMS_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace sevpr::snn {

struct InitSpec {
  enum class Kind { Zero, One, Uniform } kind = Kind::Zero;
  double bound = 0.0; // Uniform draws from [-bound, bound)
  static InitSpec zero() { return {Kind::Zero, 0.0}; }
  static InitSpec one() { return {Kind::One, 0.0}; }
  static InitSpec uniform(double b) { return {Kind::Uniform, b}; }
};

// Central registry of named parameter tensors. Layers own the storage; the
// registry keeps stable views used by init, SGD steps, gradient sinks,
// finite-difference probes and checkpoints. Non-trainable entries (BN
// running statistics) are checkpointed but never receive gradients.
class ParamRegistry {
public:
  struct Entry {
    std::string name;
    std::vector<int> shape;
    double* w = nullptr;
    std::size_t n = 0;
    bool trainable = true;
    InitSpec init;
    std::size_t grad_off = 0; // valid when trainable
  };

  void register_param(std::string name, std::vector<int> shape, double* w,
                      std::size_t n, bool trainable, InitSpec init);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t grad_size() const { return grad_size_; }
  std::size_t trainable_count() const;

  // Deterministic init: element i of entry `name` is a pure function of
  // (seed, name, i).
  void init_all(std::uint64_t seed) const;

  const Entry* find(const std::string& name) const;

private:
  std::vector<Entry> entries_;
  std::size_t grad_size_ = 0;
};

// Flat gradient buffer matching a registry's trainable layout. Separate
// sinks let concurrent backward passes accumulate independently before a
// deterministic reduction.
struct GradSink {
  std::vector<double> g;
  explicit GradSink(const ParamRegistry& reg) : g(reg.grad_size(), 0.0) {}
  void zero() { std::fill(g.begin(), g.end(), 0.0); }
  void add(const GradSink& o) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += o.g[i];
  }
};

} // namespace sevpr::snn

#endif
