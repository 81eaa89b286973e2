#include "sevpr/snn/params.hpp"

#include "sevpr/errors.hpp"
#include "sevpr/rng.hpp"

namespace sevpr::snn {

void ParamRegistry::register_param(std::string name, std::vector<int> shape,
                                   double* w, std::size_t n, bool trainable,
                                   InitSpec init) {
  if (find(name)) throw config_error("duplicate parameter name: " + name);
  Entry e;
  e.name = std::move(name);
  e.shape = std::move(shape);
  e.w = w;
  e.n = n;
  e.trainable = trainable;
  e.init = init;
  if (trainable) {
    e.grad_off = grad_size_;
    grad_size_ += n;
  }
  entries_.push_back(std::move(e));
}

std::size_t ParamRegistry::trainable_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_)
    if (e.trainable) n += e.n;
  return n;
}

void ParamRegistry::init_all(std::uint64_t seed) const {
  for (const auto& e : entries_) {
    const std::uint64_t key = rng::label(e.name);
    switch (e.init.kind) {
      case InitSpec::Kind::Zero:
        for (std::size_t i = 0; i < e.n; ++i) e.w[i] = 0.0;
        break;
      case InitSpec::Kind::One:
        for (std::size_t i = 0; i < e.n; ++i) e.w[i] = 1.0;
        break;
      case InitSpec::Kind::Uniform:
        for (std::size_t i = 0; i < e.n; ++i)
          e.w[i] = rng::uniform(seed, {key, std::uint64_t(i)}, -e.init.bound,
                                e.init.bound);
        break;
    }
  }
}

const ParamRegistry::Entry* ParamRegistry::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return &e;
  return nullptr;
}

} // namespace sevpr::snn
