#include "lbseg/params.hpp"

#include <cmath>

#include "lbseg/error.hpp"

namespace lbseg {

Tensor& ParamStore::create(const std::string& name, Shape shape) {
  auto [it, inserted] = tensors_.emplace(name, Tensor(std::move(shape)));
  if (!inserted) throw ConfigError("duplicate parameter " + name);
  it->second.requires_grad = true;
  return it->second;
}

Tensor& ParamStore::create_he_uniform(const std::string& name, Shape shape, std::size_t fan_in,
                                      SplitMix64& rng) {
  Tensor& t = create(name, std::move(shape));
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : t.data()) v = rng.uniform(-bound, bound);
  return t;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ConfigError("missing parameter " + name);
  return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = tensors_.find(name);
  if (it == tensors_.end()) throw ConfigError("missing parameter " + name);
  return it->second;
}

void ParamStore::zero_grad() {
  for (auto& [_, t] : tensors_) t.zero_grad();
}

std::size_t ParamStore::numel() const {
  std::size_t n = 0;
  for (const auto& [_, t] : tensors_) n += t.numel();
  return n;
}

void ParamStore::assign(const Map& loaded) {
  if (loaded.size() != tensors_.size()) {
    throw FormatError("checkpoint holds " + std::to_string(loaded.size()) + " tensors, model has " +
                      std::to_string(tensors_.size()));
  }
  for (auto& [name, t] : tensors_) {
    auto it = loaded.find(name);
    if (it == loaded.end()) throw FormatError("checkpoint lacks tensor " + name);
    if (it->second.shape() != t.shape()) {
      throw FormatError("checkpoint tensor " + name + " has shape " + shape_str(it->second.shape()) +
                        ", expected " + shape_str(t.shape()));
    }
    std::copy(it->second.data().begin(), it->second.data().end(), t.data().begin());
  }
}

}  // namespace lbseg
