#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "lbseg/graph.hpp"
#include "lbseg/rng.hpp"
#include "lbseg/tensor.hpp"

namespace lbseg {

// Named learnable tensors, iterated in name order.
class ParamStore {
 public:
  using Map = std::map<std::string, Tensor>;

  // Zero-filled trainable tensor. Throws ConfigError on duplicate names.
  Tensor& create(const std::string& name, Shape shape);
  // Uniform in +-sqrt(6 / fan_in).
  Tensor& create_he_uniform(const std::string& name, Shape shape, std::size_t fan_in, SplitMix64& rng);

  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }

  Var bind(Graph& g, const std::string& name) { return g.leaf(at(name)); }

  void zero_grad();
  std::size_t size() const { return tensors_.size(); }
  std::size_t numel() const;

  Map& tensors() { return tensors_; }
  const Map& tensors() const { return tensors_; }

  // Replaces values from `loaded`; names and shapes must match exactly.
  void assign(const Map& loaded);

 private:
  Map tensors_;
};

}  // namespace lbseg
