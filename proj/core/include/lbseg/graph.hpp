#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "lbseg/tensor.hpp"

namespace lbseg {

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t numel() const { return value().numel(); }
};

// What a primitive's backward closure sees: the output gradient and mutable
// gradient buffers for its inputs (empty spans for inputs that need none).
class BackwardContext {
 public:
  std::span<const double> out_grad() const { return out_grad_; }
  const Tensor& output() const { return *output_; }
  const Tensor& input(std::size_t i) const { return *inputs_[i]; }
  std::span<double> input_grad(std::size_t i) const { return input_grads_[i]; }
  bool needs(std::size_t i) const { return !input_grads_[i].empty(); }

 private:
  friend class Graph;
  std::span<const double> out_grad_;
  const Tensor* output_ = nullptr;
  std::vector<const Tensor*> inputs_;
  std::vector<std::span<double>> input_grads_;
};

using BackwardFn = std::function<void(const BackwardContext&)>;

// Append-only tape of primitive applications. Nodes are recorded in
// execution order, so the tape is topologically sorted by construction and
// backward is a single reverse sweep.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Leaf holding a value that never receives a gradient.
  Var constant(Tensor value);

  // Leaf bound to an external tensor. When `bound.requires_grad` is set,
  // backward() accumulates into `bound.grad`. `bound` must outlive backward().
  Var leaf(Tensor& bound);

  // Used by primitives: records a node whose inputs precede it.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor& value(std::size_t id) const { return nodes_.at(id).value; }
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }

  // Gradient of the last backward() loss with respect to node `v`. Empty when
  // the node does not participate in differentiation.
  std::span<const double> grad(Var v) const { return nodes_.at(v.id).grad; }

  // Reverse sweep from a scalar loss. Throws ContractError otherwise.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  // Number of backward closures run by the most recent backward().
  std::size_t last_backward_visits() const { return visits_; }

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Tensor* bound = nullptr;
    bool needs_grad = false;
    std::vector<double> grad;
  };
  std::vector<Node> nodes_;
  std::size_t visits_ = 0;
};

}  // namespace lbseg
