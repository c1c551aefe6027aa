#include "lbseg/graph.hpp"

#include <algorithm>

#include "lbseg/error.hpp"

namespace lbseg {

const Tensor& Var::value() const { return graph->value(id); }

Var Graph::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false, {}});
  return Var{this, nodes_.size() - 1};
}

Var Graph::leaf(Tensor& bound) {
  nodes_.push_back(Node{bound, {}, {}, &bound, bound.requires_grad, {}});
  nodes_.back().value.requires_grad = false;
  nodes_.back().value.grad.reset();
  return Var{this, nodes_.size() - 1};
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node node{std::move(value), {}, std::move(backward), nullptr, false, {}};
  node.inputs.reserve(inputs.size());
  for (const Var& in : inputs) {
    if (in.graph != this || in.id >= nodes_.size()) {
      throw ContractError("primitive input does not belong to this graph");
    }
    node.inputs.push_back(in.id);
    node.needs_grad = node.needs_grad || nodes_[in.id].needs_grad;
  }
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Graph::backward(Var loss) {
  if (loss.graph != this) throw ContractError("loss does not belong to this graph");
  Node& root = nodes_.at(loss.id);
  if (root.value.numel() != 1) {
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_str(root.value.shape()));
  }
  for (auto& n : nodes_) n.grad.clear();
  visits_ = 0;
  if (!root.needs_grad) return;
  root.grad.assign(1, 1.0);

  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.grad.empty()) continue;
    if (node.bound != nullptr) {
      Tensor& t = *node.bound;
      if (!t.grad || t.grad->size() != node.grad.size()) t.zero_grad();
      std::transform(t.grad->begin(), t.grad->end(), node.grad.begin(), t.grad->begin(),
                     std::plus<>());
      continue;
    }
    if (!node.backward) continue;

    BackwardContext ctx;
    ctx.out_grad_ = node.grad;
    ctx.output_ = &node.value;
    for (std::size_t in : node.inputs) {
      Node& src = nodes_[in];
      ctx.inputs_.push_back(&src.value);
      if (src.needs_grad) {
        if (src.grad.empty()) src.grad.assign(src.value.numel(), 0.0);
        ctx.input_grads_.emplace_back(src.grad);
      } else {
        ctx.input_grads_.emplace_back();
      }
    }
    node.backward(ctx);
    ++visits_;
  }
}

}  // namespace lbseg
