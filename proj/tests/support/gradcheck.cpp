#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace lbseg::testing {

Var weighted_sum(Var x, const Tensor& w) {
  const auto xs = x.value().data();
  const auto ws = w.data();
  double s = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) s += xs[i] * ws[i];
  return x.graph->record(Tensor::scalar(s), {x}, [w](const BackwardContext& ctx) {
    const double g = ctx.out_grad()[0];
    auto gx = ctx.input_grad(0);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * w[i];
  });
}

Tensor random_tensor(const Shape& shape, SplitMix64& rng, double lo, double hi) {
  Tensor t(shape);
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

namespace {

double evaluate(const LossBuilder& build) {
  Graph g;
  return build(g).value()[0];
}

}  // namespace

GradCheck check_gradients(const std::vector<Tensor*>& inputs, const LossBuilder& build, double step) {
  for (auto* t : inputs) {
    t->requires_grad = true;
    t->zero_grad();
  }
  {
    Graph g;
    g.backward(build(g));
  }
  GradCheck out;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor& t = *inputs[i];
    const auto analytic = *t.grad;
    for (std::size_t j = 0; j < t.numel(); ++j) {
      const double saved = t[j];
      t[j] = saved + step;
      const double up = evaluate(build);
      t[j] = saved - step;
      const double down = evaluate(build);
      t[j] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(analytic[j]), std::abs(numeric), 1e-6});
      const double err = std::abs(analytic[j] - numeric) / denom;
      ++out.checked;
      if (err > out.max_rel_error) {
        out.max_rel_error = err;
        out.worst = "input " + std::to_string(i) + ", element " + std::to_string(j);
      }
    }
  }
  return out;
}

}  // namespace lbseg::testing
