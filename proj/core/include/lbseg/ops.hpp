#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "lbseg/graph.hpp"

// Differentiable primitives. Every function records one node on the graph of
// its first argument; gradients flow to each input that needs them.
namespace lbseg::ops {

inline constexpr double kDefaultLogitEps = 1e-7;

Var sigmoid(Var x);

// ln(x'/(1-x')) with x' = clamp(x, eps, 1-eps). Inputs outside [0,1] throw
// DomainError. The derivative is zero where the clamp is active.
Var logit(Var x, double eps = kDefaultLogitEps);

// out[l,i,j] = a[l] * b[l,i,j]; `a` holds k elements (k, or k x 1 x 1).
Var mul_broadcast(Var a, Var b);

Var relu(Var x);

// y = W x + b with W: out x in, b: out, x: in.
Var linear(Var weight, Var bias, Var x);

// Zero padding that keeps the spatial size for an odd kernel and dilation.
std::size_t same_padding(std::size_t kernel, std::size_t dilation);

// Stride-1 cross-correlation with holes. x: c_in x h x w,
// weight: c_out x c_in x k x k, bias: c_out.
Var conv2d(Var x, Var weight, Var bias, std::size_t dilation, std::size_t pad);

// 2x2 max pooling with stride 2 (h, w even). Ties go to the first cell in
// row-major order.
Var max_pool2(Var x);

// Spatial pyramid max pooling over c x h x w. Level g splits each axis into g
// cells [floor(i*n/g), ceil((i+1)*n/g)). Output is level-major, then channel,
// then row-major cell: length c * sum(g^2).
Var spp_pool(Var x, std::span<const std::size_t> levels);

// Half-open rectangle of rows [row0,row1) and cols [col0,col1).
struct Rect {
  std::size_t row0 = 0, col0 = 0, row1 = 0, col1 = 0;
  friend bool operator==(const Rect&, const Rect&) = default;
};

// Per-window, per-channel max of x: k x h x w over each rectangle; n x k.
Var window_pool(Var x, std::span<const Rect> windows);

// Column-wise max over the n rows of an n x k matrix; ties to the lowest row.
Var window_max(Var preds);

// Mean softmax cross-entropy over pixels of logits: k x h x w whose target
// (row-major h*w labels) is not `ignore`. Zero when every pixel is ignored.
Var softmax_ce(Var logits, std::span<const std::uint8_t> targets, std::uint8_t ignore);

// Mean binary cross-entropy of sigmoid(logits) against 0/1 targets of the
// same element count.
Var sigmoid_ce(Var logits, std::span<const double> targets);

// Align-corners bilinear resize of k x h x w to k x out_h x out_w.
Var bilinear_upsample(Var x, std::size_t out_h, std::size_t out_w);

// Mean of the rows `ids` of an embedding table V x D; result has D elements.
Var embedding_mean(Var table, std::span<const std::size_t> ids);

// Appends a length-m vector to every location of c x h x w: (c+m) x h x w.
Var concat_meta(Var x, Var meta);

Var add(Var a, Var b);
Var scale(Var a, double factor);
Var sum(Var a);

}  // namespace lbseg::ops
