#include "lbseg/ops.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "lbseg/error.hpp"

namespace lbseg::ops {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

Graph& graph_of(Var v) {
  if (v.graph == nullptr) throw ContractError("variable is not attached to a graph");
  return *v.graph;
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_str(t.shape()));
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

struct AxisSample {
  std::size_t lo = 0, hi = 0;
  double frac = 0.0;
};

std::vector<AxisSample> align_corners_axis(std::size_t in, std::size_t out) {
  std::vector<AxisSample> s(out);
  for (std::size_t i = 0; i < out; ++i) {
    const double src =
        (out > 1 && in > 1) ? static_cast<double>(i) * static_cast<double>(in - 1) /
                                  static_cast<double>(out - 1)
                            : 0.0;
    auto lo = static_cast<std::size_t>(std::floor(src));
    lo = std::min(lo, in - 1);
    s[i].lo = lo;
    s[i].hi = std::min(lo + 1, in - 1);
    s[i].frac = src - static_cast<double>(lo);
  }
  return s;
}

}  // namespace

Var sigmoid(Var x) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) out[i] = stable_sigmoid(in[i]);
  return graph_of(x).record(std::move(out), {x}, [](const BackwardContext& ctx) {
    auto gx = ctx.input_grad(0);
    const auto& y = ctx.output();
    auto g = ctx.out_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var logit(Var x, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw DomainError("logit eps must lie in (0, 0.5)");
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) {
    const double v = in[i];
    // NaN passes through so the caller's divergence check sees it
    if (v < 0.0 || v > 1.0) {
      throw DomainError("logit input outside [0,1]: " + std::to_string(v));
    }
    const double c = std::clamp(v, eps, 1.0 - eps);
    out[i] = std::log(c) - std::log1p(-c);
  }
  return graph_of(x).record(std::move(out), {x}, [eps](const BackwardContext& ctx) {
    auto gx = ctx.input_grad(0);
    const auto& in = ctx.input(0);
    auto g = ctx.out_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      const double v = in[i];
      if (v > eps && v < 1.0 - eps) gx[i] += g[i] / (v * (1.0 - v));
    }
  });
}

Var mul_broadcast(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank(bv, 3, "mul_broadcast");
  const std::size_t k = bv.dim(0);
  if (av.numel() != k) {
    throw ShapeError("mul_broadcast: bank of " + std::to_string(av.numel()) +
                     " entries against map " + shape_str(bv.shape()));
  }
  const std::size_t plane = bv.dim(1) * bv.dim(2);
  Tensor out(bv.shape());
  for (std::size_t l = 0; l < k; ++l) {
    for (std::size_t p = 0; p < plane; ++p) out[l * plane + p] = av[l] * bv[l * plane + p];
  }
  return graph_of(b).record(std::move(out), {a, b}, [k, plane](const BackwardContext& ctx) {
    auto g = ctx.out_grad();
    const auto& av = ctx.input(0);
    const auto& bv = ctx.input(1);
    if (ctx.needs(0)) {
      auto ga = ctx.input_grad(0);
      for (std::size_t l = 0; l < k; ++l) {
        double acc = 0.0;
        for (std::size_t p = 0; p < plane; ++p) acc += g[l * plane + p] * bv[l * plane + p];
        ga[l] += acc;
      }
    }
    if (ctx.needs(1)) {
      auto gb = ctx.input_grad(1);
      for (std::size_t l = 0; l < k; ++l) {
        for (std::size_t p = 0; p < plane; ++p) gb[l * plane + p] += g[l * plane + p] * av[l];
      }
    }
  });
}

Var relu(Var x) {
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.numel(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  return graph_of(x).record(std::move(out), {x}, [](const BackwardContext& ctx) {
    auto gx = ctx.input_grad(0);
    const auto& in = ctx.input(0);
    auto g = ctx.out_grad();
    for (std::size_t i = 0; i < gx.size(); ++i) {
      if (in[i] > 0.0) gx[i] += g[i];
    }
  });
}

Var linear(Var weight, Var bias, Var x) {
  const Tensor& w = weight.value();
  require_rank(w, 2, "linear weight");
  const std::size_t n_out = w.dim(0), n_in = w.dim(1);
  if (bias.numel() != n_out || x.numel() != n_in) {
    throw ShapeError("linear: weight " + shape_str(w.shape()) + ", bias " +
                     shape_str(bias.shape()) + ", input " + shape_str(x.shape()));
  }
  // Plain loops: Eigen's vectorized dot products peel by address, which
  // would make the summation order depend on heap layout.
  Tensor out({n_out});
  const Tensor& xin = x.value();
  for (std::size_t o = 0; o < n_out; ++o) {
    const double* row = w.data().data() + o * n_in;
    double acc = 0.0;
    for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * xin[i];
    out[o] = acc + bias.value()[o];
  }
  return graph_of(x).record(
      std::move(out), {weight, bias, x}, [n_out, n_in](const BackwardContext& ctx) {
        const auto g = ctx.out_grad();
        if (ctx.needs(0)) {
          auto gw = ctx.input_grad(0);
          const Tensor& xin = ctx.input(2);
          for (std::size_t o = 0; o < n_out; ++o) {
            for (std::size_t i = 0; i < n_in; ++i) gw[o * n_in + i] += g[o] * xin[i];
          }
        }
        if (ctx.needs(1)) {
          auto gb = ctx.input_grad(1);
          for (std::size_t o = 0; o < n_out; ++o) gb[o] += g[o];
        }
        if (ctx.needs(2)) {
          auto gx = ctx.input_grad(2);
          const Tensor& wt = ctx.input(0);
          for (std::size_t o = 0; o < n_out; ++o) {
            for (std::size_t i = 0; i < n_in; ++i) gx[i] += wt[o * n_in + i] * g[o];
          }
        }
      });
}

std::size_t same_padding(std::size_t kernel, std::size_t dilation) {
  if (kernel % 2 == 0) throw ConfigError("convolution kernel size must be odd");
  return dilation * (kernel - 1) / 2;
}

Var conv2d(Var x, Var weight, Var bias, std::size_t dilation, std::size_t pad) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  require_rank(xv, 3, "conv2d input");
  require_rank(wv, 4, "conv2d weight");
  const std::size_t c_in = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
  const std::size_t c_out = wv.dim(0), ks = wv.dim(2);
  if (wv.dim(2) != wv.dim(3)) throw ConfigError("conv2d kernel must be square");
  if (ks % 2 == 0) throw ConfigError("conv2d kernel size must be odd");
  if (dilation < 1) throw ConfigError("conv2d dilation must be >= 1");
  if (wv.dim(1) != c_in) {
    throw ShapeError("conv2d: weight " + shape_str(wv.shape()) + " vs input " +
                     shape_str(xv.shape()));
  }
  if (bias.numel() != c_out) throw ShapeError("conv2d: bias length mismatch");
  const std::size_t reach = dilation * (ks - 1);
  if (h + 2 * pad <= reach || w + 2 * pad <= reach) {
    throw ShapeError("conv2d: kernel reach exceeds padded input");
  }
  const std::size_t oh = h + 2 * pad - reach, ow = w + 2 * pad - reach;
  const std::size_t rows = c_in * ks * ks, cols_n = oh * ow;
  const bool pointwise = ks == 1 && pad == 0;

  // im2col; 1x1 kernels read the input directly.
  auto cols = std::make_shared<std::vector<double>>();
  if (!pointwise) {
    cols->assign(rows * cols_n, 0.0);
    for (std::size_t ci = 0; ci < c_in; ++ci) {
      for (std::size_t ki = 0; ki < ks; ++ki) {
        for (std::size_t kj = 0; kj < ks; ++kj) {
          double* dst = cols->data() + ((ci * ks + ki) * ks + kj) * cols_n;
          for (std::size_t oi = 0; oi < oh; ++oi) {
            const auto si = static_cast<std::ptrdiff_t>(oi + ki * dilation) -
                            static_cast<std::ptrdiff_t>(pad);
            if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
            const double* src = xv.data().data() + (ci * h + static_cast<std::size_t>(si)) * w;
            for (std::size_t oj = 0; oj < ow; ++oj) {
              const auto sj = static_cast<std::ptrdiff_t>(oj + kj * dilation) -
                              static_cast<std::ptrdiff_t>(pad);
              if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w)) continue;
              dst[oi * ow + oj] = src[sj];
            }
          }
        }
      }
    }
  }

  const auto er = static_cast<Eigen::Index>(rows);
  const auto ec = static_cast<Eigen::Index>(cols_n);
  const auto eo = static_cast<Eigen::Index>(c_out);
  Tensor out({c_out, oh, ow});
  {
    ConstMap wm(wv.data().data(), eo, er);
    ConstMap cm(pointwise ? xv.data().data() : cols->data(), er, ec);
    MutMap om(out.data().data(), eo, ec);
    om.noalias() = wm * cm;
    Eigen::Map<const Eigen::VectorXd> bv(bias.value().data().data(), eo);
    om.colwise() += bv;
  }

  return graph_of(x).record(
      std::move(out), {x, weight, bias},
      [=](const BackwardContext& ctx) {
        ConstMap g(ctx.out_grad().data(), eo, ec);
        const double* col_data = pointwise ? ctx.input(0).data().data() : cols->data();
        if (ctx.needs(1)) {
          MutMap gw(ctx.input_grad(1).data(), eo, er);
          gw.noalias() += g * ConstMap(col_data, er, ec).transpose();
        }
        if (ctx.needs(2)) {
          auto gb = ctx.input_grad(2);
          const double* gp = ctx.out_grad().data();
          for (std::size_t o = 0; o < c_out; ++o) {
            double acc = 0.0;
            for (std::size_t p = 0; p < cols_n; ++p) acc += gp[o * cols_n + p];
            gb[o] += acc;
          }
        }
        if (!ctx.needs(0)) return;
        ConstMap wm(ctx.input(1).data().data(), eo, er);
        auto gx = ctx.input_grad(0);
        if (pointwise) {
          MutMap gxm(gx.data(), er, ec);
          gxm.noalias() += wm.transpose() * g;
          return;
        }
        RowMat gcols = wm.transpose() * g;
        for (std::size_t ci = 0; ci < c_in; ++ci) {
          for (std::size_t ki = 0; ki < ks; ++ki) {
            for (std::size_t kj = 0; kj < ks; ++kj) {
              const double* src = gcols.data() + ((ci * ks + ki) * ks + kj) * cols_n;
              for (std::size_t oi = 0; oi < oh; ++oi) {
                const auto si = static_cast<std::ptrdiff_t>(oi + ki * dilation) -
                                static_cast<std::ptrdiff_t>(pad);
                if (si < 0 || si >= static_cast<std::ptrdiff_t>(h)) continue;
                double* dst = gx.data() + (ci * h + static_cast<std::size_t>(si)) * w;
                for (std::size_t oj = 0; oj < ow; ++oj) {
                  const auto sj = static_cast<std::ptrdiff_t>(oj + kj * dilation) -
                                  static_cast<std::ptrdiff_t>(pad);
                  if (sj < 0 || sj >= static_cast<std::ptrdiff_t>(w)) continue;
                  dst[sj] += src[oi * ow + oj];
                }
              }
            }
          }
        }
      });
}

Var max_pool2(Var x) {
  const Tensor& in = x.value();
  require_rank(in, 3, "max_pool2");
  const std::size_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  if (h % 2 != 0 || w % 2 != 0) {
    throw ShapeError("max_pool2 needs even spatial size, got " + shape_str(in.shape()));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({c, oh, ow});
  auto arg = std::make_shared<std::vector<std::size_t>>(out.numel());
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = (ch * h + 2 * i) * w + 2 * j;
        for (std::size_t di = 0; di < 2; ++di) {
          for (std::size_t dj = 0; dj < 2; ++dj) {
            const std::size_t idx = (ch * h + 2 * i + di) * w + 2 * j + dj;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (ch * oh + i) * ow + j;
        out[o] = in[best];
        (*arg)[o] = best;
      }
    }
  }
  return graph_of(x).record(std::move(out), {x}, [arg](const BackwardContext& ctx) {
    auto gx = ctx.input_grad(0);
    auto g = ctx.out_grad();
    for (std::size_t o = 0; o < g.size(); ++o) gx[(*arg)[o]] += g[o];
  });
}

Var spp_pool(Var x, std::span<const std::size_t> levels) {
  const Tensor& in = x.value();
  require_rank(in, 3, "spp_pool");
  if (levels.empty()) throw ConfigError("spp_pool needs at least one pyramid level");
  const std::size_t c = in.dim(0), h = in.dim(1), w = in.dim(2);
  std::size_t total = 0;
  for (auto g : levels) {
    if (g == 0 || g > h || g > w) {
      throw ConfigError("spp level " + std::to_string(g) + " does not fit feature map " +
                        shape_str(in.shape()));
    }
    total += c * g * g;
  }
  Tensor out({total});
  auto arg = std::make_shared<std::vector<std::size_t>>(total);
  std::size_t o = 0;
  for (auto g : levels) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t ci = 0; ci < g; ++ci) {
        const std::size_t r0 = ci * h / g, r1 = ((ci + 1) * h + g - 1) / g;
        for (std::size_t cj = 0; cj < g; ++cj) {
          const std::size_t c0 = cj * w / g, c1 = ((cj + 1) * w + g - 1) / g;
          std::size_t best = (ch * h + r0) * w + c0;
          for (std::size_t i = r0; i < r1; ++i) {
            for (std::size_t j = c0; j < c1; ++j) {
              const std::size_t idx = (ch * h + i) * w + j;
              if (in[idx] > in[best]) best = idx;
            }
          }
          out[o] = in[best];
          (*arg)[o++] = best;
        }
      }
    }
  }
  return graph_of(x).record(std::move(out), {x}, [arg](const BackwardContext& ctx) {
    auto gx = ctx.input_grad(0);
    auto g = ctx.out_grad();
    for (std::size_t i = 0; i < g.size(); ++i) gx[(*arg)[i]] += g[i];
  });
}

Var window_pool(Var x, std::span<const Rect> windows) {
  const Tensor& in = x.value();
  require_rank(in, 3, "window_pool");
  if (windows.empty()) throw ShapeError("window_pool needs at least one window");
  const std::size_t k = in.dim(0), h = in.dim(1), w = in.dim(2);
  const std::size_t n = windows.size();
  Tensor out({n, k});
  auto arg = std::make_shared<std::vector<std::size_t>>(n * k);
  for (std::size_t wi = 0; wi < n; ++wi) {
    const Rect& r = windows[wi];
    if (r.row0 >= r.row1 || r.col0 >= r.col1 || r.row1 > h || r.col1 > w) {
      throw ShapeError("window_pool: window outside the map");
    }
    for (std::size_t l = 0; l < k; ++l) {
      std::size_t best = (l * h + r.row0) * w + r.col0;
      for (std::size_t i = r.row0; i < r.row1; ++i) {
        for (std::size_t j = r.col0; j < r.col1; ++j) {
          const std::size_t idx = (l * h + i) * w + j;
          if (in[idx] > in[best]) best = idx;
        }
      }
      out[wi * k + l] = in[best];
      (*arg)[wi * k + l] = best;
    }
  }
  return graph_of(x).record(std::move(out), {x}, [arg](const BackwardContext& ctx) {
    auto gx = ctx.input_grad(0);
    auto g = ctx.out_grad();
    for (std::size_t i = 0; i < g.size(); ++i) gx[(*arg)[i]] += g[i];
  });
}

Var window_max(Var preds) {
  const Tensor& in = preds.value();
  require_rank(in, 2, "window_max");
  const std::size_t n = in.dim(0), k = in.dim(1);
  Tensor out({k});
  auto arg = std::make_shared<std::vector<std::size_t>>(k);
  for (std::size_t l = 0; l < k; ++l) {
    std::size_t best = l;
    for (std::size_t r = 1; r < n; ++r) {
      if (in[r * k + l] > in[best]) best = r * k + l;
    }
    out[l] = in[best];
    (*arg)[l] = best;
  }
  return graph_of(preds).record(std::move(out), {preds}, [arg](const BackwardContext& ctx) {
    auto gx = ctx.input_grad(0);
    auto g = ctx.out_grad();
    for (std::size_t l = 0; l < g.size(); ++l) gx[(*arg)[l]] += g[l];
  });
}

Var softmax_ce(Var logits, std::span<const std::uint8_t> targets, std::uint8_t ignore) {
  const Tensor& in = logits.value();
  require_rank(in, 3, "softmax_ce");
  const std::size_t k = in.dim(0), plane = in.dim(1) * in.dim(2);
  if (targets.size() != plane) throw ShapeError("softmax_ce: target size mismatch");
  auto probs = std::make_shared<std::vector<double>>(k * plane, 0.0);
  auto labels = std::make_shared<std::vector<std::uint8_t>>(targets.begin(), targets.end());
  double total = 0.0;
  std::size_t valid = 0;
  for (std::size_t p = 0; p < plane; ++p) {
    const std::uint8_t t = targets[p];
    if (t == ignore) continue;
    if (t >= k) throw DomainError("softmax_ce: label " + std::to_string(t) + " >= k");
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < k; ++l) mx = std::max(mx, in[l * plane + p]);
    double z = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
      const double e = std::exp(in[l * plane + p] - mx);
      (*probs)[l * plane + p] = e;
      z += e;
    }
    for (std::size_t l = 0; l < k; ++l) (*probs)[l * plane + p] /= z;
    total += mx + std::log(z) - in[t * plane + p];
    ++valid;
  }
  const double loss = valid ? total / static_cast<double>(valid) : 0.0;
  return graph_of(logits).record(
      Tensor::scalar(loss), {logits},
      [probs, labels, k, plane, valid, ignore](const BackwardContext& ctx) {
        if (valid == 0) return;
        auto gx = ctx.input_grad(0);
        const double g = ctx.out_grad()[0] / static_cast<double>(valid);
        for (std::size_t p = 0; p < plane; ++p) {
          const std::uint8_t t = (*labels)[p];
          if (t == ignore) continue;
          for (std::size_t l = 0; l < k; ++l) {
            const double d = (*probs)[l * plane + p] - (l == t ? 1.0 : 0.0);
            gx[l * plane + p] += g * d;
          }
        }
      });
}

Var sigmoid_ce(Var logits, std::span<const double> targets) {
  const Tensor& in = logits.value();
  if (targets.size() != in.numel()) throw ShapeError("sigmoid_ce: target size mismatch");
  auto t = std::make_shared<std::vector<double>>(targets.begin(), targets.end());
  double total = 0.0;
  for (std::size_t i = 0; i < in.numel(); ++i) total += softplus(in[i]) - (*t)[i] * in[i];
  const double n = static_cast<double>(in.numel());
  return graph_of(logits).record(Tensor::scalar(total / n), {logits},
                                 [t, n](const BackwardContext& ctx) {
                                   auto gx = ctx.input_grad(0);
                                   const auto& in = ctx.input(0);
                                   const double g = ctx.out_grad()[0] / n;
                                   for (std::size_t i = 0; i < gx.size(); ++i) {
                                     gx[i] += g * (stable_sigmoid(in[i]) - (*t)[i]);
                                   }
                                 });
}

Var bilinear_upsample(Var x, std::size_t out_h, std::size_t out_w) {
  const Tensor& in = x.value();
  require_rank(in, 3, "bilinear_upsample");
  if (out_h == 0 || out_w == 0) throw ShapeError("bilinear_upsample: empty output");
  const std::size_t k = in.dim(0), h = in.dim(1), w = in.dim(2);
  auto rs = std::make_shared<std::vector<AxisSample>>(align_corners_axis(h, out_h));
  auto cs = std::make_shared<std::vector<AxisSample>>(align_corners_axis(w, out_w));
  Tensor out({k, out_h, out_w});
  for (std::size_t l = 0; l < k; ++l) {
    for (std::size_t i = 0; i < out_h; ++i) {
      const AxisSample& r = (*rs)[i];
      for (std::size_t j = 0; j < out_w; ++j) {
        const AxisSample& c = (*cs)[j];
        const double top = in.at(l, r.lo, c.lo) * (1.0 - c.frac) + in.at(l, r.lo, c.hi) * c.frac;
        const double bot = in.at(l, r.hi, c.lo) * (1.0 - c.frac) + in.at(l, r.hi, c.hi) * c.frac;
        out.at(l, i, j) = top * (1.0 - r.frac) + bot * r.frac;
      }
    }
  }
  return graph_of(x).record(
      std::move(out), {x}, [rs, cs, k, h, w, out_h, out_w](const BackwardContext& ctx) {
        auto gx = ctx.input_grad(0);
        auto g = ctx.out_grad();
        for (std::size_t l = 0; l < k; ++l) {
          for (std::size_t i = 0; i < out_h; ++i) {
            const AxisSample& r = (*rs)[i];
            for (std::size_t j = 0; j < out_w; ++j) {
              const AxisSample& c = (*cs)[j];
              const double gv = g[(l * out_h + i) * out_w + j];
              gx[(l * h + r.lo) * w + c.lo] += gv * (1.0 - r.frac) * (1.0 - c.frac);
              gx[(l * h + r.lo) * w + c.hi] += gv * (1.0 - r.frac) * c.frac;
              gx[(l * h + r.hi) * w + c.lo] += gv * r.frac * (1.0 - c.frac);
              gx[(l * h + r.hi) * w + c.hi] += gv * r.frac * c.frac;
            }
          }
        }
      });
}

Var embedding_mean(Var table, std::span<const std::size_t> ids) {
  const Tensor& tv = table.value();
  require_rank(tv, 2, "embedding_mean");
  if (ids.empty()) throw DomainError("embedding_mean: empty id sequence");
  const std::size_t vocab = tv.dim(0), d = tv.dim(1);
  auto idv = std::make_shared<std::vector<std::size_t>>(ids.begin(), ids.end());
  Tensor out({d});
  for (auto id : ids) {
    if (id >= vocab) throw DomainError("embedding_mean: id " + std::to_string(id) + " >= vocab");
    for (std::size_t j = 0; j < d; ++j) out[j] += tv[id * d + j];
  }
  const double n = static_cast<double>(ids.size());
  for (std::size_t j = 0; j < d; ++j) out[j] /= n;
  return graph_of(table).record(std::move(out), {table}, [idv, d, n](const BackwardContext& ctx) {
    auto gt = ctx.input_grad(0);
    auto g = ctx.out_grad();
    for (auto id : *idv) {
      for (std::size_t j = 0; j < d; ++j) gt[id * d + j] += g[j] / n;
    }
  });
}

Var concat_meta(Var x, Var meta) {
  const Tensor& xv = x.value();
  require_rank(xv, 3, "concat_meta");
  const std::size_t c = xv.dim(0), plane = xv.dim(1) * xv.dim(2), m = meta.numel();
  Tensor out({c + m, xv.dim(1), xv.dim(2)});
  std::copy(xv.data().begin(), xv.data().end(), out.data().begin());
  for (std::size_t q = 0; q < m; ++q) {
    std::fill_n(out.data().begin() + static_cast<std::ptrdiff_t>((c + q) * plane), plane,
                meta.value()[q]);
  }
  return graph_of(x).record(std::move(out), {x, meta}, [c, plane, m](const BackwardContext& ctx) {
    auto g = ctx.out_grad();
    if (ctx.needs(0)) {
      auto gx = ctx.input_grad(0);
      for (std::size_t i = 0; i < c * plane; ++i) gx[i] += g[i];
    }
    if (ctx.needs(1)) {
      auto gm = ctx.input_grad(1);
      for (std::size_t q = 0; q < m; ++q) {
        double acc = 0.0;
        for (std::size_t p = 0; p < plane; ++p) acc += g[(c + q) * plane + p];
        gm[q] += acc;
      }
    }
  });
}

Var add(Var a, Var b) {
  if (a.shape() != b.shape()) {
    throw ShapeError("add: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  return graph_of(a).record(std::move(out), {a, b}, [](const BackwardContext& ctx) {
    auto g = ctx.out_grad();
    for (std::size_t s = 0; s < 2; ++s) {
      if (!ctx.needs(s)) continue;
      auto gi = ctx.input_grad(s);
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * factor;
  return graph_of(a).record(std::move(out), {a}, [factor](const BackwardContext& ctx) {
    auto gi = ctx.input_grad(0);
    auto g = ctx.out_grad();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i] * factor;
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  return graph_of(a).record(Tensor::scalar(total), {a}, [](const BackwardContext& ctx) {
    auto gi = ctx.input_grad(0);
    const double g = ctx.out_grad()[0];
    for (auto& v : gi) v += g;
  });
}

}  // namespace lbseg::ops
