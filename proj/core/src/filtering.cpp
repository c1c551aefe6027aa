#include "lbseg/filtering.hpp"

#include "lbseg/error.hpp"

namespace lbseg {

void FilterMode::validate() const {
  if (!(eps > 0.0 && eps < 0.5)) throw ConfigError("filter eps must lie in (0, 0.5)");
}

Var holistic_filter(Var bank, Var seg_map, double eps) {
  const auto& s = seg_map.shape();
  if (s.size() != 3) throw ShapeError("segmentation map must be k x h x w, got " + shape_str(s));
  if (bank.numel() != s[0]) {
    throw ShapeError("bank has " + std::to_string(bank.numel()) + " classes, map has " +
                     std::to_string(s[0]));
  }
  return ops::logit(ops::mul_broadcast(ops::sigmoid(bank), ops::sigmoid(seg_map)), eps);
}

Var filter_and_upsample(Var bank, Var seg_map, std::size_t height, std::size_t width,
                        const FilterMode& mode) {
  mode.validate();
  const auto& s = seg_map.shape();
  if (s.size() != 3) throw ShapeError("segmentation map must be k x h x w");
  if (height < s[1] || width < s[2]) throw ShapeError("upsampling target smaller than map");
  if (mode.order == FilterOrder::kFilterThenUpsample) {
    return ops::bilinear_upsample(holistic_filter(bank, seg_map, mode.eps), height, width);
  }
  return holistic_filter(bank, ops::bilinear_upsample(seg_map, height, width), mode.eps);
}

LabelImage predict_labels(const Tensor& full_map) {
  if (full_map.rank() != 3) throw ShapeError("expected k x H x W, got " + shape_str(full_map.shape()));
  const std::size_t k = full_map.dim(0), h = full_map.dim(1), w = full_map.dim(2);
  if (k > kIgnore) throw ShapeError("too many classes for 8-bit labels");
  const std::size_t plane = h * w;
  const auto d = full_map.data();
  LabelImage out(h, w);
  for (std::size_t p = 0; p < plane; ++p) {
    std::size_t best = 0;
    double best_v = d[p];
    for (std::size_t l = 1; l < k; ++l) {
      const double v = d[l * plane + p];
      if (v > best_v) {
        best_v = v;
        best = l;
      }
    }
    out.labels[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace lbseg
