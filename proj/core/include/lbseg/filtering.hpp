#pragma once

#include <cstddef>

#include "lbseg/dataio.hpp"
#include "lbseg/graph.hpp"
#include "lbseg/ops.hpp"

namespace lbseg {

enum class FilterOrder { kFilterThenUpsample, kUpsampleThenFilter };

struct FilterMode {
  FilterOrder order = FilterOrder::kFilterThenUpsample;
  double eps = ops::kDefaultLogitEps;

  // Throws ConfigError unless eps is in (0, 0.5).
  void validate() const;
};

// S^f = logit_eps(sigmoid(bank) * sigmoid(S)), bank has k elements, S is k x h x w.
Var holistic_filter(Var bank, Var seg_map, double eps = ops::kDefaultLogitEps);

// k x H x W map; the order of filtering and upsampling follows `mode`.
Var filter_and_upsample(Var bank, Var seg_map, std::size_t height, std::size_t width,
                        const FilterMode& mode);

// Per-pixel argmax over k x H x W; ties go to the lower class index.
LabelImage predict_labels(const Tensor& full_map);

}  // namespace lbseg
