#include "filter_properties.hpp"

#include <cmath>

#include "lbseg/filtering.hpp"
#include "lbseg/rng.hpp"

namespace lbseg::testing {
namespace {

constexpr double kEps = 1e-7;
constexpr std::size_t kK = 6, kH = 8, kW = 8;

Tensor apply(const Tensor& bank, const Tensor& map) {
  Graph g;
  return holistic_filter(g.constant(bank), g.constant(map), kEps).value();
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool inside_clamp(double c, double s) {
  const double p = sig(c) * sig(s);
  return p > kEps && p < 1 - kEps;
}

}  // namespace

FilterPropertyReport check_filter_properties(std::size_t n_pairs, std::uint64_t seed) {
  FilterPropertyReport r;
  const double floor_b = std::log(2 * kEps / (1 - 2 * kEps));
  for (std::size_t n = 0; n < n_pairs; ++n) {
    SplitMix64 rng(derive_seed(seed, "filter-pair", n));
    // Saturated bank: each class at >= +30 or <= -30.
    Tensor bank({kK});
    for (auto& v : bank.data()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(30.0, 40.0);
    Tensor map({kK, kH, kW});
    for (auto& v : map.data()) v = rng.uniform(-10.0, 10.0);
    const Tensor out = apply(bank, map);
    const std::size_t plane = kH * kW;

    for (std::size_t l = 0; l < kK; ++l) {
      if (bank[l] < 30.0) continue;
      for (std::size_t p = 0; p < plane; ++p) {
        const double e = std::abs(out[l * plane + p] - map[l * plane + p]);
        ++r.identity_checked;
        r.identity_max_error = std::max(r.identity_max_error, e);
        if (!(e < 1e-6)) ++r.identity_violations;
      }
    }

    const auto labels = predict_labels(out);
    for (std::size_t p = 0; p < plane; ++p) {
      bool has_b = false;
      for (std::size_t b = 0; b < kK; ++b) {
        if (bank[b] >= 30.0 && map[b * plane + p] >= floor_b) has_b = true;
      }
      if (!has_b) continue;
      for (std::size_t a = 0; a < kK; ++a) {
        if (bank[a] > -30.0) continue;
        ++r.suppression_checked;
        if (labels.labels[p] == a) ++r.suppression_violations;
      }
    }

    // Monotonicity and order preservation on a moderate bank.
    Tensor mid({kK});
    for (auto& v : mid.data()) v = rng.uniform(-6.0, 6.0);
    const Tensor base = apply(mid, map);
    const double delta = 1e-3;
    for (std::size_t l = 0; l < kK; ++l) {
      Tensor up = mid;
      up[l] += delta;
      const Tensor moved = apply(up, map);
      for (std::size_t p = 0; p < plane; ++p) {
        const std::size_t i = l * plane + p;
        if (!inside_clamp(mid[l], map[i]) || !inside_clamp(up[l], map[i])) continue;
        ++r.monotone_checked;
        if (!(moved[i] > base[i])) ++r.monotone_violations;
      }
    }
    for (std::size_t t = 0; t < 16; ++t) {
      const std::size_t i = rng.below(map.numel());
      if (!inside_clamp(mid[i / plane], map[i]) || !inside_clamp(mid[i / plane], map[i] + delta)) continue;
      Tensor m2 = map;
      m2[i] += delta;
      ++r.monotone_checked;
      if (!(apply(mid, m2)[i] > base[i])) ++r.monotone_violations;
    }

    for (std::size_t l = 0; l < kK; ++l) {
      for (std::size_t p = 0; p < plane; ++p) {
        for (std::size_t q = p + 1; q < plane; ++q) {
          const double sp = map[l * plane + p], sq = map[l * plane + q];
          const double fp = base[l * plane + p], fq = base[l * plane + q];
          ++r.order_checked;
          if ((sp < sq && fp > fq) || (sp > sq && fp < fq)) ++r.order_violations;
        }
      }
    }
    ++r.pairs;
  }
  return r;
}

}  // namespace lbseg::testing
