#include "oracles.hpp"

#include <stdexcept>

namespace lbseg::testing {

std::array<double, 4> brute_force_metrics(const std::vector<LabelImage>& truth,
                                          const std::vector<LabelImage>& pred, std::size_t k) {
  // pixel ids (image, index) per class, in truth and in prediction
  using Pixel = std::pair<std::size_t, std::size_t>;
  std::vector<std::set<Pixel>> gt(k), pr(k);
  std::size_t total = 0;
  for (std::size_t n = 0; n < truth.size(); ++n) {
    for (std::size_t p = 0; p < truth[n].labels.size(); ++p) {
      if (truth[n].labels[p] == kIgnore) continue;
      gt[truth[n].labels[p]].insert({n, p});
      pr[pred[n].labels[p]].insert({n, p});
      ++total;
    }
  }
  if (total == 0) throw std::runtime_error("no pixels");
  double correct = 0, acc_sum = 0, iu_sum = 0, fw = 0;
  std::size_t acc_n = 0, iu_n = 0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t inter = 0;
    for (const auto& px : gt[c]) inter += pr[c].count(px);
    std::set<Pixel> uni = gt[c];
    uni.insert(pr[c].begin(), pr[c].end());
    correct += static_cast<double>(inter);
    if (!gt[c].empty()) {
      acc_sum += static_cast<double>(inter) / static_cast<double>(gt[c].size());
      ++acc_n;
      fw += static_cast<double>(gt[c].size()) * static_cast<double>(inter) / static_cast<double>(uni.size());
    }
    if (!uni.empty()) {
      iu_sum += static_cast<double>(inter) / static_cast<double>(uni.size());
      ++iu_n;
    }
  }
  const double t = static_cast<double>(total);
  return {correct / t, acc_sum / static_cast<double>(acc_n), iu_sum / static_cast<double>(iu_n), fw / t};
}

std::set<std::size_t> scan_presence(const LabelImage& labels, const ops::Rect& window) {
  std::set<std::size_t> out;
  for (std::size_t i = window.row0; i < window.row1; ++i) {
    for (std::size_t j = window.col0; j < window.col1; ++j) {
      const auto v = labels.labels[i * labels.width + j];
      if (v != kIgnore) out.insert(v);
    }
  }
  return out;
}

LabelImage random_label_image(std::size_t h, std::size_t w, std::size_t k, SplitMix64& rng,
                              double ignore_rate) {
  LabelImage img(h, w);
  for (auto& v : img.labels) {
    v = rng.bernoulli(ignore_rate) ? kIgnore : static_cast<std::uint8_t>(rng.below(k));
  }
  return img;
}

}  // namespace lbseg::testing
