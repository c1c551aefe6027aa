#include "lbseg/labelbank.hpp"

#include <cmath>

#include "lbseg/error.hpp"
#include "lbseg/rng.hpp"

namespace lbseg {
namespace {

void check_labels(const LabelImage& labels, std::size_t k) {
  for (auto v : labels.labels) {
    if (v != kIgnore && v >= k) {
      throw DomainError("label " + std::to_string(v) + " >= k=" + std::to_string(k));
    }
  }
}

// Picks `count` distinct members of `pool` uniformly (all when fewer).
std::vector<std::size_t> pick(std::vector<std::size_t> pool, std::size_t count, SplitMix64& rng) {
  if (count >= pool.size()) return pool;
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

bool in_fraction(double x, std::size_t image_index, std::size_t n_images, std::uint64_t seed,
                 std::string_view label) {
  const std::size_t share = fractional_image_count(x, n_images);
  if (share == 0) return false;
  SplitMix64 rng(derive_seed(seed, label));
  const auto perm = permutation(n_images, rng);
  for (std::size_t i = 0; i < share; ++i) {
    if (perm[i] == image_index) return true;
  }
  return false;
}

}  // namespace

PresenceSet presence_from_labels(const LabelImage& labels, std::size_t k) {
  check_labels(labels, k);
  PresenceSet out;
  for (auto v : labels.labels) {
    if (v != kIgnore) out.insert(v);
  }
  return out;
}

PresenceSet window_presence(const LabelImage& labels, const ops::Rect& window, std::size_t k) {
  if (window.row0 >= window.row1 || window.col0 >= window.col1 || window.row1 > labels.height ||
      window.col1 > labels.width) {
    throw ShapeError("window outside the label image");
  }
  PresenceSet out;
  for (std::size_t i = window.row0; i < window.row1; ++i) {
    for (std::size_t j = window.col0; j < window.col1; ++j) {
      const auto v = labels.at(i, j);
      if (v == kIgnore) continue;
      if (v >= k) throw DomainError("label " + std::to_string(v) + " >= k=" + std::to_string(k));
      out.insert(v);
    }
  }
  return out;
}

std::vector<double> presence_targets(const PresenceSet& present, std::size_t k) {
  std::vector<double> t(k, 0.0);
  for (auto c : present) {
    if (c >= k) throw DomainError("presence id out of range");
    t[c] = 1.0;
  }
  return t;
}

LabelBank oracle_bank(const PresenceSet& present, std::size_t k, double saturation) {
  if (!(saturation > 0.0)) throw DomainError("oracle saturation must be positive");
  LabelBank bank{std::vector<double>(k, -saturation), BankSource::kOracle};
  for (auto c : present) {
    if (c >= k) throw DomainError("presence id out of range");
    bank.values[c] = saturation;
  }
  return bank;
}

std::size_t fractional_image_count(double x, std::size_t n) {
  if (!(x >= 0.0)) throw DomainError("noise counts must be nonnegative");
  const double frac = x - std::floor(x);
  return static_cast<std::size_t>(std::llround(frac * static_cast<double>(n)));
}

Contamination contaminate(const PresenceSet& present, const NoiseSpec& spec, std::size_t k,
                          double saturation, std::size_t image_index, std::size_t n_images) {
  if (!(spec.n_p >= 0.0) || !(spec.n_r >= 0.0)) throw DomainError("noise counts must be nonnegative");
  if (image_index >= n_images) throw DomainError("image index out of range");

  std::size_t n_remove = static_cast<std::size_t>(std::floor(spec.n_r));
  if (in_fraction(spec.n_r, image_index, n_images, spec.seed, "remove-share")) ++n_remove;
  std::size_t n_add = static_cast<std::size_t>(std::floor(spec.n_p));
  if (in_fraction(spec.n_p, image_index, n_images, spec.seed, "add-share")) ++n_add;

  std::vector<std::size_t> truth(present.begin(), present.end());
  std::vector<std::size_t> absent;
  for (std::size_t c = 0; c < k; ++c) {
    if (present.count(c) == 0) absent.push_back(c);
  }

  SplitMix64 rng(derive_seed(spec.seed, "contaminate", image_index));
  Contamination out;
  out.present = present;
  for (auto c : pick(truth, n_remove, rng)) {
    out.present.erase(c);
    ++out.removed;
  }
  for (auto c : pick(absent, n_add, rng)) {
    out.present.insert(c);
    ++out.added;
  }
  out.bank = oracle_bank(out.present, k, saturation);
  out.bank.source = (out.removed + out.added) > 0 ? BankSource::kContaminated : BankSource::kOracle;
  return out;
}

PrecisionRecall bank_precision_recall(const LabelBank& predicted, const PresenceSet& truth,
                                      double threshold) {
  std::size_t tp = 0, n_pred = 0;
  for (std::size_t l = 0; l < predicted.values.size(); ++l) {
    if (predicted.values[l] > threshold) {
      ++n_pred;
      if (truth.count(l) != 0) ++tp;
    }
  }
  PrecisionRecall pr;
  pr.precision = n_pred == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(n_pred);
  pr.recall = truth.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(truth.size());
  return pr;
}

void BankQuality::add(const LabelBank& predicted, const PresenceSet& truth, double threshold) {
  const auto pr = bank_precision_recall(predicted, truth, threshold);
  std::size_t n_pred = 0, tp = 0;
  for (std::size_t l = 0; l < predicted.values.size(); ++l) {
    if (predicted.values[l] > threshold) {
      ++n_pred;
      if (truth.count(l) != 0) ++tp;
    }
  }
  ++images_;
  tp_ += tp;
  predicted_ += n_pred;
  truth_ += truth.size();
  precision_sum_ += pr.precision;
  recall_sum_ += pr.recall;
}

PrecisionRecall BankQuality::micro() const {
  PrecisionRecall pr;
  pr.precision = predicted_ == 0 ? 1.0 : static_cast<double>(tp_) / static_cast<double>(predicted_);
  pr.recall = truth_ == 0 ? 1.0 : static_cast<double>(tp_) / static_cast<double>(truth_);
  return pr;
}

PrecisionRecall BankQuality::macro() const {
  if (images_ == 0) return {};
  const double n = static_cast<double>(images_);
  return {precision_sum_ / n, recall_sum_ / n};
}

}  // namespace lbseg
