#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <vector>

#include "lbseg/dataio.hpp"
#include "lbseg/ops.hpp"

namespace lbseg {

inline constexpr double kOracleSaturation = 30.0;

enum class BankSource { kInferred, kOracle, kContaminated };

// Pre-sigmoid per-class presence confidences for one image.
struct LabelBank {
  std::vector<double> values;
  BankSource source = BankSource::kInferred;

  std::size_t size() const { return values.size(); }
  Tensor as_tensor() const { return Tensor({values.size()}, values); }
};

using PresenceSet = std::set<std::size_t>;

// Fractional counts follow the integer-part / fractional-image-share rule.
struct NoiseSpec {
  double n_p = 0.0;  // noisy labels added per image
  double n_r = 0.0;  // ground-truth labels removed per image
  std::uint64_t seed = 0;
};

PresenceSet presence_from_labels(const LabelImage& labels, std::size_t k);

// Presence restricted to a half-open pixel rectangle.
PresenceSet window_presence(const LabelImage& labels, const ops::Rect& window, std::size_t k);

// 0/1 vector of length k.
std::vector<double> presence_targets(const PresenceSet& present, std::size_t k);

// +M for present classes, -M otherwise.
LabelBank oracle_bank(const PresenceSet& present, std::size_t k, double saturation = kOracleSaturation);

struct Contamination {
  LabelBank bank;
  PresenceSet present;  // the set the bank marks present
  std::size_t removed = 0;
  std::size_t added = 0;
};

// Removes floor(n_r) ground-truth labels (all, if fewer exist) plus one more
// on a frac(n_r) share of the images, then adds floor(n_p) absent labels plus
// one more on a frac(n_p) share. Image shares come from a seeded permutation
// of [0, n_images); label choices are seeded by (seed, image_index).
Contamination contaminate(const PresenceSet& present, const NoiseSpec& spec, std::size_t k,
                          double saturation, std::size_t image_index, std::size_t n_images);

// Number of images out of n that receive the extra label for fractional
// count x; round(frac(x) * n).
std::size_t fractional_image_count(double x, std::size_t n);

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
};

// Predicted present = {l : values[l] > threshold}. Precision is 1 when nothing
// is predicted, recall is 1 when the truth is empty.
PrecisionRecall bank_precision_recall(const LabelBank& predicted, const PresenceSet& truth,
                                      double threshold = 0.0);

// Accumulates per-image bank quality into micro (pooled counts) and macro
// (mean of per-image values) averages.
class BankQuality {
 public:
  void add(const LabelBank& predicted, const PresenceSet& truth, double threshold = 0.0);
  std::size_t images() const { return images_; }
  PrecisionRecall micro() const;
  PrecisionRecall macro() const;

 private:
  std::size_t images_ = 0;
  std::size_t tp_ = 0, predicted_ = 0, truth_ = 0;
  double precision_sum_ = 0.0, recall_sum_ = 0.0;
};

}  // namespace lbseg
