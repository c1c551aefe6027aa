#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lbseg/dataio.hpp"

namespace lbseg {

// counts[i * k + j]: pixels of true class i predicted as j. Ignore pixels are
// never counted.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0) {}

  std::size_t k() const { return k_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * k_ + pred]; }
  std::uint64_t& at(std::size_t truth, std::size_t pred) { return counts_[truth * k_ + pred]; }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t i) const;
  std::uint64_t col_sum(std::size_t j) const;

  // Throws ShapeError on size mismatch, DomainError on labels >= k.
  void accumulate(const LabelImage& truth, const LabelImage& pred);
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

// All four throw UndefinedMetricError on an empty matrix. Classes that never
// occur (t_i = 0) are left out of the mAcc average; classes with an empty
// union are left out of mIU.
double pixel_accuracy(const ConfusionMatrix& cm);
double mean_accuracy(const ConfusionMatrix& cm);
double mean_iu(const ConfusionMatrix& cm);
double fw_iu(const ConfusionMatrix& cm);

struct Scores {
  double pacc = 0.0;
  double macc = 0.0;
  double miu = 0.0;
  double fwiu = 0.0;
};

Scores score(const ConfusionMatrix& cm);

}  // namespace lbseg
