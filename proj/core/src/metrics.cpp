#include "lbseg/metrics.hpp"

#include "lbseg/error.hpp"

namespace lbseg {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t i) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < k_; ++j) s += at(i, j);
  return s;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t j) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += at(i, j);
  return s;
}

void ConfusionMatrix::accumulate(const LabelImage& truth, const LabelImage& pred) {
  if (truth.height != pred.height || truth.width != pred.width) {
    throw ShapeError("truth and prediction sizes differ");
  }
  for (std::size_t p = 0; p < truth.labels.size(); ++p) {
    const auto t = truth.labels[p];
    if (t == kIgnore) continue;
    const auto q = pred.labels[p];
    if (t >= k_ || q >= k_) throw DomainError("label out of range for confusion matrix");
    ++counts_[t * k_ + q];
  }
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.k_ != k_) throw ShapeError("confusion matrices differ in k");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

namespace {

void require_counts(const ConfusionMatrix& cm) {
  if (cm.total() == 0) throw UndefinedMetricError("confusion matrix is empty");
}

double iu(const ConfusionMatrix& cm, std::size_t i, std::uint64_t t_i) {
  const auto uni = t_i + cm.col_sum(i) - cm.at(i, i);
  return static_cast<double>(cm.at(i, i)) / static_cast<double>(uni);
}

}  // namespace

double pixel_accuracy(const ConfusionMatrix& cm) {
  require_counts(cm);
  std::uint64_t diag = 0;
  for (std::size_t i = 0; i < cm.k(); ++i) diag += cm.at(i, i);
  return static_cast<double>(diag) / static_cast<double>(cm.total());
}

double mean_accuracy(const ConfusionMatrix& cm) {
  require_counts(cm);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < cm.k(); ++i) {
    const auto t = cm.row_sum(i);
    if (t == 0) continue;
    sum += static_cast<double>(cm.at(i, i)) / static_cast<double>(t);
    ++n;
  }
  return sum / static_cast<double>(n);
}

double mean_iu(const ConfusionMatrix& cm) {
  require_counts(cm);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < cm.k(); ++i) {
    const auto t = cm.row_sum(i);
    if (t + cm.col_sum(i) == 0) continue;
    sum += iu(cm, i, t);
    ++n;
  }
  return sum / static_cast<double>(n);
}

double fw_iu(const ConfusionMatrix& cm) {
  require_counts(cm);
  double sum = 0.0;
  for (std::size_t i = 0; i < cm.k(); ++i) {
    const auto t = cm.row_sum(i);
    if (t == 0) continue;
    sum += static_cast<double>(t) * iu(cm, i, t);
  }
  return sum / static_cast<double>(cm.total());
}

Scores score(const ConfusionMatrix& cm) {
  return {pixel_accuracy(cm), mean_accuracy(cm), mean_iu(cm), fw_iu(cm)};
}

}  // namespace lbseg
