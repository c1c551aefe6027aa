#include <gtest/gtest.h>

#include <cmath>

#include "lbseg/error.hpp"
#include "lbseg/labelbank.hpp"
#include "oracles.hpp"

namespace lbseg {
namespace {

using testing::random_label_image;
using testing::scan_presence;

LabelImage make(std::size_t h, std::size_t w, std::vector<std::uint8_t> v) {
  LabelImage img(h, w);
  img.labels = std::move(v);
  return img;
}

TEST(Presence, Examples) {
  EXPECT_EQ(presence_from_labels(make(2, 2, {0, 0, 0, 2}), 3), (PresenceSet{0, 2}));
  EXPECT_TRUE(presence_from_labels(make(1, 2, {kIgnore, kIgnore}), 3).empty());
}

TEST(Presence, MatchesScanOnRandomMaps) {
  SplitMix64 rng(21);
  for (int t = 0; t < 10; ++t) {
    const auto img = random_label_image(64, 64, 6, rng, 0.05);
    EXPECT_EQ(presence_from_labels(img, 6), scan_presence(img, {0, 0, 64, 64}));
  }
}

TEST(WindowPresence, Examples) {
  SplitMix64 rng(22);
  const auto img = random_label_image(9, 7, 5, rng);
  EXPECT_EQ(window_presence(img, {0, 0, 9, 7}, 5), presence_from_labels(img, 5));
  auto one = img;
  one.at(3, 4) = 4;
  EXPECT_EQ(window_presence(one, {3, 4, 4, 5}, 5), (PresenceSet{4}));
  EXPECT_THROW(window_presence(img, {0, 0, 10, 7}, 5), ShapeError);
}

TEST(WindowPresence, RandomWindowsMatchScan) {
  SplitMix64 rng(23);
  const auto img = random_label_image(20, 16, 8, rng, 0.1);
  for (int t = 0; t < 200; ++t) {
    const std::size_t r0 = rng.below(20), c0 = rng.below(16);
    const std::size_t r1 = r0 + 1 + rng.below(20 - r0), c1 = c0 + 1 + rng.below(16 - c0);
    const ops::Rect win{r0, c0, r1, c1};
    EXPECT_EQ(window_presence(img, win, 8), scan_presence(img, win));
  }
}

TEST(OracleBank, Examples) {
  const auto b = oracle_bank({0}, 2, 30.0);
  EXPECT_EQ(b.values, (std::vector<double>{30, -30}));
  EXPECT_EQ(b.source, BankSource::kOracle);
  const auto all = oracle_bank({0, 1, 2}, 3, 30.0);
  for (double v : all.values) EXPECT_EQ(v, 30.0);
  // saturation bound: 1 - sigmoid(30) = e^-30 / (1 + e^-30)
  EXPECT_LT(std::exp(-30.0), 1e-13);
}

TEST(Contaminate, ZeroNoiseEqualsOracle) {
  SplitMix64 rng(30);
  for (std::size_t i = 0; i < 50; ++i) {
    const auto present = presence_from_labels(random_label_image(4, 4, 6, rng), 6);
    const auto c = contaminate(present, {0.0, 0.0, 99}, 6, 30.0, i, 50);
    EXPECT_EQ(c.bank.values, oracle_bank(present, 6, 30.0).values);
    EXPECT_EQ(c.present, present);
    EXPECT_EQ(c.removed, 0u);
    EXPECT_EQ(c.added, 0u);
  }
}

TEST(Contaminate, FractionalRemovalRule) {
  const PresenceSet present{0, 1, 2, 3, 4};
  std::size_t lose3 = 0, lose2 = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const auto c = contaminate(present, {0.0, 2.3, 5}, 8, 30.0, i, 10);
    EXPECT_EQ(c.removed, present.size() - c.present.size());
    if (c.removed == 3) ++lose3;
    if (c.removed == 2) ++lose2;
    for (auto l : c.present) EXPECT_TRUE(present.count(l));
  }
  EXPECT_EQ(lose3, 3u);
  EXPECT_EQ(lose2, 7u);
}

TEST(Contaminate, RemovalCappedAtAvailability) {
  const PresenceSet present{2};
  for (std::size_t i = 0; i < 10; ++i) {
    const auto c = contaminate(present, {0.0, 2.3, 5}, 4, 30.0, i, 10);
    EXPECT_TRUE(c.present.empty());
    EXPECT_EQ(c.removed, 1u);
  }
}

TEST(Contaminate, FractionalAdditionRule) {
  const PresenceSet present{0, 1};
  std::size_t add2 = 0, add1 = 0;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto c = contaminate(present, {1.5, 0.0, 11}, 6, 30.0, i, 20);
    if (c.added == 2) ++add2;
    if (c.added == 1) ++add1;
    for (auto l : present) EXPECT_TRUE(c.present.count(l));
  }
  EXPECT_EQ(add2, 10u);
  EXPECT_EQ(add1, 10u);
}

TEST(Contaminate, DeterministicPerImage) {
  const PresenceSet present{0, 3, 5};
  const NoiseSpec spec{1.7, 1.2, 42};
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(contaminate(present, spec, 8, 30.0, i, 10).present, contaminate(present, spec, 8, 30.0, i, 10).present);
  }
}

TEST(Contaminate, MonotoneRecallAndPrecision) {
  SplitMix64 rng(31);
  for (std::size_t i = 0; i < 30; ++i) {
    const auto truth = presence_from_labels(random_label_image(3, 3, 8, rng), 8);
    double last_recall = 2.0, last_precision = 2.0;
    for (double nr = 0; nr <= 5; nr += 1) {
      const auto pr = bank_precision_recall(contaminate(truth, {0, nr, 3}, 8, 30, i, 30).bank, truth);
      EXPECT_LE(pr.recall, last_recall);
      EXPECT_EQ(pr.precision, 1.0);
      last_recall = pr.recall;
    }
    for (double np = 0; np <= 5; np += 1) {
      const auto pr = bank_precision_recall(contaminate(truth, {np, 0, 3}, 8, 30, i, 30).bank, truth);
      EXPECT_LE(pr.precision, last_precision);
      EXPECT_EQ(pr.recall, 1.0);
      last_precision = pr.precision;
    }
  }
}

TEST(Contaminate, AggregateMatchesRecount) {
  SplitMix64 rng(32);
  const std::size_t n = 40, k = 6;
  BankQuality q;
  std::size_t tp = 0, pred = 0, truth_n = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto truth = presence_from_labels(random_label_image(3, 3, k, rng), k);
    const auto c = contaminate(truth, {1.4, 0.6, 8}, k, 30.0, i, n);
    q.add(c.bank, truth);
    for (auto l : c.present) tp += truth.count(l);
    pred += c.present.size();
    truth_n += truth.size();
  }
  EXPECT_DOUBLE_EQ(q.micro().precision, static_cast<double>(tp) / static_cast<double>(pred));
  EXPECT_DOUBLE_EQ(q.micro().recall, static_cast<double>(tp) / static_cast<double>(truth_n));
}

TEST(FractionalImageCount, Rounding) {
  EXPECT_EQ(fractional_image_count(2.3, 10), 3u);
  EXPECT_EQ(fractional_image_count(2.0, 10), 0u);
  EXPECT_EQ(fractional_image_count(0.5, 3), 2u);
}

TEST(PrecisionRecall, Examples) {
  LabelBank a{{1.2, -0.5, 0.3}, BankSource::kInferred};
  auto pr = bank_precision_recall(a, {0, 2}, 0.0);
  EXPECT_EQ(pr.precision, 1.0);
  EXPECT_EQ(pr.recall, 1.0);
  LabelBank b{{1.2, 0.5, -0.3}, BankSource::kInferred};
  pr = bank_precision_recall(b, {0, 2}, 0.0);
  EXPECT_EQ(pr.precision, 0.5);
  EXPECT_EQ(pr.recall, 0.5);
}

TEST(PrecisionRecall, ConventionsAndStrictThreshold) {
  LabelBank none{{-1, 0.0}, BankSource::kInferred};
  auto pr = bank_precision_recall(none, {1}, 0.0);
  EXPECT_EQ(pr.precision, 1.0);  // nothing predicted; 0.0 is not > 0
  EXPECT_EQ(pr.recall, 0.0);
  pr = bank_precision_recall(LabelBank{{1, 1}, BankSource::kInferred}, {}, 0.0);
  EXPECT_EQ(pr.recall, 1.0);
  EXPECT_EQ(pr.precision, 0.0);
}

TEST(BankQuality, MicroAndMacroDiffer) {
  BankQuality q;
  q.add(LabelBank{{1, 1, 1, 1}, BankSource::kInferred}, {0});        // p 1/4, r 1
  q.add(LabelBank{{1, -1, -1, -1}, BankSource::kInferred}, {0, 1});  // p 1, r 1/2
  EXPECT_DOUBLE_EQ(q.macro().precision, 0.625);
  EXPECT_DOUBLE_EQ(q.macro().recall, 0.75);
  EXPECT_DOUBLE_EQ(q.micro().precision, 2.0 / 5.0);
  EXPECT_DOUBLE_EQ(q.micro().recall, 2.0 / 3.0);
}

}  // namespace
}  // namespace lbseg
