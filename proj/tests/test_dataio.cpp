#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "lbseg/dataio.hpp"
#include "lbseg/error.hpp"
#include "oracles.hpp"

namespace lbseg {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("lbseg_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SyntheticConfig small(std::uint64_t seed, std::size_t n, std::size_t k) {
  SyntheticConfig c;
  c.seed = seed;
  c.n_train = n;
  c.n_val = 1;
  c.k = k;
  return c;
}

TEST(Synthetic, Deterministic) {
  EXPECT_EQ(generate_synthetic(small(1, 1, 3)), generate_synthetic(small(1, 1, 3)));
  EXPECT_NE(generate_synthetic(small(1, 1, 3)), generate_synthetic(small(2, 1, 3)));
}

TEST(Synthetic, RejectsBadConfig) {
  auto c = small(1, 1, 2);
  EXPECT_THROW(generate_synthetic(c), ConfigError);
  c = small(1, 1, 3);
  c.height = 16;
  EXPECT_THROW(generate_synthetic(c), ConfigError);
  c = small(1, 1, 3);
  c.distractor_rate = 1.5;
  EXPECT_THROW(generate_synthetic(c), ConfigError);
}

double colour_distance(const RgbImage& img, std::size_t i, std::size_t j, const std::array<double, 3>& c) {
  double d = 0.0;
  for (std::size_t ch = 0; ch < 3; ++ch) d = std::max(d, std::abs(img.at(ch, i, j) - c[ch]));
  return d;
}

// Fraction of shape pixels whose colour is outside the own-class envelope.
double foreign_colour_fraction(const Dataset& ds) {
  std::size_t total = 0, foreign = 0;
  for (const auto& s : ds.train) {
    for (std::size_t i = 0; i < s.labels.height; ++i) {
      for (std::size_t j = 0; j < s.labels.width; ++j) {
        const auto c = s.labels.at(i, j);
        if (c == 0) continue;
        const auto cols = class_colours(c);
        const double d = std::min(colour_distance(s.image, i, j, cols[0]), colour_distance(s.image, i, j, cols[1]));
        ++total;
        if (d > kMaxColourDeviation + 1e-12) ++foreign;
      }
    }
  }
  return static_cast<double>(foreign) / static_cast<double>(total);
}

TEST(Synthetic, NoDistractorsMeansOwnClassTexture) {
  auto c = small(5, 40, 6);
  c.distractor_rate = 0.0;
  EXPECT_EQ(foreign_colour_fraction(generate_synthetic(c)), 0.0);
  c.distractor_rate = 1.0;
  EXPECT_GT(foreign_colour_fraction(generate_synthetic(c)), 0.3);
}

TEST(Synthetic, ReferenceSplitClassQuotaAndBalance) {
  SyntheticConfig c;  // seed 7, k 6, 200 train, 64x64
  const auto ds = generate_synthetic(c);
  ASSERT_EQ(ds.train.size(), 200u);
  std::vector<std::size_t> images(c.k, 0), pixels(c.k, 0);
  for (const auto& s : ds.train) {
    std::set<std::size_t> present;
    for (auto l : s.labels.labels) {
      present.insert(l);
      ++pixels[l];
    }
    for (auto p : present) ++images[p];
  }
  for (std::size_t k = 0; k < c.k; ++k) EXPECT_GE(images[k], 5u) << "class " << k;
  const auto [lo, hi] = std::minmax_element(pixels.begin() + 1, pixels.end());
  EXPECT_LE(static_cast<double>(*hi), 10.0 * static_cast<double>(*lo));
  EXPECT_NO_THROW(validate_dataset(ds));
}

TEST(Synthetic, MetaMatchesLabels) {
  const auto ds = generate_synthetic(small(3, 20, 6));
  for (const auto& s : ds.train) {
    std::set<std::size_t> present;
    for (auto l : s.labels.labels) present.insert(l);
    const auto attrs = derive_attributes(present, ds.taxonomy);
    EXPECT_EQ(std::vector<std::size_t>(attrs.begin(), attrs.end()), s.meta.attributes);
    for (auto c : present) {
      const auto word = std::find(ds.vocabulary.begin(), ds.vocabulary.end(), ds.class_names[c]);
      ASSERT_NE(word, ds.vocabulary.end());
      const auto id = static_cast<std::size_t>(word - ds.vocabulary.begin());
      EXPECT_NE(std::find(s.meta.caption.begin(), s.meta.caption.end(), id), s.meta.caption.end());
    }
  }
}

TEST(DeriveAttributes, Examples) {
  const std::vector<std::vector<std::size_t>> tax{{0, 1}, {1, 2}, {3}};
  EXPECT_TRUE(derive_attributes({}, tax).empty());
  EXPECT_EQ(derive_attributes({0}, tax), (std::set<std::size_t>{0, 1}));
  EXPECT_EQ(derive_attributes({0, 1}, tax), (std::set<std::size_t>{0, 1, 2}));
}

TEST(Pgm, ByteLayout) {
  const std::string bytes = std::string("P5\n2 2\n255\n") + std::string("\x00\x01\x02\xff", 4);
  const auto img = decode_pgm(bytes);
  EXPECT_EQ(img.height, 2u);
  EXPECT_EQ(img.width, 2u);
  EXPECT_EQ(img.labels, (std::vector<std::uint8_t>{0, 1, 2, kIgnore}));
  EXPECT_EQ(encode_pgm(img), bytes);
}

TEST(Pgm, Errors) {
  EXPECT_THROW(decode_pgm(std::string("P5\n2 2\n15\n") + std::string(4, '\0')), FormatError);
  EXPECT_THROW(decode_pgm(std::string("P2\n2 2\n255\n") + std::string(4, '\0')), FormatError);
  EXPECT_THROW(decode_pgm(std::string("P5\n2 2\n255\n") + std::string(3, '\0')), FormatError);
  EXPECT_THROW(decode_pgm(std::string("P5\n99999999 99999999\n255\n")), FormatError);
  EXPECT_THROW(decode_pgm(std::string("P5\n1 1\n255\n") + std::string(1, '\x05'), 3), FormatError);
  EXPECT_NO_THROW(decode_pgm(std::string("P5\n1 1\n255\n") + std::string(1, '\xff'), 3));
}

TEST(Ppm, RoundTripAndErrors) {
  const auto ds = generate_synthetic(small(9, 1, 3));
  const auto& img = ds.train[0].image;
  EXPECT_EQ(decode_ppm(encode_ppm(img)), img);
  EXPECT_THROW(decode_ppm(std::string("P6\n1 1\n65535\n") + std::string(6, '\0')), FormatError);
}

TEST(Files, RoundTrip) {
  const auto dir = temp_dir("files");
  SplitMix64 rng(1);
  const auto lbl = testing::random_label_image(7, 5, 4, rng, 0.1);
  write_label_image(dir / "a.pgm", lbl);
  EXPECT_EQ(read_label_image(dir / "a.pgm", 4), lbl);
  const auto ds = generate_synthetic(small(2, 1, 3));
  write_rgb_image(dir / "a.ppm", ds.train[0].image);
  EXPECT_EQ(read_rgb_image(dir / "a.ppm"), ds.train[0].image);
}

TEST(Meta, RoundTrip) {
  const auto ds = generate_synthetic(small(4, 3, 6));
  for (const auto& s : ds.train) {
    const auto text = encode_meta(s.meta, ds.vocabulary);
    EXPECT_EQ(text.substr(0, 6), "attrs:");
    EXPECT_EQ(decode_meta(text, ds.vocabulary, ds.n_attributes), s.meta);
  }
  EXPECT_THROW(decode_meta("attrs: 99\ncaption: a\n", ds.vocabulary, ds.n_attributes), FormatError);
  EXPECT_THROW(decode_meta("attrs: 1\ncaption: zebra\n", ds.vocabulary, ds.n_attributes), FormatError);
}

TEST(DatasetDir, RoundTripAndLayout) {
  const auto dir = temp_dir("dataset");
  auto c = small(6, 4, 5);
  c.n_val = 2;
  const auto ds = generate_synthetic(c);
  write_dataset(dir / "d", ds);
  EXPECT_TRUE(fs::exists(dir / "d" / "manifest.txt"));
  EXPECT_TRUE(fs::exists(dir / "d" / "train" / "img_00003.ppm"));
  EXPECT_TRUE(fs::exists(dir / "d" / "val" / "lbl_00001.pgm"));
  EXPECT_TRUE(fs::exists(dir / "d" / "val" / "meta_00001.txt"));
  EXPECT_EQ(read_dataset(dir / "d"), ds);

  const auto manifest = read_file(dir / "d" / "manifest.txt");
  EXPECT_NE(manifest.find("class 4 ancestor"), std::string::npos);
  std::size_t class_lines = 0;
  std::istringstream in(manifest);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("class ", 0) == 0 && line.find("ancestor") == std::string::npos) ++class_lines;
  }
  EXPECT_EQ(class_lines, 5u);
}

TEST(Validate, RejectsMissingTaxonomy) {
  auto ds = generate_synthetic(small(1, 2, 4));
  ds.taxonomy.pop_back();
  EXPECT_THROW(validate_dataset(ds), FormatError);
}

}  // namespace
}  // namespace lbseg
