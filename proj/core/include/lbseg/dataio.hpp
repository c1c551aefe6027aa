#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lbseg/tensor.hpp"

namespace lbseg {

inline constexpr std::uint8_t kIgnore = 255;

// H x W class map. Values are class ids < k or kIgnore.
struct LabelImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> labels;  // row-major

  LabelImage() = default;
  LabelImage(std::size_t h, std::size_t w, std::uint8_t fill = 0)
      : height(h), width(w), labels(h * w, fill) {}

  std::uint8_t& at(std::size_t i, std::size_t j) { return labels[i * width + j]; }
  std::uint8_t at(std::size_t i, std::size_t j) const { return labels[i * width + j]; }

  friend bool operator==(const LabelImage&, const LabelImage&) = default;
};

// Planar 3 x H x W image with values in [0,1].
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  RgbImage() = default;
  RgbImage(std::size_t h, std::size_t w) : height(h), width(w), pixels(3 * h * w, 0.0) {}

  double& at(std::size_t c, std::size_t i, std::size_t j) {
    return pixels[(c * height + i) * width + j];
  }
  double at(std::size_t c, std::size_t i, std::size_t j) const {
    return pixels[(c * height + i) * width + j];
  }
  Tensor as_tensor() const { return Tensor({3, height, width}, pixels); }

  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

struct MetaRecord {
  std::vector<std::size_t> attributes;  // sorted, unique
  std::vector<std::size_t> caption;     // word ids

  friend bool operator==(const MetaRecord&, const MetaRecord&) = default;
};

struct Sample {
  RgbImage image;
  LabelImage labels;
  MetaRecord meta;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Dataset {
  std::string name;
  std::size_t k = 0;
  std::vector<std::string> class_names;
  // taxonomy[c] = ancestor attribute ids of class c
  std::vector<std::vector<std::size_t>> taxonomy;
  std::size_t n_attributes = 0;
  std::vector<std::string> vocabulary;
  std::vector<Sample> train;
  std::vector<Sample> val;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SyntheticConfig {
  std::uint64_t seed = 7;
  std::size_t n_train = 200;
  std::size_t n_val = 50;
  std::size_t k = 6;
  std::size_t height = 64;
  std::size_t width = 64;
  double distractor_rate = 0.3;
};

// Nominal primary and secondary colours of class c before jitter and noise.
std::array<std::array<double, 3>, 2> class_colours(std::size_t c);

// Per-pixel deviation bound from the nominal colour: shape jitter plus noise
// amplitude plus quantization.
inline constexpr double kMaxColourDeviation = 0.05 + 0.08 + 0.5 / 255.0;

// Class whose appearance a distractor shape of class `c` borrows.
std::size_t confusable_class(std::size_t c, std::size_t k);

// Scenes of 1-3 textured shapes on a background class. Reproducible from the
// seed alone. Throws ConfigError for k < 3, sizes < 32 or a rate outside [0,1].
Dataset generate_synthetic(const SyntheticConfig& cfg);

// Union of the ancestor attribute sets of the given classes.
std::set<std::size_t> derive_attributes(const std::set<std::size_t>& classes,
                                        const std::vector<std::vector<std::size_t>>& taxonomy);

// Checks the dataset-level invariants; throws FormatError on the first
// violation.
void validate_dataset(const Dataset& ds);

// Netpbm codecs. Labels are P5/maxval 255 with one class id per byte, RGB is
// P6/maxval 255. When `k` is given, label values >= k other than kIgnore are
// rejected.
std::string encode_pgm(const LabelImage& img);
LabelImage decode_pgm(std::string_view bytes, std::optional<std::size_t> k = std::nullopt);
std::string encode_ppm(const RgbImage& img);
RgbImage decode_ppm(std::string_view bytes);

void write_label_image(const std::filesystem::path& path, const LabelImage& img);
LabelImage read_label_image(const std::filesystem::path& path,
                            std::optional<std::size_t> k = std::nullopt);
void write_rgb_image(const std::filesystem::path& path, const RgbImage& img);
RgbImage read_rgb_image(const std::filesystem::path& path);

std::string encode_meta(const MetaRecord& meta, const std::vector<std::string>& vocabulary);
MetaRecord decode_meta(std::string_view text, const std::vector<std::string>& vocabulary,
                       std::size_t n_attributes);

// <root>/manifest.txt plus <root>/{train,val}/{img,lbl,meta}_%05d.*
void write_dataset(const std::filesystem::path& root, const Dataset& ds);
Dataset read_dataset(const std::filesystem::path& root);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace lbseg
