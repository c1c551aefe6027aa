#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lbseg/dataio.hpp"
#include "lbseg/graph.hpp"
#include "lbseg/params.hpp"

namespace lbseg {

struct StageConfig {
  std::size_t channels = 16;
  std::size_t n_convs = 2;
  friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

// Stages of 3x3 same-padding conv + relu, each followed by 2x2 max pooling.
// With `dilated_last_stage` the final stage swaps its pool for dilation-2
// convolutions, halving the total stride.
struct FeatureNetConfig {
  std::vector<StageConfig> stages{{16, 2}, {32, 2}};
  bool dilated_last_stage = false;

  std::size_t total_stride() const;
  std::size_t out_channels() const;
  void validate() const;
};

// Dilated 3x3 conv -> relu -> 1x1 conv to k classes.
struct PixelClassifierConfig {
  std::size_t channels = 64;
  std::size_t kernel = 3;
  std::size_t dilation = 2;
};

void init_feature_net(ParamStore& params, const FeatureNetConfig& cfg, std::size_t in_channels,
                      SplitMix64& rng, const std::string& prefix = "feat");

// c x H/stride x W/stride feature map. Throws ConfigError when the stride does
// not divide the image size.
Var feature_forward(Var image, const FeatureNetConfig& cfg, ParamStore& params,
                    const std::string& prefix = "feat");

void init_pixel_classifier(ParamStore& params, const PixelClassifierConfig& cfg,
                           std::size_t in_channels, std::size_t k, SplitMix64& rng);

// Pre-softmax segmentation map S: k x h x w.
Var pixel_classify(Var feature_map, const PixelClassifierConfig& cfg, ParamStore& params);

Var fcn_plus_forward(Var image, const FeatureNetConfig& features,
                     const PixelClassifierConfig& classifier, ParamStore& params);

}  // namespace lbseg
