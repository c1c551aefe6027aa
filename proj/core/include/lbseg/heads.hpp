#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "lbseg/dataio.hpp"
#include "lbseg/graph.hpp"
#include "lbseg/labelbank.hpp"
#include "lbseg/ops.hpp"
#include "lbseg/params.hpp"

namespace lbseg {

enum class HeadKind { kSpp, kDc, kOhe, kW2v, kCombined };
enum class MetaSource { kOhe, kW2v };

// Desk-scale defaults: 128 hidden units, 64 DC channels, 4-cell windows.
struct HeadConfig {
  HeadKind kind = HeadKind::kDc;
  std::size_t hidden_units = 128;
  std::vector<std::size_t> spp_levels{1, 2, 4};
  std::size_t dc_window = 4;
  std::size_t dc_stride = 2;
  std::size_t dc_channels = 64;
  std::size_t dc_dilation = 2;
  std::size_t embed_dim = 16;
  MetaSource meta_source = MetaSource::kW2v;
};

// Sizes the heads need from the dataset and the feature network.
struct HeadDims {
  std::size_t k = 0;
  std::size_t feature_channels = 0;
  std::size_t n_attributes = 0;
  std::size_t vocab_size = 0;
};

struct HeadOutput {
  Var bank;                                  // k pre-sigmoid confidences
  std::optional<Var> window_logits;          // n x k, DC-style heads only
  std::vector<ops::Rect> windows;            // feature-cell rectangles
  std::optional<Var> loss;                   // set when targets were given
};

bool head_uses_features(HeadKind kind);
void init_head(ParamStore& params, const HeadConfig& cfg, const HeadDims& dims, SplitMix64& rng);

// Window origins along one axis: stride steps with the last window clamped
// to the border. Throws ConfigError if window > extent or stride == 0.
std::vector<std::size_t> window_origins(std::size_t extent, std::size_t window, std::size_t stride);
std::vector<ops::Rect> dc_windows(std::size_t h, std::size_t w, std::size_t window, std::size_t stride);

// Feature-cell rectangle mapped to image pixels.
ops::Rect to_pixels(const ops::Rect& cells, std::size_t stride, std::size_t height, std::size_t width);

// `labels` may be null; then no loss is produced.
HeadOutput spp_forward(Var feature_map, const HeadConfig& cfg, ParamStore& params,
                       const LabelImage* labels);
HeadOutput dc_forward(Var feature_map, const LabelImage* labels, std::size_t total_stride,
                      const HeadConfig& cfg, ParamStore& params);
HeadOutput ohe_forward(Graph& g, const std::vector<std::size_t>& attrs, std::size_t vocab_size,
                       const HeadConfig& cfg, ParamStore& params, const LabelImage* labels);
HeadOutput w2v_forward(Graph& g, const std::vector<std::size_t>& caption, const HeadConfig& cfg,
                       ParamStore& params, const LabelImage* labels);
HeadOutput combined_forward(Var feature_map, Var meta, const LabelImage* labels,
                            std::size_t total_stride, const HeadConfig& cfg, ParamStore& params);

// Multi-hot attribute vector (constant) or learned mean caption embedding.
Var meta_feature(Graph& g, const MetaRecord& meta, const HeadConfig& cfg, ParamStore& params,
                 std::size_t n_attributes);

struct HeadInput {
  std::optional<Var> feature_map;
  const MetaRecord* meta = nullptr;
  const LabelImage* labels = nullptr;
  std::size_t total_stride = 1;
  std::size_t n_attributes = 0;
};

// Dispatches on cfg.kind.
HeadOutput head_forward(Graph& g, const HeadInput& in, const HeadConfig& cfg, ParamStore& params);

}  // namespace lbseg
