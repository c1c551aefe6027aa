#include "lbseg/segnet.hpp"

#include "lbseg/error.hpp"
#include "lbseg/ops.hpp"

namespace lbseg {
namespace {

std::string conv_name(const std::string& prefix, std::size_t stage, std::size_t conv) {
  return prefix + ".s" + std::to_string(stage) + ".c" + std::to_string(conv);
}

bool pools_after(const FeatureNetConfig& cfg, std::size_t stage) {
  return !(cfg.dilated_last_stage && stage + 1 == cfg.stages.size());
}

}  // namespace

std::size_t FeatureNetConfig::total_stride() const {
  std::size_t s = 1;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (pools_after(*this, i)) s *= 2;
  }
  return s;
}

std::size_t FeatureNetConfig::out_channels() const {
  return stages.empty() ? 0 : stages.back().channels;
}

void FeatureNetConfig::validate() const {
  if (stages.empty()) throw ConfigError("feature network needs at least one stage");
  for (const auto& s : stages) {
    if (s.channels == 0 || s.n_convs == 0) throw ConfigError("feature stage needs channels and convs");
  }
}

void init_feature_net(ParamStore& params, const FeatureNetConfig& cfg, std::size_t in_channels,
                      SplitMix64& rng, const std::string& prefix) {
  cfg.validate();
  std::size_t c_in = in_channels;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    for (std::size_t c = 0; c < cfg.stages[s].n_convs; ++c) {
      const std::size_t c_out = cfg.stages[s].channels;
      const auto name = conv_name(prefix, s, c);
      params.create_he_uniform(name + ".w", {c_out, c_in, 3, 3}, c_in * 9, rng);
      params.create(name + ".b", {c_out});
      c_in = c_out;
    }
  }
}

Var feature_forward(Var image, const FeatureNetConfig& cfg, ParamStore& params,
                    const std::string& prefix) {
  cfg.validate();
  Graph& g = *image.graph;
  const auto& shape = image.shape();
  if (shape.size() != 3) throw ShapeError("feature network expects a c x H x W image");
  const std::size_t stride = cfg.total_stride();
  if (shape[1] % stride != 0 || shape[2] % stride != 0) {
    throw ConfigError("image size " + shape_str(shape) + " not divisible by total stride " +
                      std::to_string(stride));
  }
  Var x = image;
  for (std::size_t s = 0; s < cfg.stages.size(); ++s) {
    const std::size_t dilation = pools_after(cfg, s) ? 1 : 2;
    for (std::size_t c = 0; c < cfg.stages[s].n_convs; ++c) {
      const auto name = conv_name(prefix, s, c);
      x = ops::conv2d(x, params.bind(g, name + ".w"), params.bind(g, name + ".b"), dilation,
                      ops::same_padding(3, dilation));
      x = ops::relu(x);
    }
    if (pools_after(cfg, s)) x = ops::max_pool2(x);
  }
  return x;
}

void init_pixel_classifier(ParamStore& params, const PixelClassifierConfig& cfg,
                           std::size_t in_channels, std::size_t k, SplitMix64& rng) {
  if (cfg.kernel % 2 == 0) throw ConfigError("pixel classifier kernel must be odd");
  params.create_he_uniform("cls.dil.w", {cfg.channels, in_channels, cfg.kernel, cfg.kernel},
                           in_channels * cfg.kernel * cfg.kernel, rng);
  params.create("cls.dil.b", {cfg.channels});
  params.create_he_uniform("cls.out.w", {k, cfg.channels, 1, 1}, cfg.channels, rng);
  params.create("cls.out.b", {k});
}

Var pixel_classify(Var feature_map, const PixelClassifierConfig& cfg, ParamStore& params) {
  Graph& g = *feature_map.graph;
  Var h = ops::conv2d(feature_map, params.bind(g, "cls.dil.w"), params.bind(g, "cls.dil.b"),
                      cfg.dilation, ops::same_padding(cfg.kernel, cfg.dilation));
  h = ops::relu(h);
  return ops::conv2d(h, params.bind(g, "cls.out.w"), params.bind(g, "cls.out.b"), 1, 0);
}

Var fcn_plus_forward(Var image, const FeatureNetConfig& features,
                     const PixelClassifierConfig& classifier, ParamStore& params) {
  return pixel_classify(feature_forward(image, features, params), classifier, params);
}

}  // namespace lbseg
