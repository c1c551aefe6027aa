#include "lbseg/heads.hpp"

#include "lbseg/error.hpp"

namespace lbseg {
namespace {

void init_mlp(ParamStore& params, std::size_t in, std::size_t hidden, std::size_t k,
              SplitMix64& rng) {
  params.create_he_uniform("head.fc1.w", {hidden, in}, in, rng);
  params.create("head.fc1.b", {hidden});
  params.create_he_uniform("head.fc2.w", {k, hidden}, hidden, rng);
  params.create("head.fc2.b", {k});
}

Var mlp(Var x, ParamStore& params) {
  Graph& g = *x.graph;
  Var h = ops::relu(ops::linear(params.bind(g, "head.fc1.w"), params.bind(g, "head.fc1.b"), x));
  return ops::linear(params.bind(g, "head.fc2.w"), params.bind(g, "head.fc2.b"), h);
}

void init_dc(ParamStore& params, const HeadConfig& cfg, std::size_t in, std::size_t k,
             SplitMix64& rng) {
  params.create_he_uniform("head.conv1.w", {cfg.dc_channels, in, 3, 3}, in * 9, rng);
  params.create("head.conv1.b", {cfg.dc_channels});
  params.create_he_uniform("head.conv2.w", {k, cfg.dc_channels, 1, 1}, cfg.dc_channels, rng);
  params.create("head.conv2.b", {k});
}

HeadOutput image_level(Var bank, const LabelImage* labels) {
  HeadOutput out{bank, std::nullopt, {}, std::nullopt};
  if (labels != nullptr) {
    const auto targets = presence_targets(presence_from_labels(*labels, bank.numel()), bank.numel());
    out.loss = ops::sigmoid_ce(bank, targets);
  }
  return out;
}

std::size_t meta_dim(const HeadConfig& cfg, const HeadDims& dims) {
  return cfg.meta_source == MetaSource::kW2v ? cfg.embed_dim : dims.n_attributes;
}

}  // namespace

bool head_uses_features(HeadKind kind) {
  return kind == HeadKind::kSpp || kind == HeadKind::kDc || kind == HeadKind::kCombined;
}

void init_head(ParamStore& params, const HeadConfig& cfg, const HeadDims& dims, SplitMix64& rng) {
  if (dims.k == 0) throw ConfigError("head needs k > 0");
  switch (cfg.kind) {
    case HeadKind::kSpp: {
      if (cfg.spp_levels.empty()) throw ConfigError("spp head needs pyramid levels");
      std::size_t cells = 0;
      for (auto lvl : cfg.spp_levels) cells += lvl * lvl;
      init_mlp(params, dims.feature_channels * cells, cfg.hidden_units, dims.k, rng);
      break;
    }
    case HeadKind::kDc:
      init_dc(params, cfg, dims.feature_channels, dims.k, rng);
      break;
    case HeadKind::kOhe:
      if (dims.n_attributes == 0) throw ConfigError("ohe head needs an attribute vocabulary");
      init_mlp(params, dims.n_attributes, cfg.hidden_units, dims.k, rng);
      break;
    case HeadKind::kW2v:
      if (dims.vocab_size == 0) throw ConfigError("w2v head needs a word vocabulary");
      params.create_he_uniform("head.embed", {dims.vocab_size, cfg.embed_dim}, cfg.embed_dim, rng);
      init_mlp(params, cfg.embed_dim, cfg.hidden_units, dims.k, rng);
      break;
    case HeadKind::kCombined:
      if (cfg.meta_source == MetaSource::kW2v) {
        if (dims.vocab_size == 0) throw ConfigError("combined head needs a word vocabulary");
        params.create_he_uniform("head.embed", {dims.vocab_size, cfg.embed_dim}, cfg.embed_dim, rng);
      }
      init_dc(params, cfg, dims.feature_channels + meta_dim(cfg, dims), dims.k, rng);
      break;
  }
}

std::vector<std::size_t> window_origins(std::size_t extent, std::size_t window, std::size_t stride) {
  if (stride == 0) throw ConfigError("dc stride must be positive");
  if (window == 0 || window > extent) {
    throw ConfigError("dc window " + std::to_string(window) + " does not fit extent " +
                      std::to_string(extent));
  }
  std::vector<std::size_t> out;
  for (std::size_t p = 0;; p += stride) {
    if (p + window >= extent) {
      out.push_back(extent - window);
      break;
    }
    out.push_back(p);
  }
  return out;
}

std::vector<ops::Rect> dc_windows(std::size_t h, std::size_t w, std::size_t window, std::size_t stride) {
  std::vector<ops::Rect> out;
  for (auto r : window_origins(h, window, stride)) {
    for (auto c : window_origins(w, window, stride)) out.push_back({r, c, r + window, c + window});
  }
  return out;
}

ops::Rect to_pixels(const ops::Rect& cells, std::size_t stride, std::size_t height, std::size_t width) {
  return {std::min(cells.row0 * stride, height), std::min(cells.col0 * stride, width),
          std::min(cells.row1 * stride, height), std::min(cells.col1 * stride, width)};
}

HeadOutput spp_forward(Var feature_map, const HeadConfig& cfg, ParamStore& params,
                       const LabelImage* labels) {
  Var pooled = ops::spp_pool(feature_map, cfg.spp_levels);
  return image_level(mlp(pooled, params), labels);
}

HeadOutput dc_forward(Var feature_map, const LabelImage* labels, std::size_t total_stride,
                      const HeadConfig& cfg, ParamStore& params) {
  Graph& g = *feature_map.graph;
  const auto& shape = feature_map.shape();
  if (shape.size() != 3) throw ShapeError("dc head expects a c x h x w feature map");
  const std::size_t h = shape[1], w = shape[2];
  auto windows = dc_windows(h, w, cfg.dc_window, cfg.dc_stride);

  Var x = ops::conv2d(feature_map, params.bind(g, "head.conv1.w"), params.bind(g, "head.conv1.b"),
                      cfg.dc_dilation, ops::same_padding(3, cfg.dc_dilation));
  x = ops::relu(x);
  Var cells = ops::conv2d(x, params.bind(g, "head.conv2.w"), params.bind(g, "head.conv2.b"), 1, 0);
  Var window_logits = ops::window_pool(cells, windows);
  Var bank = ops::window_max(window_logits);

  HeadOutput out{bank, window_logits, windows, std::nullopt};
  if (labels != nullptr) {
    const std::size_t k = bank.numel();
    std::vector<double> targets;
    targets.reserve(windows.size() * k);
    for (const auto& win : windows) {
      const auto px = to_pixels(win, total_stride, labels->height, labels->width);
      const auto t = presence_targets(window_presence(*labels, px, k), k);
      targets.insert(targets.end(), t.begin(), t.end());
    }
    // mean over all n*k entries == mean over windows of per-window means
    out.loss = ops::sigmoid_ce(window_logits, targets);
  }
  return out;
}

HeadOutput ohe_forward(Graph& g, const std::vector<std::size_t>& attrs, std::size_t vocab_size,
                       const HeadConfig& /*cfg*/, ParamStore& params, const LabelImage* labels) {
  Tensor hot({vocab_size});
  for (auto a : attrs) {
    if (a >= vocab_size) throw DomainError("attribute id " + std::to_string(a) + " out of range");
    hot[a] = 1.0;
  }
  return image_level(mlp(g.constant(std::move(hot)), params), labels);
}

HeadOutput w2v_forward(Graph& g, const std::vector<std::size_t>& caption, const HeadConfig& /*cfg*/,
                       ParamStore& params, const LabelImage* labels) {
  Var mean = ops::embedding_mean(params.bind(g, "head.embed"), caption);
  return image_level(mlp(mean, params), labels);
}

HeadOutput combined_forward(Var feature_map, Var meta, const LabelImage* labels,
                            std::size_t total_stride, const HeadConfig& cfg, ParamStore& params) {
  return dc_forward(ops::concat_meta(feature_map, meta), labels, total_stride, cfg, params);
}

Var meta_feature(Graph& g, const MetaRecord& meta, const HeadConfig& cfg, ParamStore& params,
                 std::size_t n_attributes) {
  if (cfg.meta_source == MetaSource::kW2v) {
    return ops::embedding_mean(params.bind(g, "head.embed"), meta.caption);
  }
  Tensor hot({n_attributes});
  for (auto a : meta.attributes) {
    if (a >= n_attributes) throw DomainError("attribute id out of range");
    hot[a] = 1.0;
  }
  return g.constant(std::move(hot));
}

HeadOutput head_forward(Graph& g, const HeadInput& in, const HeadConfig& cfg, ParamStore& params) {
  if (head_uses_features(cfg.kind) && !in.feature_map) {
    throw ContractError("visual head needs a feature map");
  }
  if (!head_uses_features(cfg.kind) || cfg.kind == HeadKind::kCombined) {
    if (in.meta == nullptr) throw ContractError("meta-data head needs a meta record");
  }
  switch (cfg.kind) {
    case HeadKind::kSpp: return spp_forward(*in.feature_map, cfg, params, in.labels);
    case HeadKind::kDc: return dc_forward(*in.feature_map, in.labels, in.total_stride, cfg, params);
    case HeadKind::kOhe:
      return ohe_forward(g, in.meta->attributes, in.n_attributes, cfg, params, in.labels);
    case HeadKind::kW2v: return w2v_forward(g, in.meta->caption, cfg, params, in.labels);
    case HeadKind::kCombined: {
      Var meta = meta_feature(g, *in.meta, cfg, params, in.n_attributes);
      return combined_forward(*in.feature_map, meta, in.labels, in.total_stride, cfg, params);
    }
  }
  throw ConfigError("unknown head kind");
}

}  // namespace lbseg
