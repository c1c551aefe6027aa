#include "gradient_suite.hpp"

#include <cmath>

#include "lbseg/filtering.hpp"
#include "lbseg/heads.hpp"
#include "lbseg/ops.hpp"
#include "lbseg/params.hpp"
#include "lbseg/segnet.hpp"
#include "lbseg/training.hpp"

namespace lbseg::testing {
namespace {

// Values in +-[0.1, 1]: keeps relu inputs away from the kink.
Tensor away_from_zero(const Shape& shape, SplitMix64& rng) {
  Tensor t(shape);
  for (auto& v : t.data()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
  return t;
}

GradCheck unary(std::uint64_t seed, const Shape& shape, double lo, double hi,
                const std::function<Var(Var)>& op) {
  SplitMix64 rng(seed);
  Tensor x = random_tensor(shape, rng, lo, hi);
  Tensor probe;
  return check_gradients({&x}, [&](Graph& g) {
    Var y = op(g.leaf(x));
    if (probe.numel() != y.numel()) {
      SplitMix64 prng(seed ^ 0x9e37u);
      probe = random_tensor(y.shape(), prng);
    }
    return weighted_sum(y, probe);
  });
}

// Probe weights are drawn once per check from a separate stream.
struct Probe {
  std::uint64_t seed;
  Tensor w;
  Var operator()(Var y) {
    if (w.numel() != y.numel()) {
      SplitMix64 prng(seed ^ 0x51ed27u);
      w = random_tensor(y.shape(), prng);
    }
    return weighted_sum(y, w);
  }
};

ParamStore random_params(std::uint64_t seed, const std::function<void(ParamStore&, SplitMix64&)>& init) {
  ParamStore p;
  SplitMix64 rng(seed);
  init(p, rng);
  // random biases too, so zero-initialized tensors are exercised
  for (auto& [_, t] : p.tensors()) {
    for (auto& v : t.data()) {
      if (v == 0.0) v = rng.uniform(-0.2, 0.2);
    }
  }
  return p;
}

std::vector<Tensor*> all_params(ParamStore& p) {
  std::vector<Tensor*> out;
  for (auto& [_, t] : p.tensors()) out.push_back(&t);
  return out;
}

LabelImage random_labels(std::size_t h, std::size_t w, std::size_t k, SplitMix64& rng) {
  LabelImage img(h, w);
  for (auto& v : img.labels) v = static_cast<std::uint8_t>(rng.below(k));
  return img;
}

}  // namespace

std::vector<GradCase> gradient_suite() {
  std::vector<GradCase> cases;
  auto add = [&](std::string name, std::function<GradCheck(std::uint64_t)> fn) {
    cases.push_back({std::move(name), std::move(fn)});
  };

  add("sigmoid", [](auto s) { return unary(s, {2, 3, 4}, -5, 5, [](Var x) { return ops::sigmoid(x); }); });
  add("logit", [](auto s) { return unary(s, {3, 5}, 0.05, 0.95, [](Var x) { return ops::logit(x); }); });
  add("relu", [](std::uint64_t s) {
    SplitMix64 rng(s);
    Tensor x = away_from_zero({2, 3, 3}, rng);
    Probe probe{s, {}};
    return check_gradients({&x}, [&](Graph& g) { return probe(ops::relu(g.leaf(x))); });
  });
  add("mul_broadcast", [](std::uint64_t s) {
    SplitMix64 rng(s);
    Tensor a = random_tensor({3}, rng), b = random_tensor({3, 2, 4}, rng);
    Probe probe{s, {}};
    return check_gradients({&a, &b}, [&](Graph& g) { return probe(ops::mul_broadcast(g.leaf(a), g.leaf(b))); });
  });
  add("linear", [](std::uint64_t s) {
    SplitMix64 rng(s);
    Tensor w = random_tensor({4, 5}, rng), b = random_tensor({4}, rng), x = random_tensor({5}, rng);
    Probe probe{s, {}};
    return check_gradients({&w, &b, &x},
                           [&](Graph& g) { return probe(ops::linear(g.leaf(w), g.leaf(b), g.leaf(x))); });
  });
  for (std::size_t dilation : {1, 2}) {
    add("conv2d_d" + std::to_string(dilation), [dilation](std::uint64_t s) {
      SplitMix64 rng(s);
      Tensor x = random_tensor({2, 6, 7}, rng), w = random_tensor({3, 2, 3, 3}, rng),
             b = random_tensor({3}, rng);
      Probe probe{s, {}};
      return check_gradients({&x, &w, &b}, [&](Graph& g) {
        return probe(ops::conv2d(g.leaf(x), g.leaf(w), g.leaf(b), dilation, ops::same_padding(3, dilation)));
      });
    });
  }
  add("conv2d_1x1", [](std::uint64_t s) {
    SplitMix64 rng(s);
    Tensor x = random_tensor({3, 4, 5}, rng), w = random_tensor({2, 3, 1, 1}, rng), b = random_tensor({2}, rng);
    Probe probe{s, {}};
    return check_gradients({&x, &w, &b},
                           [&](Graph& g) { return probe(ops::conv2d(g.leaf(x), g.leaf(w), g.leaf(b), 1, 0)); });
  });
  add("max_pool2", [](auto s) { return unary(s, {2, 4, 6}, -1, 1, [](Var x) { return ops::max_pool2(x); }); });
  add("spp_pool", [](auto s) {
    return unary(s, {2, 5, 7}, -1, 1, [](Var x) {
      const std::vector<std::size_t> levels{1, 2, 3};
      return ops::spp_pool(x, levels);
    });
  });
  add("window_pool", [](auto s) {
    return unary(s, {3, 6, 6}, -1, 1, [](Var x) {
      const std::vector<ops::Rect> rects{{0, 0, 4, 4}, {2, 2, 6, 6}, {0, 2, 4, 6}, {1, 0, 3, 6}};
      return ops::window_pool(x, rects);
    });
  });
  add("window_max", [](auto s) { return unary(s, {5, 3}, -1, 1, [](Var x) { return ops::window_max(x); }); });
  add("softmax_ce", [](std::uint64_t s) {
    SplitMix64 rng(s);
    Tensor x = random_tensor({3, 4, 5}, rng, -3, 3);
    auto labels = random_labels(4, 5, 3, rng);
    labels.labels[0] = kIgnore;
    labels.labels[7] = kIgnore;
    return check_gradients({&x}, [&](Graph& g) { return ops::softmax_ce(g.leaf(x), labels.labels, kIgnore); });
  });
  add("sigmoid_ce", [](std::uint64_t s) {
    SplitMix64 rng(s);
    Tensor x = random_tensor({6}, rng, -4, 4);
    std::vector<double> t(6);
    for (auto& v : t) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    return check_gradients({&x}, [&](Graph& g) { return ops::sigmoid_ce(g.leaf(x), t); });
  });
  add("bilinear_upsample", [](auto s) {
    return unary(s, {2, 3, 4}, -1, 1, [](Var x) { return ops::bilinear_upsample(x, 5, 7); });
  });
  add("embedding_mean", [](std::uint64_t s) {
    SplitMix64 rng(s);
    Tensor table = random_tensor({7, 4}, rng);
    const std::vector<std::size_t> ids{1, 3, 3, 6};
    Probe probe{s, {}};
    return check_gradients({&table}, [&](Graph& g) { return probe(ops::embedding_mean(g.leaf(table), ids)); });
  });
  add("concat_meta", [](std::uint64_t s) {
    SplitMix64 rng(s);
    Tensor x = random_tensor({2, 3, 3}, rng), m = random_tensor({3}, rng);
    Probe probe{s, {}};
    return check_gradients({&x, &m}, [&](Graph& g) { return probe(ops::concat_meta(g.leaf(x), g.leaf(m))); });
  });
  add("add_scale_sum", [](std::uint64_t s) {
    SplitMix64 rng(s);
    Tensor a = random_tensor({2, 3}, rng), b = random_tensor({2, 3}, rng);
    return check_gradients({&a, &b}, [&](Graph& g) {
      Var sa = ops::sigmoid(g.leaf(a));
      return ops::sum(ops::add(sa, ops::scale(ops::sigmoid(g.leaf(b)), -1.7)));
    });
  });

  add("holistic_filter", [](std::uint64_t s) {
    SplitMix64 rng(s);
    Tensor bank = random_tensor({3}, rng, -5, 5), map = random_tensor({3, 4, 4}, rng, -5, 5);
    Probe probe{s, {}};
    return check_gradients({&bank, &map},
                           [&](Graph& g) { return probe(holistic_filter(g.leaf(bank), g.leaf(map))); });
  });
  for (auto order : {FilterOrder::kFilterThenUpsample, FilterOrder::kUpsampleThenFilter}) {
    const std::string name = order == FilterOrder::kFilterThenUpsample ? "filter_then_upsample"
                                                                         : "upsample_then_filter";
    add(name, [order](std::uint64_t s) {
      SplitMix64 rng(s);
      Tensor bank = random_tensor({3}, rng, -5, 5), map = random_tensor({3, 3, 4}, rng, -5, 5);
      Probe probe{s, {}};
      FilterMode mode{order, ops::kDefaultLogitEps};
      return check_gradients({&bank, &map}, [&](Graph& g) {
        return probe(filter_and_upsample(g.leaf(bank), g.leaf(map), 6, 7, mode));
      });
    });
  }

  add("spp_head", [](std::uint64_t s) {
    HeadConfig cfg;
    cfg.kind = HeadKind::kSpp;
    cfg.hidden_units = 6;
    cfg.spp_levels = {1, 2};
    auto p = random_params(s, [&](ParamStore& ps, SplitMix64& r) { init_head(ps, cfg, {4, 3, 0, 0}, r); });
    SplitMix64 rng(s + 1);
    Tensor fmap = random_tensor({3, 4, 4}, rng);
    auto labels = random_labels(16, 16, 4, rng);
    auto inputs = all_params(p);
    inputs.push_back(&fmap);
    return check_gradients(inputs, [&](Graph& g) { return *spp_forward(g.leaf(fmap), cfg, p, &labels).loss; });
  });
  add("dc_head", [](std::uint64_t s) {
    HeadConfig cfg;
    cfg.kind = HeadKind::kDc;
    cfg.dc_channels = 5;
    cfg.dc_window = 3;
    cfg.dc_stride = 2;
    auto p = random_params(s, [&](ParamStore& ps, SplitMix64& r) { init_head(ps, cfg, {4, 3, 0, 0}, r); });
    SplitMix64 rng(s + 1);
    Tensor fmap = random_tensor({3, 6, 6}, rng);
    auto labels = random_labels(24, 24, 4, rng);
    auto inputs = all_params(p);
    inputs.push_back(&fmap);
    return check_gradients(inputs, [&](Graph& g) { return *dc_forward(g.leaf(fmap), &labels, 4, cfg, p).loss; });
  });
  add("ohe_head", [](std::uint64_t s) {
    HeadConfig cfg;
    cfg.kind = HeadKind::kOhe;
    cfg.hidden_units = 5;
    auto p = random_params(s, [&](ParamStore& ps, SplitMix64& r) { init_head(ps, cfg, {4, 3, 6, 0}, r); });
    SplitMix64 rng(s + 1);
    auto labels = random_labels(8, 8, 4, rng);
    const std::vector<std::size_t> attrs{0, 2, 5};
    return check_gradients(all_params(p), [&](Graph& g) { return *ohe_forward(g, attrs, 6, cfg, p, &labels).loss; });
  });
  add("w2v_head", [](std::uint64_t s) {
    HeadConfig cfg;
    cfg.kind = HeadKind::kW2v;
    cfg.hidden_units = 5;
    cfg.embed_dim = 4;
    auto p = random_params(s, [&](ParamStore& ps, SplitMix64& r) { init_head(ps, cfg, {4, 3, 0, 9}, r); });
    SplitMix64 rng(s + 1);
    auto labels = random_labels(8, 8, 4, rng);
    const std::vector<std::size_t> caption{0, 1, 2, 7, 3, 8};
    return check_gradients(all_params(p), [&](Graph& g) { return *w2v_forward(g, caption, cfg, p, &labels).loss; });
  });
  add("combined_head", [](std::uint64_t s) {
    HeadConfig cfg;
    cfg.kind = HeadKind::kCombined;
    cfg.meta_source = MetaSource::kW2v;
    cfg.dc_channels = 4;
    cfg.dc_window = 2;
    cfg.dc_stride = 2;
    cfg.embed_dim = 3;
    auto p = random_params(s, [&](ParamStore& ps, SplitMix64& r) { init_head(ps, cfg, {3, 2, 0, 6}, r); });
    SplitMix64 rng(s + 1);
    Tensor fmap = random_tensor({2, 4, 4}, rng);
    auto labels = random_labels(16, 16, 3, rng);
    MetaRecord meta{{}, {0, 4, 5}};
    auto inputs = all_params(p);
    inputs.push_back(&fmap);
    return check_gradients(inputs, [&](Graph& g) {
      Var m = meta_feature(g, meta, cfg, p, 0);
      return *combined_forward(g.leaf(fmap), m, &labels, 4, cfg, p).loss;
    });
  });
  add("segnet", [](std::uint64_t s) {
    FeatureNetConfig fc;
    fc.stages = {{3, 1}, {4, 1}};
    PixelClassifierConfig pc;
    pc.channels = 5;
    auto p = random_params(s, [&](ParamStore& ps, SplitMix64& r) {
      init_feature_net(ps, fc, 3, r);
      init_pixel_classifier(ps, pc, 4, 3, r);
    });
    SplitMix64 rng(s + 1);
    Tensor image = random_tensor({3, 16, 16}, rng, 0, 1);
    Probe probe{s, {}};
    auto inputs = all_params(p);
    inputs.push_back(&image);
    return check_gradients(inputs, [&](Graph& g) { return probe(fcn_plus_forward(g.leaf(image), fc, pc, p)); });
  });
  add("joint_filtered_loss", [](std::uint64_t s) {
    ModelConfig mc;
    mc.features.stages = {{3, 1}, {4, 1}};
    mc.classifier.channels = 4;
    mc.head.kind = HeadKind::kDc;
    mc.head.dc_channels = 4;
    mc.head.dc_window = 2;
    mc.head.dc_stride = 2;
    Model model(mc, {3, 0, 0}, true, s);
    SplitMix64 rng(s + 1);
    for (auto& [_, t] : model.params().tensors()) {
      for (auto& v : t.data()) {
        if (v == 0.0) v = rng.uniform(-0.2, 0.2);
      }
    }
    RgbImage image(16, 16);
    for (auto& v : image.pixels) v = rng.uniform();
    auto labels = random_labels(16, 16, 3, rng);
    return check_gradients(all_params(model.params()), [&](Graph& g) {
      auto fwd = model.forward(g, image, {}, &labels);
      Var full = filter_and_upsample(fwd.head->bank, fwd.seg_map, 16, 16, mc.filter);
      return joint_loss(ops::softmax_ce(full, labels.labels, kIgnore), *fwd.head->loss, 0.7);
    });
  });
  return cases;
}

}  // namespace lbseg::testing
