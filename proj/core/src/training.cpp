#include "lbseg/training.hpp"

#include <cmath>
#include <cstdio>

#include "lbseg/error.hpp"
#include "lbseg/ops.hpp"

namespace lbseg {

bool mode_has_head(TrainMode mode) {
  return mode == TrainMode::kFiltered || mode == TrainMode::kMultitask;
}

bool mode_filters(TrainMode mode) {
  return mode == TrainMode::kFiltered || mode == TrainMode::kOracle;
}

Model::Model(ModelConfig cfg, ModelDims dims, bool with_head, std::uint64_t init_seed)
    : cfg_(std::move(cfg)), dims_(dims), with_head_(with_head) {
  if (dims_.k < 2 || dims_.k > kIgnore) throw ConfigError("class count must be in [2, 255)");
  cfg_.filter.validate();
  SplitMix64 rng(init_seed);
  const std::size_t c = cfg_.features.out_channels();
  init_feature_net(params_, cfg_.features, 3, rng, "feat");
  init_pixel_classifier(params_, cfg_.classifier, c, dims_.k, rng);
  if (with_head_) {
    if (!cfg_.shared_features && head_uses_features(cfg_.head.kind)) {
      init_feature_net(params_, cfg_.features, 3, rng, "headfeat");
    }
    init_head(params_, cfg_.head, {dims_.k, c, dims_.n_attributes, dims_.vocab_size}, rng);
  }
}

Model::Forward Model::forward(Graph& g, const RgbImage& image, const MetaRecord& meta,
                              const LabelImage* labels) {
  Var x = g.constant(image.as_tensor());
  Var feat = feature_forward(x, cfg_.features, params_, "feat");
  Forward out{pixel_classify(feat, cfg_.classifier, params_), std::nullopt};
  if (with_head_) {
    HeadInput in;
    if (head_uses_features(cfg_.head.kind)) {
      in.feature_map = cfg_.shared_features ? feat : feature_forward(x, cfg_.features, params_, "headfeat");
    }
    in.meta = &meta;
    in.labels = labels;
    in.total_stride = cfg_.features.total_stride();
    in.n_attributes = dims_.n_attributes;
    out.head = head_forward(g, in, cfg_.head, params_);
  }
  return out;
}

Var joint_loss(Var seg_loss, Var bank_loss, double lambda) {
  return ops::add(seg_loss, ops::scale(bank_loss, lambda));
}

void sgd_momentum_step(ParamStore& params, OptimizerState& state) {
  for (auto& [name, t] : params.tensors()) {
    if (!t.grad) continue;
    auto& v = state.velocity[name];
    if (v.size() != t.numel()) v.assign(t.numel(), 0.0);
    const auto& g = *t.grad;
    auto w = t.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = state.momentum * v[i] - state.learning_rate * g[i];
      w[i] += v[i];
    }
  }
}

RgbImage flip_horizontal(const RgbImage& img) {
  RgbImage out(img.height, img.width);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < img.height; ++i) {
      for (std::size_t j = 0; j < img.width; ++j) out.at(c, i, img.width - 1 - j) = img.at(c, i, j);
    }
  }
  return out;
}

LabelImage flip_horizontal(const LabelImage& img) {
  LabelImage out(img.height, img.width);
  for (std::size_t i = 0; i < img.height; ++i) {
    for (std::size_t j = 0; j < img.width; ++j) out.at(i, img.width - 1 - j) = img.at(i, j);
  }
  return out;
}

namespace {

// align-corners source coordinate
double source_coord(std::size_t i, std::size_t in, std::size_t out) {
  if (out == 1) return 0.0;
  return static_cast<double>(i) * static_cast<double>(in - 1) / static_cast<double>(out - 1);
}

}  // namespace

RgbImage resize_bilinear(const RgbImage& img, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ShapeError("resize to an empty image");
  RgbImage out(height, width);
  for (std::size_t i = 0; i < height; ++i) {
    const double y = source_coord(i, img.height, height);
    const auto y0 = static_cast<std::size_t>(std::floor(y));
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t j = 0; j < width; ++j) {
      const double x = source_coord(j, img.width, width);
      const auto x0 = static_cast<std::size_t>(std::floor(x));
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double fx = x - static_cast<double>(x0);
      for (std::size_t c = 0; c < 3; ++c) {
        const double top = img.at(c, y0, x0) * (1 - fx) + img.at(c, y0, x1) * fx;
        const double bot = img.at(c, y1, x0) * (1 - fx) + img.at(c, y1, x1) * fx;
        out.at(c, i, j) = top * (1 - fy) + bot * fy;
      }
    }
  }
  return out;
}

LabelImage resize_nearest(const LabelImage& img, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ShapeError("resize to an empty image");
  LabelImage out(height, width);
  for (std::size_t i = 0; i < height; ++i) {
    const std::size_t si = std::min(img.height - 1, (2 * i + 1) * img.height / (2 * height));
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t sj = std::min(img.width - 1, (2 * j + 1) * img.width / (2 * width));
      out.at(i, j) = img.at(si, sj);
    }
  }
  return out;
}

std::size_t snap_size(std::size_t size, double scale, std::size_t multiple) {
  if (multiple == 0 || !(scale > 0.0)) throw ConfigError("bad scale or stride");
  const auto m = std::llround(static_cast<double>(size) * scale / static_cast<double>(multiple));
  return static_cast<std::size_t>(std::max<long long>(m, 1)) * multiple;
}

Augmented augment(const RgbImage& image, const LabelImage& labels, bool flip,
                  const std::vector<double>& scale_set, std::size_t stride, SplitMix64& rng) {
  if (scale_set.empty()) throw ConfigError("scale set is empty");
  Augmented out{image, labels};
  if (flip && rng.bernoulli(0.5)) {
    out.image = flip_horizontal(out.image);
    out.labels = flip_horizontal(out.labels);
  }
  const double s = scale_set[rng.below(scale_set.size())];
  const std::size_t h = snap_size(image.height, s, stride);
  const std::size_t w = snap_size(image.width, s, stride);
  if (h != image.height || w != image.width) {
    out.image = resize_bilinear(out.image, h, w);
    out.labels = resize_nearest(out.labels, h, w);
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("train.epochs must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("train.lr must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (!(loss_balance > 0.0)) throw ConfigError("train.lambda must be positive");
  if (scale_set.empty()) throw ConfigError("train.scales must not be empty");
  for (double s : scale_set) {
    if (!(s > 0.0)) throw ConfigError("train.scales must be positive");
  }
  if (!(oracle_saturation > 0.0)) throw ConfigError("oracle saturation must be positive");
}

Inference infer(Model& model, const Sample& sample) {
  Graph g;
  auto fwd = model.forward(g, sample.image, sample.meta, nullptr);
  Inference out{fwd.seg_map.value(), std::nullopt};
  if (fwd.head) {
    const auto& b = fwd.head->bank.value();
    out.bank = LabelBank{b.values(), BankSource::kInferred};
  }
  return out;
}

LabelImage readout(const Tensor& seg_map, const LabelBank* bank, std::size_t height,
                   std::size_t width, const FilterMode& mode) {
  Graph g;
  Var s = g.constant(seg_map);
  Var full = bank != nullptr ? filter_and_upsample(g.constant(bank->as_tensor()), s, height, width, mode)
                             : ops::bilinear_upsample(s, height, width);
  return predict_labels(full.value());
}

EvalResult evaluate(Model& model, const std::vector<Sample>& split, TrainMode mode,
                    const FilterMode& filter, double oracle_saturation) {
  if (split.empty()) throw ConfigError("cannot evaluate an empty split");
  if (mode_has_head(mode) && !model.with_head()) {
    throw ConfigError("evaluation mode needs a LabelBank head the model does not have");
  }
  const std::size_t k = model.dims().k;
  EvalResult out;
  out.cm = ConfusionMatrix(k);
  BankQuality quality;
  for (const auto& sample : split) {
    const auto inf = infer(model, sample);
    const auto truth = presence_from_labels(sample.labels, k);
    std::optional<LabelBank> bank;
    if (mode == TrainMode::kOracle) bank = oracle_bank(truth, k, oracle_saturation);
    if (mode_has_head(mode)) bank = inf.bank;
    if (bank) quality.add(*bank, truth);
    const LabelBank* used = mode_filters(mode) ? &*bank : nullptr;
    out.cm.accumulate(sample.labels, readout(inf.seg_map, used, sample.labels.height,
                                             sample.labels.width, filter));
  }
  out.scores = score(out.cm);
  if (quality.images() > 0) {
    out.bank_micro = quality.micro();
    out.bank_macro = quality.macro();
  }
  return out;
}

std::string log_header() {
  return "epoch\tpAcc\tmAcc\tmIU\tfwIU\tbank_precision\tbank_recall\tseg_loss\tbank_loss";
}

std::string format_log_line(const EpochLog& log) {
  char buf[256];
  const double nan = std::nan("");
  std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f\t%.6f", log.epoch,
                log.scores.pacc, log.scores.macc, log.scores.miu, log.scores.fwiu,
                log.bank ? log.bank->precision : nan, log.bank ? log.bank->recall : nan, log.seg_loss,
                log.bank_loss);
  return buf;
}

TrainResult train(Model& model, const Dataset& ds, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (ds.train.empty() || ds.val.empty()) throw ConfigError("training needs train and val samples");
  if (ds.k != model.dims().k) throw ConfigError("dataset k does not match the model");
  if (mode_has_head(cfg.mode) != model.with_head()) {
    throw ConfigError("model head does not match the training mode");
  }
  const std::size_t k = ds.k;
  const std::size_t stride = model.config().features.total_stride();
  const FilterMode& filter = model.config().filter;
  OptimizerState opt{cfg.learning_rate, cfg.momentum, {}};
  TrainResult result;
  result.lambda = cfg.loss_balance;
  bool balanced = !cfg.auto_balance;
  double best_miu = -1.0;
  model.params().zero_grad();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    SplitMix64 order_rng(derive_seed(cfg.seed, "shuffle", epoch));
    SplitMix64 aug_rng(derive_seed(cfg.seed, "augment", epoch));
    const auto order = permutation(ds.train.size(), order_rng);
    double seg_sum = 0.0, bank_sum = 0.0;
    std::size_t step = 0;
    for (auto idx : order) {
      const Sample& sample = ds.train[idx];
      auto aug = augment(sample.image, sample.labels, cfg.flip_augment, cfg.scale_set, stride, aug_rng);
      Graph g;
      auto fwd = model.forward(g, aug.image, sample.meta, &aug.labels);
      Var seg_map = fwd.seg_map;
      Var full = seg_map;
      const std::size_t h = aug.labels.height, w = aug.labels.width;
      if (cfg.mode == TrainMode::kFiltered) {
        full = filter_and_upsample(fwd.head->bank, seg_map, h, w, filter);
      } else if (cfg.mode == TrainMode::kOracle) {
        auto bank = oracle_bank(presence_from_labels(aug.labels, k), k, cfg.oracle_saturation);
        full = filter_and_upsample(g.constant(bank.as_tensor()), seg_map, h, w, filter);
      } else {
        full = ops::bilinear_upsample(seg_map, h, w);
      }
      Var seg_loss = ops::softmax_ce(full, aug.labels.labels, kIgnore);
      Var total = seg_loss;
      double bank_value = 0.0;
      if (fwd.head) {
        Var bank_loss = *fwd.head->loss;
        bank_value = bank_loss.value()[0];
        if (!balanced) {
          const double s = seg_loss.value()[0];
          if (std::isfinite(s) && std::isfinite(bank_value) && bank_value > 0.0 && s > 0.0) {
            result.lambda = s / bank_value;
          }
          balanced = true;
        }
        total = joint_loss(seg_loss, bank_loss, result.lambda);
      }
      const double loss = total.value()[0];
      if (!std::isfinite(loss)) {
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                              std::to_string(step));
      }
      g.backward(total);
      sgd_momentum_step(model.params(), opt);
      for (const auto& [name, t] : model.params().tensors()) {
        for (std::size_t i = 0; i < t.numel(); ++i) {
          if (!std::isfinite(t[i])) {
            throw DivergenceError("non-finite weight " + name + " at epoch " + std::to_string(epoch) +
                                  ", step " + std::to_string(step));
          }
        }
      }
      model.params().zero_grad();
      seg_sum += seg_loss.value()[0];
      bank_sum += bank_value;
      ++step;
    }

    const auto ev = evaluate(model, ds.val, cfg.mode, filter, cfg.oracle_saturation);
    EpochLog entry{epoch, ev.scores, ev.bank_micro, seg_sum / static_cast<double>(step),
                   bank_sum / static_cast<double>(step)};
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (ev.scores.miu > best_miu) {
      best_miu = ev.scores.miu;
      result.best_epoch = epoch;
      result.best = model.params().tensors();
    }
  }
  result.last = model.params().tensors();
  return result;
}

}  // namespace lbseg
