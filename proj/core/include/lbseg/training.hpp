#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lbseg/dataio.hpp"
#include "lbseg/filtering.hpp"
#include "lbseg/heads.hpp"
#include "lbseg/labelbank.hpp"
#include "lbseg/metrics.hpp"
#include "lbseg/params.hpp"
#include "lbseg/segnet.hpp"

namespace lbseg {

// baseline: segmentation only. filtered: head bank filters S. oracle: ground
// truth bank filters S, no head. multitask: head trained alongside, no filter.
enum class TrainMode { kBaseline, kFiltered, kOracle, kMultitask };

bool mode_has_head(TrainMode mode);
bool mode_filters(TrainMode mode);

struct ModelConfig {
  FeatureNetConfig features;
  PixelClassifierConfig classifier;
  HeadConfig head;
  // false gives the head its own feature network ("headfeat.*")
  bool shared_features = true;
  FilterMode filter;
};

struct ModelDims {
  std::size_t k = 0;
  std::size_t n_attributes = 0;
  std::size_t vocab_size = 0;

  static ModelDims of(const Dataset& ds) { return {ds.k, ds.n_attributes, ds.vocabulary.size()}; }
};

class Model {
 public:
  // Initializes every weight from `init_seed`. The head branch exists only
  // when `with_head` is set.
  Model(ModelConfig cfg, ModelDims dims, bool with_head, std::uint64_t init_seed);

  struct Forward {
    Var seg_map;                    // k x h x w
    std::optional<HeadOutput> head;
  };
  // `labels` enables the head loss.
  Forward forward(Graph& g, const RgbImage& image, const MetaRecord& meta, const LabelImage* labels);

  const ModelConfig& config() const { return cfg_; }
  const ModelDims& dims() const { return dims_; }
  bool with_head() const { return with_head_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

 private:
  ModelConfig cfg_;
  ModelDims dims_;
  bool with_head_;
  ParamStore params_;
};

struct OptimizerState {
  double learning_rate = 1e-2;
  double momentum = 0.99;
  std::map<std::string, std::vector<double>> velocity;
};

Var joint_loss(Var seg_loss, Var bank_loss, double lambda);

// v <- mu v - lr g; theta <- theta + v for every tensor that holds a gradient.
void sgd_momentum_step(ParamStore& params, OptimizerState& state);

// Image/label transforms used by augmentation.
RgbImage flip_horizontal(const RgbImage& img);
LabelImage flip_horizontal(const LabelImage& img);
RgbImage resize_bilinear(const RgbImage& img, std::size_t height, std::size_t width);
LabelImage resize_nearest(const LabelImage& img, std::size_t height, std::size_t width);
// Nearest positive multiple of `multiple` to size * scale.
std::size_t snap_size(std::size_t size, double scale, std::size_t multiple);

struct Augmented {
  RgbImage image;
  LabelImage labels;
};

// Flip with probability 0.5 when `flip` is set, then rescale by a factor drawn
// from `scale_set`, snapped to a multiple of `stride`.
Augmented augment(const RgbImage& image, const LabelImage& labels, bool flip,
                  const std::vector<double>& scale_set, std::size_t stride, SplitMix64& rng);

struct TrainConfig {
  TrainMode mode = TrainMode::kFiltered;
  std::size_t epochs = 30;
  double learning_rate = 1e-2;
  double momentum = 0.99;
  double loss_balance = 1.0;
  bool auto_balance = false;
  bool flip_augment = true;
  std::vector<double> scale_set{0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3};
  std::uint64_t seed = 7;
  double oracle_saturation = kOracleSaturation;

  void validate() const;
};

// Per-image forward pass without augmentation or loss.
struct Inference {
  Tensor seg_map;                  // k x h x w
  std::optional<LabelBank> bank;   // inferred bank, when the model has a head
};

Inference infer(Model& model, const Sample& sample);

// Filters (when `bank` is given), upsamples to height x width and takes the argmax.
LabelImage readout(const Tensor& seg_map, const LabelBank* bank, std::size_t height,
                   std::size_t width, const FilterMode& mode);

struct EvalResult {
  ConfusionMatrix cm{0};
  Scores scores;
  std::optional<PrecisionRecall> bank_micro;
  std::optional<PrecisionRecall> bank_macro;
};

// Bank source follows `mode`: the model head for filtered and multitask
// (multitask does not filter), ground truth for oracle, none for baseline.
EvalResult evaluate(Model& model, const std::vector<Sample>& split, TrainMode mode,
                    const FilterMode& filter, double oracle_saturation = kOracleSaturation);

struct EpochLog {
  std::size_t epoch = 0;
  Scores scores;
  std::optional<PrecisionRecall> bank;  // micro average
  double seg_loss = 0.0;
  double bank_loss = 0.0;
};

// Tab-separated: epoch pAcc mAcc mIU fwIU bank_precision bank_recall seg_loss bank_loss
std::string format_log_line(const EpochLog& log);
std::string log_header();

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double lambda = 1.0;
  ParamStore::Map best;
  ParamStore::Map last;
};

// Throws DivergenceError on a non-finite loss.
TrainResult train(Model& model, const Dataset& ds, const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace lbseg
