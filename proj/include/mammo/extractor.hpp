#ifndef MAMMO_EXTRACTOR_HPP_
#define MAMMO_EXTRACTOR_HPP_

// First-stage per-view feature extractor.
//
// Each grid cell of a normalized raster is summarized by four statistics,
// passed through a shared affine layer with ReLU to form an H x W x C hidden
// tensor, and average-pooled over the spatial grid into a C-dimensional
// feature vector. Two affine heads (diagnosis, density) sit on top of the
// pooled vector during training and are dropped when exporting features.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mammo/features.hpp"
#include "mammo/labels.hpp"
#include "mammo/preprocess.hpp"

namespace mammo {

inline constexpr int kStatsPerCell = 4;

struct ExtractorConfig {
  int grid_h = 16;
  int grid_w = 12;
  int channels = 64;
  double lr_max = 0.01;
  double lr_min = 1e-5;
  double momentum = 0.9;
  int epochs = 50;
  int patience = 15;
  int batch_size = 32;
  uint64_t seed = 0;

  // Throws Error(kConfig).
  void validate() const;
};

// grid_h x grid_w x 4, cell-major: stats[(i * grid_w + j) * 4 + s].
struct StatTensor {
  int grid_h = 0;
  int grid_w = 0;
  std::vector<double> values;

  int cells() const { return grid_h * grid_w; }
  std::span<const double> cell(int index) const {
    return {values.data() + static_cast<size_t>(index) * kStatsPerCell, kStatsPerCell};
  }
};

// Per cell: mean intensity, intensity standard deviation (population), mean
// central-difference gradient magnitude, and the fraction of pixels above the
// raster's global mean. Cell i spans rows [i*H/gh, (i+1)*H/gh).
StatTensor cell_statistics(const NormalizedRaster& raster, int grid_h, int grid_w);

struct ExtractorModel {
  ExtractorConfig config;
  ViewId view{};
  int diagnosis_classes = 5;
  // Flat parameter vector; see the offset accessors for layout.
  std::vector<double> params;
  // Fixed per-statistic standardization applied to every cell before the
  // shared layer: (s - stat_mean) * stat_scale. Set from the training set.
  std::array<double, kStatsPerCell> stat_mean{};
  std::array<double, kStatsPerCell> stat_scale{1.0, 1.0, 1.0, 1.0};

  int channels() const { return config.channels; }
  // w1 is stats x channels, row-major.
  std::span<double> w1() { return block(0, kStatsPerCell * channels()); }
  std::span<double> b1() { return block(off_b1(), channels()); }
  // head weights are channels x classes, row-major.
  std::span<double> w_diag() { return block(off_wd(), channels() * diagnosis_classes); }
  std::span<double> b_diag() { return block(off_bd(), diagnosis_classes); }
  std::span<double> w_dens() { return block(off_wn(), channels() * kDensityClasses); }
  std::span<double> b_dens() { return block(off_bn(), kDensityClasses); }
  std::span<const double> w1() const { return cblock(0, kStatsPerCell * channels()); }
  std::span<const double> b1() const { return cblock(off_b1(), channels()); }
  std::span<const double> w_diag() const { return cblock(off_wd(), channels() * diagnosis_classes); }
  std::span<const double> b_diag() const { return cblock(off_bd(), diagnosis_classes); }
  std::span<const double> w_dens() const { return cblock(off_wn(), channels() * kDensityClasses); }
  std::span<const double> b_dens() const { return cblock(off_bn(), kDensityClasses); }

  static size_t param_count(int channels, int diagnosis_classes);

  // Zero-initialized model with the right parameter count.
  static ExtractorModel zeros(const ExtractorConfig& cfg, ViewId view, int diagnosis_classes);
  // Weights uniform +-sqrt(6 / (fan_in + fan_out)) per layer; hidden biases
  // uniform in [-1, 0], head biases zero.
  static ExtractorModel initialized(const ExtractorConfig& cfg, ViewId view, int diagnosis_classes);

  friend bool operator==(const ExtractorModel& a, const ExtractorModel& b) {
    return a.view == b.view && a.diagnosis_classes == b.diagnosis_classes &&
           a.config.grid_h == b.config.grid_h && a.config.grid_w == b.config.grid_w &&
           a.config.channels == b.config.channels && a.params == b.params &&
           a.stat_mean == b.stat_mean && a.stat_scale == b.stat_scale;
  }

 private:
  size_t off_b1() const { return static_cast<size_t>(kStatsPerCell * channels()); }
  size_t off_wd() const { return off_b1() + static_cast<size_t>(channels()); }
  size_t off_bd() const { return off_wd() + static_cast<size_t>(channels() * diagnosis_classes); }
  size_t off_wn() const { return off_bd() + static_cast<size_t>(diagnosis_classes); }
  size_t off_bn() const { return off_wn() + static_cast<size_t>(channels() * kDensityClasses); }
  std::span<double> block(size_t off, int n) { return {params.data() + off, static_cast<size_t>(n)}; }
  std::span<const double> cblock(size_t off, int n) const {
    return {params.data() + off, static_cast<size_t>(n)};
  }
};

struct ForwardResult {
  std::vector<double> feature;  // pooled, length C
  std::vector<double> logits_diagnosis;
  std::vector<double> logits_density;
};

ForwardResult forward(const ExtractorModel& model, const StatTensor& stats);
ForwardResult forward(const ExtractorModel& model, const NormalizedRaster& raster);

struct CrossEntropy {
  double loss = 0.0;          // nats
  std::vector<double> grad;   // softmax - onehot
};

CrossEntropy softmax_cross_entropy(std::span<const double> logits, int target);

// lr_min + (lr_max - lr_min) * (1 + cos(pi * t / T)) / 2, for 0 <= t <= T.
double cosine_lr(double t, int total, double lr_max, double lr_min);

// v <- momentum * v + g;  p <- p - lr * v.
void sgd_momentum_step(std::span<double> params, std::span<const double> grads,
                       std::span<double> velocity, double lr, double momentum = 0.9);

struct ExtractorSample {
  StatTensor stats;
  int diagnosis = 0;
  int density = 0;
};

// Mean over the batch of (diagnosis CE + density CE). When `grad` is given it
// is resized to params.size() and receives d(loss)/d(params).
double batch_loss(const ExtractorModel& model, std::span<const ExtractorSample> batch,
                  std::vector<double>* grad = nullptr);

// Tracks the best validation score; improvement means strictly greater.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  // Records the score for a 1-based epoch and returns true when training
  // should stop after this epoch.
  bool observe(int epoch, double score);
  bool improved_last() const { return improved_last_; }
  int best_epoch() const { return best_epoch_; }
  double best_score() const { return best_score_; }

 private:
  int patience_;
  int best_epoch_ = 0;
  double best_score_ = 0.0;
  bool improved_last_ = false;
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double val_score = 0.0;  // mean of diagnosis and density macro-F1
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  bool stopped_early = false;
};

struct ExtractorHooks {
  // Replaces the computed validation score for an epoch (1-based).
  std::function<double(int epoch, double computed)> val_score;
};

// Mean and inverse standard deviation of each statistic over all cells of
// the samples; constant statistics get scale 1.
void fit_stat_standardization(ExtractorModel& model, std::span<const ExtractorSample> samples);

// Epoch e (1-based) trains with cosine_lr(e - 1, epochs). Returns the weights
// of the best validation epoch. Weights are initialized from cfg.seed alone,
// so the four views share a starting point; the per-epoch shuffle is seeded
// from cfg.seed and the view. The standardization is fitted on the
// training set before the first epoch. With an empty validation set the training
// set is scored instead. Throws Error(kTrainingRefused) when the training set
// has fewer than two diagnosis classes or a gradient turns non-finite.
struct TrainedExtractor {
  ExtractorModel model;
  TrainLog log;
};
TrainedExtractor train_extractor(std::span<const ExtractorSample> train,
                                 std::span<const ExtractorSample> val, const ExtractorConfig& cfg,
                                 ViewId view, int diagnosis_classes,
                                 const ExtractorHooks& hooks = {});

// Macro-F1 of the diagnosis and density heads, averaged.
double validation_score(const ExtractorModel& model, std::span<const ExtractorSample> samples);

struct ExtractorInput {
  const NormalizedRaster* raster = nullptr;
  FeatureSource source;  // source.view must match the model's view
  int diagnosis = 0;
  int density = 0;
};

// One row per input, in order. Throws Error(kIntegrity) on a view mismatch.
FeatureMatrix extract_features(const ExtractorModel& model, std::span<const ExtractorInput> inputs,
                               const LabelScheme& scheme);

// Model container, little-endian:
//   magic "MXTR" | u32 format version (1) | u32 entry count
//   entries: u8 type (0 text, 1 f64 array) | u16 key length | key
//            text:  u32 length | bytes
//            array: u64 count | count x f64
std::string encode_extractor(const ExtractorModel& model);
ExtractorModel decode_extractor(std::string_view bytes);
void save_extractor(const std::filesystem::path& path, const ExtractorModel& model);
ExtractorModel load_extractor(const std::filesystem::path& path);

std::string render_train_log_csv(const TrainLog& log);

}  // namespace mammo

#endif  // MAMMO_EXTRACTOR_HPP_
