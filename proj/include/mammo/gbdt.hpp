#ifndef MAMMO_GBDT_HPP_
#define MAMMO_GBDT_HPP_

// Histogram-based gradient-boosted trees with a softmax multiclass objective
// and leaf-wise (best-first) growth.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mammo::gbdt {

struct GbdtConfig {
  int n_rounds = 100;
  double learning_rate = 0.1;
  int max_leaves = 31;
  int min_samples_leaf = 5;
  double lambda = 1.0;
  double gamma = 0.0;
  int max_bins = 255;
  int early_stop_rounds = 10;  // used only when a validation set is given
  uint64_t seed = 0;

  // Throws Error(kConfig).
  void validate() const;

  friend bool operator==(const GbdtConfig&, const GbdtConfig&) = default;
};

// Dense row-major matrix view.
struct Matrix {
  std::span<const double> values;
  size_t rows = 0;
  size_t cols = 0;

  double at(size_t r, size_t c) const { return values[r * cols + c]; }
};

class BinMapper {
 public:
  BinMapper() = default;
  explicit BinMapper(std::vector<std::vector<double>> thresholds)
      : thresholds_(std::move(thresholds)) {}

  size_t features() const { return thresholds_.size(); }
  int bins(size_t feature) const { return static_cast<int>(thresholds_[feature].size()) + 1; }
  // Index of the first threshold >= x; values above every threshold land in
  // the last bin.
  int bin(size_t feature, double x) const;
  const std::vector<double>& thresholds(size_t feature) const { return thresholds_[feature]; }

  friend bool operator==(const BinMapper&, const BinMapper&) = default;

 private:
  std::vector<std::vector<double>> thresholds_;
};

// Features with at most max_bins distinct values get one bin per value, with
// boundaries at midpoints; otherwise boundaries are placed at quantiles of the
// sorted values. Throws Error(kIntegrity) naming the row/column of any
// non-finite value.
BinMapper build_bins(const Matrix& x, int max_bins);

// Column-major bin indices, bins[f * rows + r].
struct BinnedMatrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<uint8_t> bins;
  std::vector<int> bins_per_feature;

  uint8_t at(size_t r, size_t f) const { return bins[f * rows + r]; }
};

BinnedMatrix apply_bins(const BinMapper& mapper, const Matrix& x);

struct GradHess {
  std::vector<double> g;  // M x K
  std::vector<double> h;  // M x K
};

// Row-wise softmax p; g = p - onehot(y), h = p (1 - p).
GradHess softmax_objective(std::span<const double> raw, size_t classes, std::span<const int> labels);

// Mean multiclass log-loss of raw scores.
double log_loss(std::span<const double> raw, size_t classes, std::span<const int> labels);

struct BinStats {
  double g = 0.0;
  double h = 0.0;
  long count = 0;
};

// Per feature, per bin sums for one node.
struct NodeHistogram {
  std::vector<std::vector<BinStats>> features;

  BinStats total() const;
};

NodeHistogram build_histogram(const BinnedMatrix& x, std::span<const double> g,
                              std::span<const double> h, std::span<const size_t> samples);

struct SplitCandidate {
  int feature = 0;
  int threshold_bin = 0;  // left child takes bins <= threshold_bin
  double gain = 0.0;
  BinStats left;
  BinStats right;
};

// Split gain: 0.5 [GL^2/(HL+l) + GR^2/(HR+l) - (GL+GR)^2/(HL+HR+l)] - gamma.
double split_gain(const BinStats& left, const BinStats& right, double lambda, double gamma);

// Best admissible split (both children >= min_samples_leaf), or nullopt when
// the best gain is <= 0. Ties go to the lowest feature, then lowest threshold.
std::optional<SplitCandidate> best_split(const NodeHistogram& hist, double lambda, double gamma,
                                         int min_samples_leaf);

struct TreeNode {
  bool is_leaf = true;
  int feature = -1;
  int threshold_bin = -1;
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaves only; already scaled by the learning rate

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double predict(std::span<const double> x) const;
  int leaf_count() const;

  friend bool operator==(const Tree&, const Tree&) = default;
};

// Best-first growth over the given samples until max_leaves or no positive
// gain. Leaf value = -G / (H + lambda) * learning_rate.
Tree grow_tree(const BinnedMatrix& x, const BinMapper& mapper, std::span<const double> g,
               std::span<const double> h, std::span<const size_t> samples, const GbdtConfig& cfg);

struct Forest {
  int classes = 0;
  int features = 0;
  std::vector<double> base_score;
  std::vector<std::vector<Tree>> rounds;  // rounds[r][k]
  BinMapper bins;
  GbdtConfig config;

  std::vector<double> predict_raw(std::span<const double> x) const;
  std::vector<double> predict_proba(std::span<const double> x) const;
  int predict(std::span<const double> x) const;

  friend bool operator==(const Forest&, const Forest&) = default;
};

struct RoundLog {
  int round = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<double> val_loss;
};

struct TrainResult {
  Forest forest;
  std::vector<RoundLog> log;
  int best_round = 0;  // rounds kept in the forest
};

struct Validation {
  Matrix x;
  std::span<const int> y;
};

// Base score is the log class prior (absent classes floored at 1e-12).
// Throws Error(kTrainingRefused) when y has fewer than two classes.
TrainResult train(const Matrix& x, std::span<const int> y, int classes, const GbdtConfig& cfg,
                  const std::optional<Validation>& validation = std::nullopt);

// Structured-text (JSON) model document with a format_version field.
std::string encode_forest(const Forest& forest);
Forest decode_forest(const std::string& text);
void save_forest(const std::filesystem::path& path, const Forest& forest);
Forest load_forest(const std::filesystem::path& path);

}  // namespace mammo::gbdt

#endif  // MAMMO_GBDT_HPP_
