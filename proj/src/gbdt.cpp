#include "mammo/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "binary_io.hpp"
#include "json.hpp"
#include "mammo/error.hpp"

namespace mammo::gbdt {

void GbdtConfig::validate() const {
  if (n_rounds < 1) fail(ErrorCode::kConfig, "gbdt.n_rounds must be >= 1");
  if (!(learning_rate > 0.0)) fail(ErrorCode::kConfig, "gbdt.learning_rate must be > 0");
  if (max_leaves < 2) fail(ErrorCode::kConfig, "gbdt.max_leaves must be >= 2");
  if (min_samples_leaf < 1) fail(ErrorCode::kConfig, "gbdt.min_samples_leaf must be >= 1");
  if (!(lambda >= 0.0)) fail(ErrorCode::kConfig, "gbdt.lambda must be >= 0");
  if (!(gamma >= 0.0)) fail(ErrorCode::kConfig, "gbdt.gamma must be >= 0");
  if (max_bins < 2 || max_bins > 255) fail(ErrorCode::kConfig, "gbdt.max_bins must lie in [2, 255]");
  if (early_stop_rounds < 1) fail(ErrorCode::kConfig, "gbdt.early_stop_rounds must be >= 1");
}

int BinMapper::bin(size_t feature, double x) const {
  const auto& t = thresholds_[feature];
  return static_cast<int>(std::lower_bound(t.begin(), t.end(), x) - t.begin());
}

BinMapper build_bins(const Matrix& x, int max_bins) {
  if (x.rows < 1) fail(ErrorCode::kIntegrity, "cannot bin an empty matrix");
  if (max_bins < 2 || max_bins > 255) fail(ErrorCode::kConfig, "max_bins must lie in [2, 255]");
  std::vector<std::vector<double>> thresholds(x.cols);
  std::vector<double> column(x.rows);
  for (size_t f = 0; f < x.cols; ++f) {
    for (size_t r = 0; r < x.rows; ++r) {
      const double v = x.at(r, f);
      if (!std::isfinite(v)) {
        fail(ErrorCode::kIntegrity, "non-finite feature value at row " + std::to_string(r) +
                                        ", column " + std::to_string(f));
      }
      column[r] = v;
    }
    std::sort(column.begin(), column.end());
    std::vector<double> distinct;
    std::vector<size_t> counts;
    for (double v : column) {
      if (distinct.empty() || v != distinct.back()) {
        distinct.push_back(v);
        counts.push_back(0);
      }
      ++counts.back();
    }
    auto midpoint = [](double a, double b) {
      const double m = a + (b - a) * 0.5;
      return m < b ? m : a;
    };
    auto& out = thresholds[f];
    if (distinct.size() <= static_cast<size_t>(max_bins)) {
      for (size_t i = 0; i + 1 < distinct.size(); ++i) out.push_back(midpoint(distinct[i], distinct[i + 1]));
      continue;
    }
    // Close a bin once its cumulative share reaches the next quantile.
    const double per_bin = static_cast<double>(x.rows) / max_bins;
    size_t cumulative = 0;
    for (size_t i = 0; i + 1 < distinct.size(); ++i) {
      cumulative += counts[i];
      const double target = per_bin * static_cast<double>(out.size() + 1);
      if (static_cast<double>(cumulative) >= target - 1e-9) {
        out.push_back(midpoint(distinct[i], distinct[i + 1]));
        if (out.size() + 1 == static_cast<size_t>(max_bins)) break;
      }
    }
  }
  return BinMapper(std::move(thresholds));
}

BinnedMatrix apply_bins(const BinMapper& mapper, const Matrix& x) {
  if (x.cols != mapper.features()) fail(ErrorCode::kIntegrity, "bin mapper feature count mismatch");
  BinnedMatrix b;
  b.rows = x.rows;
  b.cols = x.cols;
  b.bins.resize(x.rows * x.cols);
  for (size_t f = 0; f < x.cols; ++f) {
    b.bins_per_feature.push_back(mapper.bins(f));
    for (size_t r = 0; r < x.rows; ++r) b.bins[f * x.rows + r] = static_cast<uint8_t>(mapper.bin(f, x.at(r, f)));
  }
  return b;
}

namespace {

void softmax_row(std::span<const double> raw, std::span<double> p) {
  const double m = *std::max_element(raw.begin(), raw.end());
  double sum = 0.0;
  for (size_t k = 0; k < raw.size(); ++k) {
    p[k] = std::exp(raw[k] - m);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
}

void check_labels(std::span<const int> labels, size_t classes) {
  for (int y : labels) {
    if (y < 0 || static_cast<size_t>(y) >= classes) {
      fail(ErrorCode::kIntegrity, "label " + std::to_string(y) + " out of range for " +
                                      std::to_string(classes) + " classes");
    }
  }
}

}  // namespace

GradHess softmax_objective(std::span<const double> raw, size_t classes, std::span<const int> labels) {
  check_labels(labels, classes);
  if (raw.size() != labels.size() * classes) fail(ErrorCode::kIntegrity, "score matrix shape mismatch");
  GradHess gh;
  gh.g.resize(raw.size());
  gh.h.resize(raw.size());
  std::vector<double> p(classes);
  for (size_t i = 0; i < labels.size(); ++i) {
    softmax_row(raw.subspan(i * classes, classes), p);
    for (size_t k = 0; k < classes; ++k) {
      gh.g[i * classes + k] = p[k] - (static_cast<size_t>(labels[i]) == k ? 1.0 : 0.0);
      gh.h[i * classes + k] = p[k] * (1.0 - p[k]);
    }
  }
  return gh;
}

double log_loss(std::span<const double> raw, size_t classes, std::span<const int> labels) {
  check_labels(labels, classes);
  if (labels.empty()) return 0.0;
  double total = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const auto row = raw.subspan(i * classes, classes);
    const double m = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - m);
    total += std::log(sum) - (row[static_cast<size_t>(labels[i])] - m);
  }
  return total / static_cast<double>(labels.size());
}

BinStats NodeHistogram::total() const {
  BinStats t;
  if (features.empty()) return t;
  for (const BinStats& b : features.front()) {
    t.g += b.g;
    t.h += b.h;
    t.count += b.count;
  }
  return t;
}

NodeHistogram build_histogram(const BinnedMatrix& x, std::span<const double> g, std::span<const double> h,
                              std::span<const size_t> samples) {
  NodeHistogram hist;
  hist.features.resize(x.cols);
  for (size_t f = 0; f < x.cols; ++f) {
    auto& bins = hist.features[f];
    bins.assign(static_cast<size_t>(x.bins_per_feature[f]), BinStats{});
    const uint8_t* col = x.bins.data() + f * x.rows;
    for (size_t s : samples) {
      BinStats& b = bins[col[s]];
      b.g += g[s];
      b.h += h[s];
      ++b.count;
    }
  }
  return hist;
}

double split_gain(const BinStats& left, const BinStats& right, double lambda, double gamma) {
  const double gl = left.g, hl = left.h, gr = right.g, hr = right.h;
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                (gl + gr) * (gl + gr) / (hl + hr + lambda)) -
         gamma;
}

std::optional<SplitCandidate> best_split(const NodeHistogram& hist, double lambda, double gamma,
                                         int min_samples_leaf) {
  const BinStats total = hist.total();
  std::optional<SplitCandidate> best;
  for (size_t f = 0; f < hist.features.size(); ++f) {
    const auto& bins = hist.features[f];
    BinStats left;
    for (size_t b = 0; b + 1 < bins.size(); ++b) {
      left.g += bins[b].g;
      left.h += bins[b].h;
      left.count += bins[b].count;
      const BinStats right{total.g - left.g, total.h - left.h, total.count - left.count};
      if (left.count < min_samples_leaf || right.count < min_samples_leaf) continue;
      const double gain = split_gain(left, right, lambda, gamma);
      // Gains equal up to rounding count as ties.
      if (!best || gain > best->gain + 1e-12 * std::max(1.0, std::abs(best->gain))) {
        best = SplitCandidate{static_cast<int>(f), static_cast<int>(b), gain, left, right};
      }
    }
  }
  if (best && best->gain <= 0.0) return std::nullopt;
  return best;
}

double Tree::predict(std::span<const double> x) const {
  int n = 0;
  while (!nodes[static_cast<size_t>(n)].is_leaf) {
    const TreeNode& node = nodes[static_cast<size_t>(n)];
    n = x[static_cast<size_t>(node.feature)] <= node.threshold ? node.left : node.right;
  }
  return nodes[static_cast<size_t>(n)].value;
}

int Tree::leaf_count() const {
  return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf; }));
}

Tree grow_tree(const BinnedMatrix& x, const BinMapper& mapper, std::span<const double> g,
               std::span<const double> h, std::span<const size_t> samples, const GbdtConfig& cfg) {
  struct OpenLeaf {
    int node;
    std::vector<size_t> samples;
    BinStats total;
    std::optional<SplitCandidate> split;
  };
  Tree tree;
  auto leaf_value = [&](const BinStats& s) { return -s.g / (s.h + cfg.lambda) * cfg.learning_rate; };
  auto open = [&](int node, std::vector<size_t> idx) {
    OpenLeaf leaf{node, std::move(idx), {}, std::nullopt};
    const NodeHistogram hist = build_histogram(x, g, h, leaf.samples);
    leaf.total = hist.total();
    if (static_cast<long>(leaf.samples.size()) >= 2L * cfg.min_samples_leaf) {
      leaf.split = best_split(hist, cfg.lambda, cfg.gamma, cfg.min_samples_leaf);
    }
    tree.nodes[static_cast<size_t>(node)].value = leaf_value(leaf.total);
    return leaf;
  };

  tree.nodes.push_back(TreeNode{});
  std::vector<OpenLeaf> leaves;
  leaves.push_back(open(0, std::vector<size_t>(samples.begin(), samples.end())));
  int leaf_count = 1;
  while (leaf_count < cfg.max_leaves) {
    // Highest pending gain; ties go to the earliest-created leaf.
    int pick = -1;
    for (size_t i = 0; i < leaves.size(); ++i) {
      if (!leaves[i].split) continue;
      if (pick < 0 || leaves[i].split->gain > leaves[static_cast<size_t>(pick)].split->gain) {
        pick = static_cast<int>(i);
      }
    }
    if (pick < 0) break;
    OpenLeaf leaf = std::move(leaves[static_cast<size_t>(pick)]);
    leaves.erase(leaves.begin() + pick);
    const SplitCandidate& s = *leaf.split;

    std::vector<size_t> left, right;
    const uint8_t* col = x.bins.data() + static_cast<size_t>(s.feature) * x.rows;
    for (size_t i : leaf.samples) (col[i] <= s.threshold_bin ? left : right).push_back(i);

    const int left_id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    tree.nodes.push_back(TreeNode{});
    TreeNode& parent = tree.nodes[static_cast<size_t>(leaf.node)];
    parent.is_leaf = false;
    parent.feature = s.feature;
    parent.threshold_bin = s.threshold_bin;
    parent.threshold = mapper.thresholds(static_cast<size_t>(s.feature))[static_cast<size_t>(s.threshold_bin)];
    parent.left = left_id;
    parent.right = left_id + 1;
    parent.value = 0.0;
    leaves.push_back(open(left_id, std::move(left)));
    leaves.push_back(open(left_id + 1, std::move(right)));
    ++leaf_count;
  }
  return tree;
}

std::vector<double> Forest::predict_raw(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != features) {
    fail(ErrorCode::kIntegrity, "input has " + std::to_string(x.size()) + " features, model expects " +
                                    std::to_string(features));
  }
  std::vector<double> raw = base_score;
  for (const auto& round : rounds) {
    for (size_t k = 0; k < round.size(); ++k) raw[k] += round[k].predict(x);
  }
  return raw;
}

std::vector<double> Forest::predict_proba(std::span<const double> x) const {
  const std::vector<double> raw = predict_raw(x);
  std::vector<double> p(raw.size());
  softmax_row(raw, p);
  return p;
}

int Forest::predict(std::span<const double> x) const {
  const std::vector<double> p = predict_proba(x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

TrainResult train(const Matrix& x, std::span<const int> y, int classes, const GbdtConfig& cfg,
                  const std::optional<Validation>& validation) {
  cfg.validate();
  if (x.rows != y.size()) fail(ErrorCode::kIntegrity, "feature rows and labels differ in length");
  if (classes < 2) fail(ErrorCode::kTrainingRefused, "classifier needs at least two classes");
  check_labels(y, static_cast<size_t>(classes));
  std::vector<long> counts(static_cast<size_t>(classes), 0);
  for (int v : y) ++counts[static_cast<size_t>(v)];
  if (std::count_if(counts.begin(), counts.end(), [](long c) { return c > 0; }) < 2) {
    fail(ErrorCode::kTrainingRefused, "training labels contain a single class");
  }
  if (validation) {
    if (validation->x.cols != x.cols || validation->x.rows != validation->y.size()) {
      fail(ErrorCode::kIntegrity, "validation set shape mismatch");
    }
    check_labels(validation->y, static_cast<size_t>(classes));
  }

  const auto k_dim = static_cast<size_t>(classes);
  TrainResult out;
  Forest& forest = out.forest;
  forest.classes = classes;
  forest.features = static_cast<int>(x.cols);
  forest.config = cfg;
  forest.bins = build_bins(x, cfg.max_bins);
  for (long c : counts) {
    const double prior = static_cast<double>(c) / static_cast<double>(x.rows);
    forest.base_score.push_back(std::log(std::max(prior, 1e-12)));
  }
  const BinnedMatrix binned = apply_bins(forest.bins, x);

  std::vector<double> raw(x.rows * k_dim);
  for (size_t i = 0; i < x.rows; ++i) std::copy(forest.base_score.begin(), forest.base_score.end(), raw.begin() + static_cast<long>(i * k_dim));
  std::vector<double> val_raw;
  if (validation) {
    val_raw.resize(validation->x.rows * k_dim);
    for (size_t i = 0; i < validation->x.rows; ++i) {
      std::copy(forest.base_score.begin(), forest.base_score.end(), val_raw.begin() + static_cast<long>(i * k_dim));
    }
  }

  std::vector<size_t> all(x.rows);
  std::iota(all.begin(), all.end(), size_t{0});
  std::vector<double> gk(x.rows), hk(x.rows);
  double best_val = std::numeric_limits<double>::infinity();
  int best_round = 0;

  for (int round = 1; round <= cfg.n_rounds; ++round) {
    const GradHess gh = softmax_objective(raw, k_dim, y);
    std::vector<Tree> trees;
    trees.reserve(k_dim);
    for (size_t k = 0; k < k_dim; ++k) {
      for (size_t i = 0; i < x.rows; ++i) {
        gk[i] = gh.g[i * k_dim + k];
        hk[i] = gh.h[i * k_dim + k];
      }
      trees.push_back(grow_tree(binned, forest.bins, gk, hk, all, cfg));
    }
    for (size_t i = 0; i < x.rows; ++i) {
      const auto row = x.values.subspan(i * x.cols, x.cols);
      for (size_t k = 0; k < k_dim; ++k) raw[i * k_dim + k] += trees[k].predict(row);
    }
    RoundLog entry{round, log_loss(raw, k_dim, y), std::nullopt};
    forest.rounds.push_back(std::move(trees));

    if (validation) {
      const auto& last = forest.rounds.back();
      for (size_t i = 0; i < validation->x.rows; ++i) {
        const auto row = validation->x.values.subspan(i * x.cols, x.cols);
        for (size_t k = 0; k < k_dim; ++k) val_raw[i * k_dim + k] += last[k].predict(row);
      }
      const double vl = log_loss(val_raw, k_dim, validation->y);
      entry.val_loss = vl;
      if (vl < best_val) {
        best_val = vl;
        best_round = round;
      }
      out.log.push_back(entry);
      if (round - best_round >= cfg.early_stop_rounds) break;
    } else {
      best_round = round;
      out.log.push_back(entry);
    }
  }
  forest.rounds.resize(static_cast<size_t>(best_round));
  out.best_round = best_round;
  return out;
}

// Persistence --------------------------------------------------------------

namespace {

constexpr int kForestFormatVersion = 1;
using nlohmann::json;

}  // namespace

std::string encode_forest(const Forest& f) {
  json doc;
  doc["format"] = "mammo-gbdt";
  doc["format_version"] = kForestFormatVersion;
  doc["classes"] = f.classes;
  doc["features"] = f.features;
  doc["config"] = {{"n_rounds", f.config.n_rounds},
                   {"learning_rate", f.config.learning_rate},
                   {"max_leaves", f.config.max_leaves},
                   {"min_samples_leaf", f.config.min_samples_leaf},
                   {"lambda", f.config.lambda},
                   {"gamma", f.config.gamma},
                   {"max_bins", f.config.max_bins},
                   {"early_stop_rounds", f.config.early_stop_rounds},
                   {"seed", f.config.seed}};
  doc["base_score"] = f.base_score;
  json bins = json::array();
  for (size_t i = 0; i < f.bins.features(); ++i) bins.push_back(f.bins.thresholds(i));
  doc["bin_boundaries"] = std::move(bins);
  json rounds = json::array();
  for (const auto& round : f.rounds) {
    json per_class = json::array();
    for (const Tree& t : round) {
      json nodes = json::array();
      for (const TreeNode& n : t.nodes) {
        if (n.is_leaf) {
          nodes.push_back({{"leaf", n.value}});
        } else {
          nodes.push_back({{"feature", n.feature},
                           {"bin", n.threshold_bin},
                           {"threshold", n.threshold},
                           {"left", n.left},
                           {"right", n.right}});
        }
      }
      per_class.push_back(std::move(nodes));
    }
    rounds.push_back(std::move(per_class));
  }
  doc["rounds"] = std::move(rounds);
  return doc.dump(1) + "\n";
}

Forest decode_forest(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorCode::kIntegrity, std::string("gbdt model: malformed document: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "mammo-gbdt") {
    fail(ErrorCode::kFormatVersion, "not a gbdt model document");
  }
  const int version = doc.value("format_version", -1);
  if (version != kForestFormatVersion) {
    fail(ErrorCode::kFormatVersion, "gbdt model format_version " + std::to_string(version) +
                                        " unsupported (expected " + std::to_string(kForestFormatVersion) + ")");
  }
  try {
    Forest f;
    f.classes = doc.at("classes").get<int>();
    f.features = doc.at("features").get<int>();
    const json& c = doc.at("config");
    f.config.n_rounds = c.at("n_rounds").get<int>();
    f.config.learning_rate = c.at("learning_rate").get<double>();
    f.config.max_leaves = c.at("max_leaves").get<int>();
    f.config.min_samples_leaf = c.at("min_samples_leaf").get<int>();
    f.config.lambda = c.at("lambda").get<double>();
    f.config.gamma = c.at("gamma").get<double>();
    f.config.max_bins = c.at("max_bins").get<int>();
    f.config.early_stop_rounds = c.at("early_stop_rounds").get<int>();
    f.config.seed = c.at("seed").get<uint64_t>();
    f.base_score = doc.at("base_score").get<std::vector<double>>();
    f.bins = BinMapper(doc.at("bin_boundaries").get<std::vector<std::vector<double>>>());
    if (static_cast<int>(f.base_score.size()) != f.classes ||
        static_cast<int>(f.bins.features()) != f.features) {
      fail(ErrorCode::kIntegrity, "gbdt model: inconsistent class or feature count");
    }
    for (const json& round : doc.at("rounds")) {
      std::vector<Tree> trees;
      for (const json& nodes : round) {
        Tree t;
        for (const json& n : nodes) {
          TreeNode node;
          if (n.contains("leaf")) {
            node.value = n.at("leaf").get<double>();
          } else {
            node.is_leaf = false;
            node.feature = n.at("feature").get<int>();
            node.threshold_bin = n.at("bin").get<int>();
            node.threshold = n.at("threshold").get<double>();
            node.left = n.at("left").get<int>();
            node.right = n.at("right").get<int>();
          }
          t.nodes.push_back(node);
        }
        const int count = static_cast<int>(t.nodes.size());
        for (const TreeNode& n : t.nodes) {
          if (!n.is_leaf && (n.left <= 0 || n.left >= count || n.right <= 0 || n.right >= count ||
                             n.feature < 0 || n.feature >= f.features)) {
            fail(ErrorCode::kIntegrity, "gbdt model: malformed tree node");
          }
        }
        if (t.nodes.empty()) fail(ErrorCode::kIntegrity, "gbdt model: empty tree");
        trees.push_back(std::move(t));
      }
      if (static_cast<int>(trees.size()) != f.classes) {
        fail(ErrorCode::kIntegrity, "gbdt model: round does not hold one tree per class");
      }
      f.rounds.push_back(std::move(trees));
    }
    return f;
  } catch (const json::exception& e) {
    fail(ErrorCode::kIntegrity, std::string("gbdt model: ") + e.what());
  }
}

void save_forest(const std::filesystem::path& path, const Forest& forest) {
  binio::write_file(path, encode_forest(forest));
}

Forest load_forest(const std::filesystem::path& path) {
  return decode_forest(binio::read_file(path));
}

}  // namespace mammo::gbdt
