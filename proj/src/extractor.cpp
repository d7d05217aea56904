#include "mammo/extractor.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "binary_io.hpp"
#include "mammo/error.hpp"
#include "mammo/metrics.hpp"

namespace mammo {

void ExtractorConfig::validate() const {
  if (grid_h < 1 || grid_w < 1) fail(ErrorCode::kConfig, "extractor.grid_h/grid_w must be >= 1");
  if (channels < 4) fail(ErrorCode::kConfig, "extractor.channels must be >= 4");
  if (!(lr_min > 0.0 && lr_min < lr_max)) {
    fail(ErrorCode::kConfig, "extractor learning rates must satisfy 0 < lr_min < lr_max");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) fail(ErrorCode::kConfig, "extractor.momentum must lie in [0, 1)");
  if (epochs < 1) fail(ErrorCode::kConfig, "extractor.epochs must be >= 1");
  if (patience < 1 || patience > epochs) {
    fail(ErrorCode::kConfig, "extractor.patience must lie in [1, epochs]");
  }
  if (batch_size < 1) fail(ErrorCode::kConfig, "extractor.batch_size must be >= 1");
}

StatTensor cell_statistics(const NormalizedRaster& raster, int grid_h, int grid_w) {
  const int h = raster.height;
  const int w = raster.width;
  StatTensor out{grid_h, grid_w,
                 std::vector<double>(static_cast<size_t>(grid_h * grid_w * kStatsPerCell), 0.0)};

  double global_mean = 0.0;
  for (double v : raster.values) global_mean += v;
  global_mean /= static_cast<double>(raster.values.size());

  std::vector<double> grad(raster.values.size());
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
      const double gx = 0.5 * (raster.at(y, xp) - raster.at(y, xm));
      const double gy = 0.5 * (raster.at(yp, x) - raster.at(ym, x));
      grad[static_cast<size_t>(y) * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  }

  auto span_of = [](int i, int cells, int extent) {
    int a = std::min(i * extent / cells, extent - 1);
    int b = std::max(a + 1, (i + 1) * extent / cells);
    return std::pair{a, std::min(b, extent)};
  };
  for (int i = 0; i < grid_h; ++i) {
    const auto [r0, r1] = span_of(i, grid_h, h);
    for (int j = 0; j < grid_w; ++j) {
      const auto [c0, c1] = span_of(j, grid_w, w);
      double sum = 0, sum_sq = 0, gsum = 0, above = 0;
      for (int y = r0; y < r1; ++y) {
        for (int x = c0; x < c1; ++x) {
          const double v = raster.at(y, x);
          sum += v;
          sum_sq += v * v;
          gsum += grad[static_cast<size_t>(y) * w + x];
          above += v > global_mean ? 1.0 : 0.0;
        }
      }
      const double n = static_cast<double>((r1 - r0) * (c1 - c0));
      const double mean = sum / n;
      double* cell = out.values.data() + static_cast<size_t>((i * grid_w + j) * kStatsPerCell);
      cell[0] = mean;
      cell[1] = std::sqrt(std::max(0.0, sum_sq / n - mean * mean));
      cell[2] = gsum / n;
      cell[3] = above / n;
    }
  }
  return out;
}

size_t ExtractorModel::param_count(int channels, int diagnosis_classes) {
  return static_cast<size_t>(kStatsPerCell * channels + channels + channels * diagnosis_classes +
                             diagnosis_classes + channels * kDensityClasses + kDensityClasses);
}

ExtractorModel ExtractorModel::zeros(const ExtractorConfig& cfg, ViewId view, int diagnosis_classes) {
  ExtractorModel m;
  m.config = cfg;
  m.view = view;
  m.diagnosis_classes = diagnosis_classes;
  m.params.assign(param_count(cfg.channels, diagnosis_classes), 0.0);
  return m;
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

constexpr double kHiddenBiasSpread = 1.0;

void init_uniform(std::span<double> w, int fan_in, int fan_out, std::mt19937_64& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : w) v = a * (2.0 * uniform01(rng) - 1.0);
}

}  // namespace

ExtractorModel ExtractorModel::initialized(const ExtractorConfig& cfg, ViewId view,
                                           int diagnosis_classes) {
  ExtractorModel m = zeros(cfg, view, diagnosis_classes);
  std::mt19937_64 rng(cfg.seed);
  init_uniform(m.w1(), kStatsPerCell, cfg.channels, rng);
  // Negative hidden biases: each channel starts out responding to a tail of
  // the standardized cell statistics rather than to half of all cells.
  for (double& b : m.b1()) b = -kHiddenBiasSpread * uniform01(rng);
  init_uniform(m.w_diag(), cfg.channels, diagnosis_classes, rng);
  init_uniform(m.w_dens(), cfg.channels, kDensityClasses, rng);
  return m;
}

namespace {

void check_grid(const ExtractorModel& model, const StatTensor& stats) {
  if (stats.grid_h != model.config.grid_h || stats.grid_w != model.config.grid_w ||
      stats.values.size() != static_cast<size_t>(stats.cells() * kStatsPerCell)) {
    fail(ErrorCode::kIntegrity, "stat tensor grid does not match the extractor model");
  }
}

std::array<double, kStatsPerCell> standardized(const ExtractorModel& model, std::span<const double> cell) {
  std::array<double, kStatsPerCell> s;
  for (size_t k = 0; k < s.size(); ++k) s[k] = (cell[k] - model.stat_mean[k]) * model.stat_scale[k];
  return s;
}

// Hidden pre-activations (cells x C) and pooled features.
void hidden(const ExtractorModel& model, const StatTensor& stats, std::vector<double>& z,
            std::vector<double>& pooled) {
  const int c_dim = model.channels();
  const int cells = stats.cells();
  const auto w1 = model.w1();
  const auto b1 = model.b1();
  z.assign(static_cast<size_t>(cells * c_dim), 0.0);
  pooled.assign(static_cast<size_t>(c_dim), 0.0);
  for (int cell = 0; cell < cells; ++cell) {
    const auto s = standardized(model, stats.cell(cell));
    double* zc = z.data() + static_cast<size_t>(cell * c_dim);
    for (int c = 0; c < c_dim; ++c) {
      double acc = b1[static_cast<size_t>(c)];
      for (int k = 0; k < kStatsPerCell; ++k) {
        acc += s[static_cast<size_t>(k)] * w1[static_cast<size_t>(k * c_dim + c)];
      }
      zc[c] = acc;
      pooled[static_cast<size_t>(c)] += acc > 0.0 ? acc : 0.0;
    }
  }
  for (double& p : pooled) p /= cells;
}

std::vector<double> head(std::span<const double> pooled, std::span<const double> w,
                         std::span<const double> b) {
  const size_t k_dim = b.size();
  std::vector<double> logits(b.begin(), b.end());
  for (size_t c = 0; c < pooled.size(); ++c) {
    for (size_t k = 0; k < k_dim; ++k) logits[k] += pooled[c] * w[c * k_dim + k];
  }
  return logits;
}

// Adds scale * d(loss of one sample)/d(params) into grad; returns the loss.
double accumulate(const ExtractorModel& model, const ExtractorSample& sample, double* grad,
                  double scale, std::vector<double>& z, std::vector<double>& pooled) {
  check_grid(model, sample.stats);
  hidden(model, sample.stats, z, pooled);
  const CrossEntropy ce_d =
      softmax_cross_entropy(head(pooled, model.w_diag(), model.b_diag()), sample.diagnosis);
  const CrossEntropy ce_n =
      softmax_cross_entropy(head(pooled, model.w_dens(), model.b_dens()), sample.density);
  if (!grad) return ce_d.loss + ce_n.loss;

  const int c_dim = model.channels();
  const int kd = model.diagnosis_classes;
  const int kn = kDensityClasses;
  const size_t off_b1 = static_cast<size_t>(kStatsPerCell * c_dim);
  const size_t off_wd = off_b1 + static_cast<size_t>(c_dim);
  const size_t off_bd = off_wd + static_cast<size_t>(c_dim * kd);
  const size_t off_wn = off_bd + static_cast<size_t>(kd);
  const size_t off_bn = off_wn + static_cast<size_t>(c_dim * kn);
  const auto wd = model.w_diag();
  const auto wn = model.w_dens();

  std::vector<double> dpooled(static_cast<size_t>(c_dim), 0.0);
  for (int c = 0; c < c_dim; ++c) {
    const auto cs = static_cast<size_t>(c);
    double acc = 0.0;
    for (int k = 0; k < kd; ++k) {
      const auto ks = static_cast<size_t>(k);
      grad[off_wd + cs * static_cast<size_t>(kd) + ks] += scale * pooled[cs] * ce_d.grad[ks];
      acc += wd[cs * static_cast<size_t>(kd) + ks] * ce_d.grad[ks];
    }
    for (int k = 0; k < kn; ++k) {
      const auto ks = static_cast<size_t>(k);
      grad[off_wn + cs * static_cast<size_t>(kn) + ks] += scale * pooled[cs] * ce_n.grad[ks];
      acc += wn[cs * static_cast<size_t>(kn) + ks] * ce_n.grad[ks];
    }
    dpooled[cs] = scale * acc / sample.stats.cells();
  }
  for (int k = 0; k < kd; ++k) grad[off_bd + static_cast<size_t>(k)] += scale * ce_d.grad[static_cast<size_t>(k)];
  for (int k = 0; k < kn; ++k) grad[off_bn + static_cast<size_t>(k)] += scale * ce_n.grad[static_cast<size_t>(k)];

  for (int cell = 0; cell < sample.stats.cells(); ++cell) {
    const auto s = standardized(model, sample.stats.cell(cell));
    const double* zc = z.data() + static_cast<size_t>(cell * c_dim);
    for (int c = 0; c < c_dim; ++c) {
      if (zc[c] <= 0.0) continue;
      const double dz = dpooled[static_cast<size_t>(c)];
      for (int k = 0; k < kStatsPerCell; ++k) {
        grad[static_cast<size_t>(k * c_dim + c)] += s[static_cast<size_t>(k)] * dz;
      }
      grad[off_b1 + static_cast<size_t>(c)] += dz;
    }
  }
  return ce_d.loss + ce_n.loss;
}

int argmax(std::span<const double> v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

ForwardResult forward(const ExtractorModel& model, const StatTensor& stats) {
  check_grid(model, stats);
  ForwardResult r;
  std::vector<double> z;
  hidden(model, stats, z, r.feature);
  r.logits_diagnosis = head(r.feature, model.w_diag(), model.b_diag());
  r.logits_density = head(r.feature, model.w_dens(), model.b_dens());
  return r;
}

ForwardResult forward(const ExtractorModel& model, const NormalizedRaster& raster) {
  return forward(model, cell_statistics(raster, model.config.grid_h, model.config.grid_w));
}

CrossEntropy softmax_cross_entropy(std::span<const double> logits, int target) {
  const int k = static_cast<int>(logits.size());
  if (k < 2) fail(ErrorCode::kIntegrity, "cross-entropy needs at least two classes");
  if (target < 0 || target >= k) {
    fail(ErrorCode::kIntegrity, "target class " + std::to_string(target) + " out of range for " +
                                    std::to_string(k) + " logits");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  CrossEntropy out;
  out.grad.resize(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) {
    out.grad[i] = std::exp(logits[i] - m);
    sum += out.grad[i];
  }
  out.loss = std::log(sum) - (logits[static_cast<size_t>(target)] - m);
  for (double& g : out.grad) g /= sum;
  out.grad[static_cast<size_t>(target)] -= 1.0;
  return out;
}

double cosine_lr(double t, int total, double lr_max, double lr_min) {
  if (total <= 0) fail(ErrorCode::kConfig, "cosine schedule needs T >= 1");
  if (t < 0 || t > total) fail(ErrorCode::kConfig, "cosine schedule step outside [0, T]");
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * t / total));
}

void sgd_momentum_step(std::span<double> params, std::span<const double> grads,
                       std::span<double> velocity, double lr, double momentum) {
  if (params.size() != grads.size() || params.size() != velocity.size()) {
    fail(ErrorCode::kIntegrity, "sgd step: parameter, gradient and velocity shapes differ");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      fail(ErrorCode::kTrainingRefused, "non-finite gradient at parameter " + std::to_string(i));
    }
  }
  for (size_t i = 0; i < params.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grads[i];
    params[i] -= lr * velocity[i];
  }
}

double batch_loss(const ExtractorModel& model, std::span<const ExtractorSample> batch,
                  std::vector<double>* grad) {
  if (grad) grad->assign(model.params.size(), 0.0);
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  std::vector<double> z, pooled;
  double loss = 0.0;
  for (const ExtractorSample& s : batch) {
    loss += accumulate(model, s, grad ? grad->data() : nullptr, scale, z, pooled);
  }
  return loss * scale;
}

void fit_stat_standardization(ExtractorModel& model, std::span<const ExtractorSample> samples) {
  std::array<double, kStatsPerCell> sum{}, sum_sq{};
  double n = 0.0;
  for (const ExtractorSample& sample : samples) {
    for (int cell = 0; cell < sample.stats.cells(); ++cell) {
      const auto s = sample.stats.cell(cell);
      for (size_t k = 0; k < sum.size(); ++k) {
        sum[k] += s[k];
        sum_sq[k] += s[k] * s[k];
      }
      n += 1.0;
    }
  }
  for (size_t k = 0; k < sum.size(); ++k) {
    const double mean = n > 0 ? sum[k] / n : 0.0;
    const double var = n > 0 ? std::max(0.0, sum_sq[k] / n - mean * mean) : 0.0;
    model.stat_mean[k] = mean;
    model.stat_scale[k] = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
  }
}

bool EarlyStopping::observe(int epoch, double score) {
  improved_last_ = best_epoch_ == 0 || score > best_score_;
  if (improved_last_) {
    best_epoch_ = epoch;
    best_score_ = score;
  }
  return epoch - best_epoch_ >= patience_;
}

double validation_score(const ExtractorModel& model, std::span<const ExtractorSample> samples) {
  std::vector<int> pd, td, pn, tn;
  for (const ExtractorSample& s : samples) {
    const ForwardResult r = forward(model, s.stats);
    pd.push_back(argmax(r.logits_diagnosis));
    pn.push_back(argmax(r.logits_density));
    td.push_back(s.diagnosis);
    tn.push_back(s.density);
  }
  return 0.5 * (macro_f1(pd, td, model.diagnosis_classes) + macro_f1(pn, tn, kDensityClasses));
}

TrainedExtractor train_extractor(std::span<const ExtractorSample> train,
                                 std::span<const ExtractorSample> val, const ExtractorConfig& cfg,
                                 ViewId view, int diagnosis_classes, const ExtractorHooks& hooks) {
  cfg.validate();
  if (train.empty()) fail(ErrorCode::kTrainingRefused, "extractor training set is empty");
  std::vector<int> present(static_cast<size_t>(diagnosis_classes), 0);
  for (const ExtractorSample& s : train) {
    if (s.diagnosis < 0 || s.diagnosis >= diagnosis_classes || s.density < 0 ||
        s.density >= kDensityClasses) {
      fail(ErrorCode::kIntegrity, "extractor sample label out of range");
    }
    present[static_cast<size_t>(s.diagnosis)] = 1;
  }
  if (std::count(present.begin(), present.end(), 1) < 2) {
    fail(ErrorCode::kTrainingRefused, "extractor training set for " + view_id_name(view) +
                                          " contains a single diagnosis class");
  }

  TrainedExtractor out{ExtractorModel::initialized(cfg, view, diagnosis_classes), {}};
  ExtractorModel& model = out.model;
  fit_stat_standardization(model, train);
  std::vector<double> best_params = model.params;
  std::vector<double> velocity(model.params.size(), 0.0);
  std::vector<double> grad(model.params.size());
  std::vector<double> z, pooled;

  // Every view starts from the same initialization so pooled channels stay
  // comparable across views; the shuffle stream depends on the view.
  std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ull ^
                      (0xD1B54A32D192ED03ull * static_cast<uint64_t>(view.slot() + 1)));
  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  const std::span<const ExtractorSample> scored = val.empty() ? train : val;

  EarlyStopping stopper(cfg.patience);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = cosine_lr(epoch - 1, cfg.epochs, cfg.lr_max, cfg.lr_min);
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<size_t>(rng() % i)]);
    }
    double epoch_loss = 0.0;
    const auto bs = static_cast<size_t>(cfg.batch_size);
    for (size_t start = 0; start < order.size(); start += bs) {
      const size_t end = std::min(order.size(), start + bs);
      const double scale = 1.0 / static_cast<double>(end - start);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (size_t i = start; i < end; ++i) {
        epoch_loss += accumulate(model, train[order[i]], grad.data(), scale, z, pooled);
      }
      sgd_momentum_step(model.params, grad, velocity, lr, cfg.momentum);
    }
    epoch_loss /= static_cast<double>(order.size());
    if (!std::isfinite(epoch_loss)) {
      fail(ErrorCode::kTrainingRefused, "training loss diverged at epoch " + std::to_string(epoch));
    }

    double score = validation_score(model, scored);
    if (hooks.val_score) score = hooks.val_score(epoch, score);
    const bool stop = stopper.observe(epoch, score);
    if (stopper.improved_last()) best_params = model.params;
    out.log.epochs.push_back({epoch, lr, epoch_loss, score});
    if (stop) break;
  }
  out.log.best_epoch = stopper.best_epoch();
  out.log.stopped_early = static_cast<int>(out.log.epochs.size()) < cfg.epochs;
  model.params = std::move(best_params);
  return out;
}

FeatureMatrix extract_features(const ExtractorModel& model, std::span<const ExtractorInput> inputs,
                               const LabelScheme& scheme) {
  FeatureMatrix m;
  m.channels = model.channels();
  m.scheme = scheme;
  std::vector<float> row(static_cast<size_t>(m.channels));
  for (const ExtractorInput& in : inputs) {
    const bool same_view = in.source.laterality == model.view.laterality &&
                           static_cast<int>(in.source.view) == static_cast<int>(model.view.view);
    if (!same_view) {
      fail(ErrorCode::kIntegrity, "image " + in.source.study_id + " routed to the " +
                                      view_id_name(model.view) + " extractor has a different view");
    }
    const ForwardResult r = forward(model, *in.raster);
    for (size_t c = 0; c < row.size(); ++c) row[c] = static_cast<float>(r.feature[c]);
    m.append(row, in.source, in.diagnosis, in.density);
  }
  return m;
}

// Model container ----------------------------------------------------------

namespace {

constexpr uint32_t kExtractorFormatVersion = 1;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string encode_extractor(const ExtractorModel& model) {
  const ExtractorConfig& c = model.config;
  const std::vector<std::pair<std::string, std::string>> text = {
      {"view", view_id_name(model.view)},
      {"grid_h", std::to_string(c.grid_h)},
      {"grid_w", std::to_string(c.grid_w)},
      {"stats_per_cell", std::to_string(kStatsPerCell)},
      {"channels", std::to_string(c.channels)},
      {"diagnosis_classes", std::to_string(model.diagnosis_classes)},
      {"lr_max", fmt_double(c.lr_max)},
      {"lr_min", fmt_double(c.lr_min)},
      {"momentum", fmt_double(c.momentum)},
      {"epochs", std::to_string(c.epochs)},
      {"patience", std::to_string(c.patience)},
      {"batch_size", std::to_string(c.batch_size)},
      {"seed", std::to_string(c.seed)},
  };
  const std::vector<std::pair<std::string, std::span<const double>>> arrays = {
      {"w1", model.w1()},         {"b1", model.b1()},         {"w_diag", model.w_diag()},
      {"b_diag", model.b_diag()}, {"w_dens", model.w_dens()}, {"b_dens", model.b_dens()},
      {"stat_mean", model.stat_mean}, {"stat_scale", model.stat_scale},
  };
  binio::Writer w;
  w.raw("MXTR");
  w.u32(kExtractorFormatVersion);
  w.u32(static_cast<uint32_t>(text.size() + arrays.size()));
  for (const auto& [key, value] : text) {
    w.u8(0);
    w.u16(static_cast<uint16_t>(key.size()));
    w.raw(key);
    w.u32(static_cast<uint32_t>(value.size()));
    w.raw(value);
  }
  for (const auto& [key, values] : arrays) {
    w.u8(1);
    w.u16(static_cast<uint16_t>(key.size()));
    w.raw(key);
    w.u64(values.size());
    for (double v : values) w.f64(v);
  }
  return w.take();
}

ExtractorModel decode_extractor(std::string_view bytes) {
  if (bytes.size() < 8 || bytes.substr(0, 4) != "MXTR") {
    fail(ErrorCode::kFormatVersion, "not an extractor model file (bad magic)");
  }
  binio::Reader r(bytes.substr(4), "extractor model");
  const uint32_t version = r.u32();
  if (version != kExtractorFormatVersion) {
    fail(ErrorCode::kFormatVersion, "extractor model format version " + std::to_string(version) +
                                        " unsupported (expected " +
                                        std::to_string(kExtractorFormatVersion) + ")");
  }
  const uint32_t entries = r.u32();
  std::map<std::string, std::string> text;
  std::map<std::string, std::vector<double>> arrays;
  for (uint32_t e = 0; e < entries; ++e) {
    const uint8_t type = r.u8();
    std::string key(r.raw(r.u16()));
    if (type == 0) {
      text[key] = std::string(r.raw(r.u32()));
    } else if (type == 1) {
      const uint64_t n = r.u64();
      if (n > r.remaining() / 8) fail(ErrorCode::kIntegrity, "extractor model: truncated file");
      std::vector<double> v(n);
      for (double& x : v) x = r.f64();
      arrays[key] = std::move(v);
    } else {
      fail(ErrorCode::kIntegrity, "extractor model: unknown entry type");
    }
  }
  auto get = [&](const char* key) -> const std::string& {
    const auto it = text.find(key);
    if (it == text.end()) fail(ErrorCode::kIntegrity, std::string("extractor model: missing key ") + key);
    return it->second;
  };
  auto get_int = [&](const char* key) {
    const std::string& s = get(key);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail(ErrorCode::kIntegrity, std::string("extractor model: bad integer for ") + key);
    }
    return v;
  };
  auto get_double = [&](const char* key) { return std::strtod(get(key).c_str(), nullptr); };

  if (get_int("stats_per_cell") != kStatsPerCell) {
    fail(ErrorCode::kIntegrity, "extractor model: unsupported stats_per_cell");
  }
  ExtractorConfig cfg;
  cfg.grid_h = static_cast<int>(get_int("grid_h"));
  cfg.grid_w = static_cast<int>(get_int("grid_w"));
  cfg.channels = static_cast<int>(get_int("channels"));
  cfg.lr_max = get_double("lr_max");
  cfg.lr_min = get_double("lr_min");
  cfg.momentum = get_double("momentum");
  cfg.epochs = static_cast<int>(get_int("epochs"));
  cfg.patience = static_cast<int>(get_int("patience"));
  cfg.batch_size = static_cast<int>(get_int("batch_size"));
  cfg.seed = static_cast<uint64_t>(get_int("seed"));
  const auto view = parse_view_id(get("view"));
  if (!view) fail(ErrorCode::kIntegrity, "extractor model: bad view tag");
  const int kd = static_cast<int>(get_int("diagnosis_classes"));
  if (kd != 3 && kd != 5) fail(ErrorCode::kIntegrity, "extractor model: bad diagnosis_classes");
  if (cfg.channels < 1 || cfg.grid_h < 1 || cfg.grid_w < 1) {
    fail(ErrorCode::kIntegrity, "extractor model: bad dimensions");
  }

  ExtractorModel m = ExtractorModel::zeros(cfg, *view, kd);
  auto fill = [&](const char* key, std::span<double> dst) {
    const auto it = arrays.find(key);
    if (it == arrays.end() || it->second.size() != dst.size()) {
      fail(ErrorCode::kIntegrity, std::string("extractor model: array ") + key + " missing or mis-sized");
    }
    std::copy(it->second.begin(), it->second.end(), dst.begin());
  };
  fill("w1", m.w1());
  fill("b1", m.b1());
  fill("w_diag", m.w_diag());
  fill("b_diag", m.b_diag());
  fill("w_dens", m.w_dens());
  fill("b_dens", m.b_dens());
  fill("stat_mean", m.stat_mean);
  fill("stat_scale", m.stat_scale);
  return m;
}

void save_extractor(const std::filesystem::path& path, const ExtractorModel& model) {
  binio::write_file(path, encode_extractor(model));
}

ExtractorModel load_extractor(const std::filesystem::path& path) {
  return decode_extractor(binio::read_file(path));
}

std::string render_train_log_csv(const TrainLog& log) {
  std::ostringstream out;
  out << "epoch,learning_rate,train_loss,val_score\n";
  for (const EpochLog& e : log.epochs) {
    out << e.epoch << ',' << fmt_double(e.learning_rate) << ',' << fmt_double(e.train_loss) << ','
        << fmt_double(e.val_score) << '\n';
  }
  out << "# best_epoch=" << log.best_epoch << " stopped_early=" << (log.stopped_early ? 1 : 0) << '\n';
  return out.str();
}

}  // namespace mammo
