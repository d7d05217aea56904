#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "mammo/error.hpp"
#include "mammo/extractor.hpp"
#include "oracles.hpp"

using namespace mammo;

namespace {

const ViewId kLcc{Laterality::kLeft, ViewKind::kCC};

NormalizedRaster random_raster(std::mt19937_64& rng, int h, int w) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NormalizedRaster r{h, w, {}};
  for (int i = 0; i < h * w; ++i) r.values.push_back(u(rng));
  return r;
}

ExtractorConfig small_config() {
  ExtractorConfig cfg;
  cfg.grid_h = 3;
  cfg.grid_w = 2;
  cfg.channels = 6;
  cfg.epochs = 60;
  cfg.patience = 5;
  cfg.batch_size = 4;
  return cfg;
}

// A model whose pre-activations all sit well away from zero on `batch`.
ExtractorModel well_posed_model(std::mt19937_64& rng, const std::vector<ExtractorSample>& batch, int classes) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (;;) {
    ExtractorModel m = ExtractorModel::initialized(small_config(), kLcc, classes);
    for (double& p : m.params) p += u(rng);
    m.stat_mean = {0.4, 0.5, 0.6, 0.5};
    m.stat_scale = {2.0, 1.5, 1.0, 0.5};
    if (oracle::min_preactivation(m, batch) > 1e-3) return m;
  }
}

std::vector<ExtractorSample> separable_samples(std::mt19937_64& rng, int n) {
  std::vector<ExtractorSample> out;
  auto batch = oracle::random_extractor_batch(rng, 3, 2, 2, n);
  for (size_t i = 0; i < batch.size(); ++i) {
    batch[i].diagnosis = static_cast<int>(i % 2);
    batch[i].density = static_cast<int>(i % 4);
    for (double& v : batch[i].stats.values) v += batch[i].diagnosis;
  }
  return batch;
}

}  // namespace

TEST(CellStatistics, MatchesDirectComputation) {
  std::mt19937_64 rng(1);
  const NormalizedRaster r = random_raster(rng, 12, 9);
  const StatTensor s = cell_statistics(r, 4, 3);
  ASSERT_EQ(s.values.size(), 4u * 3u * 4u);
  double global = 0;
  for (double v : r.values) global += v;
  global /= static_cast<double>(r.values.size());
  const auto at = [&](int y, int x) {
    return r.at(std::clamp(y, 0, r.height - 1), std::clamp(x, 0, r.width - 1));
  };
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 3; ++j) {
      std::vector<double> v, g;
      int above = 0;
      for (int y = i * 3; y < i * 3 + 3; ++y) {
        for (int x = j * 3; x < j * 3 + 3; ++x) {
          v.push_back(r.at(y, x));
          above += r.at(y, x) > global;
          const double gx = 0.5 * (at(y, x + 1) - at(y, x - 1));
          const double gy = 0.5 * (at(y + 1, x) - at(y - 1, x));
          g.push_back(std::hypot(gx, gy));
        }
      }
      double mean = 0, gm = 0;
      for (size_t k = 0; k < v.size(); ++k) {
        mean += v[k] / 9.0;
        gm += g[k] / 9.0;
      }
      double var = 0;
      for (double x : v) var += (x - mean) * (x - mean) / 9.0;
      const auto cell = s.cell(i * 3 + j);
      EXPECT_NEAR(cell[0], mean, 1e-12);
      EXPECT_NEAR(cell[1], std::sqrt(var), 1e-9);
      EXPECT_NEAR(cell[2], gm, 1e-12);
      EXPECT_NEAR(cell[3], above / 9.0, 1e-12);
    }
  }
}

TEST(ExtractorGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (int classes : {5, 3}) {
    const auto batch = oracle::random_extractor_batch(rng, 3, 2, classes, 4);
    const ExtractorModel m = well_posed_model(rng, batch, classes);
    const oracle::GradCheck check = oracle::extractor_gradient_check(m, batch);
    EXPECT_EQ(check.checked, m.params.size());
    EXPECT_LE(check.worst, 1e-4);
  }
}

TEST(SoftmaxCrossEntropy, GradientIsSoftmaxMinusOneHot) {
  const std::vector<double> logits = {1.0, -0.5, 2.0};
  const CrossEntropy ce = softmax_cross_entropy(logits, 2);
  double z = 0;
  for (double l : logits) z += std::exp(l);
  EXPECT_NEAR(ce.loss, std::log(z) - 2.0, 1e-14);
  for (size_t k = 0; k < 3; ++k) EXPECT_NEAR(ce.grad[k], std::exp(logits[k]) / z - (k == 2), 1e-14);
}

TEST(CosineLr, EndpointsMidpointAndMonotone) {
  const double hi = 0.01, lo = 1e-5;
  const int total = 50;
  EXPECT_NEAR(cosine_lr(0, total, hi, lo), hi, 1e-12);
  EXPECT_NEAR(cosine_lr(total, total, hi, lo), lo, 1e-12);
  EXPECT_NEAR(cosine_lr(total / 2.0, total, hi, lo), (hi + lo) / 2, 1e-12);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, total);
  std::vector<double> ts(1000);
  for (double& t : ts) t = u(rng);
  std::sort(ts.begin(), ts.end());
  for (size_t i = 1; i < ts.size(); ++i) EXPECT_LE(cosine_lr(ts[i], total, hi, lo), cosine_lr(ts[i - 1], total, hi, lo));
}

TEST(SgdMomentum, FollowsTheUpdateRule) {
  std::vector<double> p = {1.0, 2.0}, v = {0.5, -0.5};
  const std::vector<double> g = {0.1, 0.2};
  sgd_momentum_step(p, g, v, 0.1, 0.9);
  EXPECT_NEAR(v[0], 0.55, 1e-15);
  EXPECT_NEAR(v[1], -0.25, 1e-15);
  EXPECT_NEAR(p[0], 1.0 - 0.055, 1e-15);
  EXPECT_NEAR(p[1], 2.0 + 0.025, 1e-15);
}

TEST(EarlyStopping, ConstantSequenceStopsAfterPatience) {
  for (int patience : {1, 3, 15}) {
    EarlyStopping stop(patience);
    int epoch = 1;
    while (!stop.observe(epoch, 0.42)) ++epoch;
    EXPECT_EQ(epoch, patience + 1);
    EXPECT_EQ(stop.best_epoch(), 1);
  }
}

TEST(EarlyStopping, LateImprovementResetsTheCounter) {
  const int patience = 7;
  EarlyStopping stop(patience);
  int epoch = 1;
  while (!stop.observe(epoch, epoch <= 20 ? 0.01 * epoch : 0.2)) ++epoch;
  EXPECT_EQ(epoch, 20 + patience);
  EXPECT_EQ(stop.best_epoch(), 20);
}

TEST(TrainExtractor, HookedValidationDrivesStoppingAndLog) {
  std::mt19937_64 rng(4);
  const auto train = separable_samples(rng, 16);
  const auto val = separable_samples(rng, 8);
  const ExtractorConfig cfg = small_config();

  ExtractorHooks flat{[](int, double) { return 0.3; }};
  const TrainedExtractor a = train_extractor(train, val, cfg, kLcc, 2, flat);
  EXPECT_EQ(a.log.epochs.size(), static_cast<size_t>(cfg.patience + 1));
  EXPECT_EQ(a.log.best_epoch, 1);
  EXPECT_TRUE(a.log.stopped_early);

  ExtractorHooks late{[](int e, double) { return e <= 20 ? 0.01 * e : 0.2; }};
  const TrainedExtractor b = train_extractor(train, val, cfg, kLcc, 2, late);
  EXPECT_EQ(b.log.epochs.size(), static_cast<size_t>(20 + cfg.patience));
  EXPECT_EQ(b.log.best_epoch, 20);
  for (const EpochLog& e : b.log.epochs) {
    EXPECT_EQ(e.learning_rate, cosine_lr(e.epoch - 1, cfg.epochs, cfg.lr_max, cfg.lr_min));
  }
}

TEST(TrainExtractor, LearnsASeparableProblem) {
  std::mt19937_64 rng(5);
  const auto train = separable_samples(rng, 32);
  ExtractorConfig cfg = small_config();
  cfg.lr_max = 0.05;
  const TrainedExtractor t = train_extractor(train, train, cfg, kLcc, 2);
  EXPECT_LT(t.log.epochs.back().train_loss, t.log.epochs.front().train_loss);
  EXPECT_GT(validation_score(t.model, train), 0.6);
}

TEST(TrainExtractor, RefusesSingleClassData) {
  std::mt19937_64 rng(6);
  auto train = oracle::random_extractor_batch(rng, 3, 2, 2, 8);
  for (auto& s : train) s.diagnosis = 1;
  try {
    train_extractor(train, train, small_config(), kLcc, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTrainingRefused);
  }
}

TEST(ExtractorFile, SaveLoadGivesBitIdenticalFeatures) {
  std::mt19937_64 rng(7);
  ExtractorModel m = ExtractorModel::initialized(small_config(), kLcc, 5);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& p : m.params) p += u(rng);
  m.stat_mean = {0.1, 0.2, 0.3, 0.4};
  const ExtractorModel back = decode_extractor(encode_extractor(m));
  EXPECT_TRUE(back == m);
  for (int i = 0; i < 10; ++i) {
    const NormalizedRaster r = random_raster(rng, 30, 20);
    const ForwardResult a = forward(m, r);
    const ForwardResult b = forward(back, r);
    ASSERT_EQ(a.feature.size(), b.feature.size());
    EXPECT_EQ(std::memcmp(a.feature.data(), b.feature.data(), a.feature.size() * sizeof(double)), 0);
    EXPECT_EQ(a.logits_diagnosis, b.logits_diagnosis);
  }
}

TEST(ExtractorFile, RejectsWrongVersionAndMagic) {
  const ExtractorModel m = ExtractorModel::initialized(small_config(), kLcc, 5);
  std::string bytes = encode_extractor(m);
  std::string bad_version = bytes;
  bad_version[4] = 9;
  try {
    decode_extractor(bad_version);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormatVersion);
  }
  bytes[0] = 'Z';
  EXPECT_THROW(decode_extractor(bytes), Error);
}

TEST(ExtractFeatures, RejectsAViewMismatch) {
  const ExtractorModel m = ExtractorModel::initialized(small_config(), kLcc, 5);
  std::mt19937_64 rng(8);
  const NormalizedRaster r = random_raster(rng, 12, 12);
  ExtractorInput in{&r, FeatureSource{"S", Laterality::kRight, FeatureView::kCC, kViewMaskCC}, 0, 0};
  EXPECT_THROW(extract_features(m, std::span(&in, 1), LabelScheme{}), Error);
  in.source.laterality = Laterality::kLeft;
  EXPECT_EQ(extract_features(m, std::span(&in, 1), LabelScheme{}).rows(), 1u);
}
