#include <gtest/gtest.h>

#include <random>

#include "mammo/error.hpp"
#include "mammo/preprocess.hpp"
#include "mammo/synthgen.hpp"
#include "oracles.hpp"

using namespace mammo;

namespace {

SynthDataset small_dataset(uint64_t seed) {
  SynthConfig cfg;
  cfg.n_train = 23;
  cfg.n_val = 1;
  cfg.n_test = 1;
  cfg.seed = seed;
  return generate_dataset_in_memory(cfg);
}

}  // namespace

TEST(Otsu, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const GrayImage img = oracle::random_cluster_image(rng);
    const OtsuResult got = otsu_threshold(img);
    const oracle::OtsuAnswer want = oracle::exhaustive_otsu(img);
    ASSERT_EQ(got.bin, want.bin) << "image " << i;
    ASSERT_EQ(got.level, want.level) << "image " << i;
  }
}

TEST(Otsu, BetweenClassVarianceIsZeroAtEmptySplits) {
  GrayImage img{4, 1, 8, {10, 10, 200, 200}};
  const IntensityHistogram h = intensity_histogram(img);
  EXPECT_EQ(between_class_variance(h, 5), 0.0);
  EXPECT_GT(between_class_variance(h, 100), 0.0);
  EXPECT_EQ(otsu_threshold(img).level, 11u);
  EXPECT_THROW(otsu_threshold(GrayImage{2, 2, 8, {7, 7, 7, 7}}), Error);
}

TEST(Roi, LargestComponentWins) {
  GrayImage img{10, 6, 8, std::vector<uint16_t>(60, 0)};
  img.at(0, 0) = 200;  // isolated pixel
  for (int y = 2; y < 5; ++y) {
    for (int x = 4; x < 9; ++x) img.at(x, y) = 200;
  }
  EXPECT_EQ(detect_breast_box(img), (BoundingBox{4, 2, 9, 5}));
}

TEST(Roi, RecoversSyntheticBreastBox) {
  const SynthDataset d = small_dataset(3);
  int good = 0;
  for (size_t i = 0; i < d.images.size(); ++i) good += iou(breast_roi(d.images[i]), d.truth[i].breast) >= 0.90;
  EXPECT_GE(good, 95) << "of " << d.images.size();
}

TEST(Roi, InvariantUnderIntensityDoubling) {
  const SynthDataset d = small_dataset(4);
  for (size_t i = 0; i < 20; ++i) {
    GrayImage half = d.images[i];
    for (auto& v : half.pixels) v = static_cast<uint16_t>(v / 2);
    GrayImage twice = half;
    for (auto& v : twice.pixels) v = static_cast<uint16_t>(v * 2);
    EXPECT_EQ(breast_roi(half), breast_roi(twice));
  }
}

TEST(Roi, MirroringMirrorsTheXExtent) {
  const SynthDataset d = small_dataset(5);
  for (size_t i = 0; i < 20; ++i) {
    const GrayImage& img = d.images[i];
    GrayImage flipped = img;
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) flipped.at(img.width - 1 - x, y) = img.at(x, y);
    }
    const BoundingBox a = breast_roi(img);
    const BoundingBox b = breast_roi(flipped);
    EXPECT_EQ(b.x0, img.width - a.x1);
    EXPECT_EQ(b.x1, img.width - a.x0);
    EXPECT_EQ(b.y0, a.y0);
    EXPECT_EQ(b.y1, a.y1);
  }
}

TEST(Roi, PaddingIsClamped) {
  EXPECT_EQ(pad_box({0, 10, 50, 90}, 60, 100, 0.1), (BoundingBox{0, 2, 55, 98}));
  EXPECT_DOUBLE_EQ(iou({0, 0, 2, 2}, {1, 0, 3, 2}), 2.0 / 6.0);
}

TEST(Preprocess, ScalesCropToUnitRange) {
  const SynthDataset d = small_dataset(6);
  const PreprocessResult r = preprocess_image(d.images[0], PreprocessConfig{});
  EXPECT_EQ(r.raster.height, 128);
  EXPECT_EQ(r.raster.width, 96);
  double lo = 1, hi = 0;
  for (double v : r.raster.values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(lo, 0.0);
  EXPECT_LE(hi, 1.0);
  EXPECT_FALSE(r.degenerate_intensity);
}

TEST(Preprocess, ConstantCropIsAllZerosWithFlag) {
  GrayImage img{8, 8, 8, std::vector<uint16_t>(64, 0)};
  for (int y = 2; y < 6; ++y) {
    for (int x = 2; x < 6; ++x) img.at(x, y) = 180;
  }
  const PreprocessResult r = preprocess_image(img, PreprocessConfig{16, 16, 0.0}, BoundingBox{2, 2, 6, 6});
  EXPECT_TRUE(r.degenerate_intensity);
  for (double v : r.raster.values) EXPECT_EQ(v, 0.0);
}

TEST(Preprocess, ResizeToSameShapeIsIdentity) {
  NormalizedRaster r{3, 4, {0, .1, .2, .3, .4, .5, .6, .7, .8, .9, 1, .5}};
  const NormalizedRaster s = resize_bilinear(r, 3, 4);
  for (size_t i = 0; i < r.values.size(); ++i) EXPECT_NEAR(s.values[i], r.values[i], 1e-15);
}
