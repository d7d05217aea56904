#ifndef MAMMO_PREPROCESS_HPP_
#define MAMMO_PREPROCESS_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "mammo/ingestion.hpp"

namespace mammo {

// Half-open on the max edge: pixels x0 <= x < x1, y0 <= y < y1.
struct BoundingBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long area() const { return static_cast<long>(width()) * height(); }

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

double iou(const BoundingBox& a, const BoundingBox& b);

struct PreprocessConfig {
  int target_height = 128;
  int target_width = 96;
  double pad_fraction = 0.02;

  static PreprocessConfig preset_512x512() { return {512, 512, 0.02}; }
  static PreprocessConfig preset_1024x768() { return {1024, 768, 0.02}; }

  // Throws Error(kConfig).
  void validate() const;
};

// Real-valued row-major grid, values in [0, 1].
struct NormalizedRaster {
  int height = 0;
  int width = 0;
  std::vector<double> values;

  double at(int y, int x) const { return values[static_cast<size_t>(y) * width + x]; }
};

// 256-bin intensity histogram used by the threshold search. 8-bit images use
// one bin per level. 16-bit images map value v to floor(v * 256 / (m + 1)),
// with m the image's maximum sample.
struct IntensityHistogram {
  std::array<uint64_t, 256> counts{};
  uint32_t range_max = 255;  // m + 1 == bins span [0, range_max]
  int bit_depth = 8;

  int bin_of(uint16_t value) const;
  // Smallest intensity whose bin is >= `bin`.
  uint32_t level_of_bin(int bin) const;
};

IntensityHistogram intensity_histogram(const GrayImage& image);

// Between-class variance (unnormalized by total weight squared) for the split
// "bins < t" vs "bins >= t".
double between_class_variance(const IntensityHistogram& hist, int t);

struct OtsuResult {
  int bin = 0;         // first foreground bin
  uint32_t level = 0;  // foreground: value >= level
};

// Maximizes between-class variance over t in 1..255; ties pick the lowest t.
// Throws Error(kIntegrity) on a constant image.
OtsuResult otsu_threshold(const GrayImage& image);

// Bounding box of the largest 4-connected foreground component, no padding.
// Equal-size components: the one reached first in raster order wins.
BoundingBox detect_breast_box(const GrayImage& image);

// detect_breast_box expanded by round(pad_fraction * extent) on each side,
// clamped to the image.
BoundingBox breast_roi(const GrayImage& image, double pad_fraction = 0.02);
BoundingBox pad_box(const BoundingBox& box, int image_width, int image_height,
                    double pad_fraction);

struct PreprocessResult {
  NormalizedRaster raster;
  BoundingBox roi;
  bool degenerate_intensity = false;  // crop min == max; raster is all zeros
};

// Crops to the padded ROI (or the override), min-max scales to [0, 1] within
// the crop, then bilinear-resizes to the configured target.
PreprocessResult preprocess_image(const GrayImage& image, const PreprocessConfig& cfg,
                                  const std::optional<BoundingBox>& roi_override = std::nullopt);

// Bilinear resize with pixel-center alignment and edge clamping.
NormalizedRaster resize_bilinear(const NormalizedRaster& src, int height, int width);

}  // namespace mammo

#endif  // MAMMO_PREPROCESS_HPP_
