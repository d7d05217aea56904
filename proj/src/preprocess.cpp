#include "mammo/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mammo/error.hpp"

namespace mammo {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const int ix0 = std::max(a.x0, b.x0);
  const int iy0 = std::max(a.y0, b.y0);
  const int ix1 = std::min(a.x1, b.x1);
  const int iy1 = std::min(a.y1, b.y1);
  const long inter = (ix1 > ix0 && iy1 > iy0) ? static_cast<long>(ix1 - ix0) * (iy1 - iy0) : 0;
  const long uni = a.area() + b.area() - inter;
  return uni > 0 ? static_cast<double>(inter) / static_cast<double>(uni) : 0.0;
}

void PreprocessConfig::validate() const {
  if (target_height < 16 || target_width < 16) {
    fail(ErrorCode::kConfig, "preprocess.target_height/target_width must be >= 16");
  }
  if (!(pad_fraction >= 0.0 && pad_fraction <= 0.25)) {
    fail(ErrorCode::kConfig, "preprocess.pad_fraction must lie in [0, 0.25]");
  }
}

int IntensityHistogram::bin_of(uint16_t value) const {
  if (bit_depth == 8) return value;
  return static_cast<int>(static_cast<uint64_t>(value) * 256 / (static_cast<uint64_t>(range_max) + 1));
}

uint32_t IntensityHistogram::level_of_bin(int bin) const {
  if (bit_depth == 8) return static_cast<uint32_t>(bin);
  // smallest v with v * 256 / (m + 1) >= bin
  const uint64_t span = static_cast<uint64_t>(range_max) + 1;
  return static_cast<uint32_t>((static_cast<uint64_t>(bin) * span + 255) / 256);
}

IntensityHistogram intensity_histogram(const GrayImage& image) {
  IntensityHistogram hist;
  hist.bit_depth = image.bit_depth;
  if (image.bit_depth == 16) {
    uint16_t m = 0;
    for (uint16_t v : image.pixels) m = std::max(m, v);
    hist.range_max = m;
  }
  for (uint16_t v : image.pixels) ++hist.counts[static_cast<size_t>(hist.bin_of(v))];
  return hist;
}

double between_class_variance(const IntensityHistogram& hist, int t) {
  double n0 = 0, s0 = 0, n1 = 0, s1 = 0;
  for (int b = 0; b < 256; ++b) {
    const double c = static_cast<double>(hist.counts[static_cast<size_t>(b)]);
    if (b < t) {
      n0 += c;
      s0 += c * b;
    } else {
      n1 += c;
      s1 += c * b;
    }
  }
  if (n0 == 0 || n1 == 0) return 0.0;
  const double n = n0 + n1;
  const double w0 = n0 / n;
  const double w1 = n1 / n;
  const double d = s0 / n0 - s1 / n1;
  return w0 * w1 * d * d;
}

OtsuResult otsu_threshold(const GrayImage& image) {
  const IntensityHistogram hist = intensity_histogram(image);
  int populated = 0;
  for (uint64_t c : hist.counts) populated += c > 0;
  if (populated < 2) fail(ErrorCode::kIntegrity, "threshold undefined for a constant image");

  // Running class sums; every t is evaluated with the same arithmetic as
  // between_class_variance so ties resolve identically.
  double total_n = 0, total_s = 0;
  for (int b = 0; b < 256; ++b) {
    total_n += static_cast<double>(hist.counts[static_cast<size_t>(b)]);
    total_s += static_cast<double>(hist.counts[static_cast<size_t>(b)]) * b;
  }
  double n0 = 0, s0 = 0;
  double best = -1.0;
  int best_t = 1;
  for (int t = 1; t < 256; ++t) {
    const double c = static_cast<double>(hist.counts[static_cast<size_t>(t - 1)]);
    n0 += c;
    s0 += c * (t - 1);
    const double n1 = total_n - n0;
    const double s1 = total_s - s0;
    double var = 0.0;
    if (n0 > 0 && n1 > 0) {
      const double w0 = n0 / total_n;
      const double w1 = n1 / total_n;
      const double d = s0 / n0 - s1 / n1;
      var = w0 * w1 * d * d;
    }
    if (var > best) {
      best = var;
      best_t = t;
    }
  }
  return {best_t, hist.level_of_bin(best_t)};
}

BoundingBox detect_breast_box(const GrayImage& image) {
  const OtsuResult otsu = otsu_threshold(image);
  const int w = image.width;
  const int h = image.height;
  const size_t n = static_cast<size_t>(w) * static_cast<size_t>(h);
  std::vector<int> label(n, 0);
  std::vector<size_t> stack;

  long best_count = 0;
  BoundingBox best;
  int next_label = 0;
  for (size_t start = 0; start < n; ++start) {
    if (label[start] != 0 || image.pixels[start] < otsu.level) continue;
    ++next_label;
    label[start] = next_label;
    stack.assign(1, start);
    long count = 0;
    BoundingBox box{w, h, 0, 0};
    while (!stack.empty()) {
      const size_t p = stack.back();
      stack.pop_back();
      ++count;
      const int x = static_cast<int>(p % static_cast<size_t>(w));
      const int y = static_cast<int>(p / static_cast<size_t>(w));
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x + 1);
      box.y1 = std::max(box.y1, y + 1);
      auto visit = [&](int nx, int ny) {
        const size_t q = static_cast<size_t>(ny) * static_cast<size_t>(w) + static_cast<size_t>(nx);
        if (label[q] == 0 && image.pixels[q] >= otsu.level) {
          label[q] = next_label;
          stack.push_back(q);
        }
      };
      if (x > 0) visit(x - 1, y);
      if (x + 1 < w) visit(x + 1, y);
      if (y > 0) visit(x, y - 1);
      if (y + 1 < h) visit(x, y + 1);
    }
    if (count > best_count) {
      best_count = count;
      best = box;
    }
  }
  if (best_count == 0) fail(ErrorCode::kIntegrity, "no foreground pixels after thresholding");
  return best;
}

BoundingBox pad_box(const BoundingBox& box, int image_width, int image_height, double pad_fraction) {
  const int px = static_cast<int>(std::lround(pad_fraction * box.width()));
  const int py = static_cast<int>(std::lround(pad_fraction * box.height()));
  return {std::max(0, box.x0 - px), std::max(0, box.y0 - py),
          std::min(image_width, box.x1 + px), std::min(image_height, box.y1 + py)};
}

BoundingBox breast_roi(const GrayImage& image, double pad_fraction) {
  return pad_box(detect_breast_box(image), image.width, image.height, pad_fraction);
}

NormalizedRaster resize_bilinear(const NormalizedRaster& src, int height, int width) {
  NormalizedRaster out{height, width, std::vector<double>(static_cast<size_t>(height) * width)};
  if (src.height == height && src.width == width) {
    out.values = src.values;
    return out;
  }
  const double sy = static_cast<double>(src.height) / height;
  const double sx = static_cast<double>(src.width) / width;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      const double top = src.at(y0, x0) * (1 - wx) + src.at(y0, x1) * wx;
      const double bottom = src.at(y1, x0) * (1 - wx) + src.at(y1, x1) * wx;
      out.values[static_cast<size_t>(y) * width + x] = top * (1 - wy) + bottom * wy;
    }
  }
  return out;
}

PreprocessResult preprocess_image(const GrayImage& image, const PreprocessConfig& cfg,
                                  const std::optional<BoundingBox>& roi_override) {
  cfg.validate();
  PreprocessResult result;
  if (roi_override) {
    const BoundingBox& r = *roi_override;
    if (r.x0 < 0 || r.y0 < 0 || r.x1 > image.width || r.y1 > image.height || r.x1 <= r.x0 ||
        r.y1 <= r.y0) {
      fail(ErrorCode::kIntegrity, "roi override outside image bounds");
    }
    result.roi = r;
  } else {
    result.roi = breast_roi(image, cfg.pad_fraction);
  }
  const BoundingBox& roi = result.roi;

  uint16_t lo = std::numeric_limits<uint16_t>::max();
  uint16_t hi = 0;
  for (int y = roi.y0; y < roi.y1; ++y) {
    for (int x = roi.x0; x < roi.x1; ++x) {
      lo = std::min(lo, image.at(x, y));
      hi = std::max(hi, image.at(x, y));
    }
  }
  NormalizedRaster crop{roi.height(), roi.width(),
                        std::vector<double>(static_cast<size_t>(roi.area()), 0.0)};
  if (lo == hi) {
    result.degenerate_intensity = true;
  } else {
    const double scale = 1.0 / (hi - lo);
    for (int y = 0; y < roi.height(); ++y) {
      for (int x = 0; x < roi.width(); ++x) {
        crop.values[static_cast<size_t>(y) * crop.width + x] =
            (image.at(roi.x0 + x, roi.y0 + y) - lo) * scale;
      }
    }
  }
  result.raster = resize_bilinear(crop, cfg.target_height, cfg.target_width);
  return result;
}

}  // namespace mammo
