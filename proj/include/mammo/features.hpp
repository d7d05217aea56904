#ifndef MAMMO_FEATURES_HPP_
#define MAMMO_FEATURES_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mammo/labels.hpp"

namespace mammo {

// Which image(s) a feature row came from. Fused rows carry kFused and a
// views_present mask (bit 0 = CC, bit 1 = MLO).
enum class FeatureView : uint8_t { kCC = 0, kMLO = 1, kFused = 2 };

inline constexpr uint8_t kViewMaskCC = 1;
inline constexpr uint8_t kViewMaskMLO = 2;

struct FeatureSource {
  std::string study_id;
  Laterality laterality = Laterality::kLeft;
  FeatureView view = FeatureView::kCC;
  uint8_t views_present = kViewMaskCC;

  friend bool operator==(const FeatureSource&, const FeatureSource&) = default;
};

// N x C table of pooled feature vectors with aligned labels and sources.
struct FeatureMatrix {
  int channels = 0;
  LabelScheme scheme;
  std::vector<float> values;  // row-major N x C
  std::vector<FeatureSource> sources;
  std::vector<uint8_t> diagnosis;  // class index
  std::vector<uint8_t> density;    // class index

  size_t rows() const { return sources.size(); }
  std::span<const float> row(size_t i) const {
    return {values.data() + i * static_cast<size_t>(channels), static_cast<size_t>(channels)};
  }
  void append(std::span<const float> v, FeatureSource source, int diag, int dens);

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

// Feature file ("MFV1"), all integers little-endian:
//   magic "MFV1" | u64 N | u32 C | u8 scheme (0 birads5, 1 pathology3)
//   N records: C x f32 | u8 diagnosis | u8 density | u8 laterality (0 L, 1 R)
//              | u8 view (0 CC, 1 MLO, 2 fused) | u8 views_present
//              | u16 study_id length | study_id bytes
std::string encode_features(const FeatureMatrix& matrix);
FeatureMatrix decode_features(std::string_view bytes);
void save_features(const std::filesystem::path& path, const FeatureMatrix& matrix);
FeatureMatrix load_features(const std::filesystem::path& path);

}  // namespace mammo

#endif  // MAMMO_FEATURES_HPP_
