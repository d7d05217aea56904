#ifndef MAMMO_FUSION_HPP_
#define MAMMO_FUSION_HPP_

// Per-side late fusion: a breast's CC and MLO feature vectors are averaged
// into one vector that feeds the second-stage classifier.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mammo/features.hpp"
#include "mammo/ingestion.hpp"

namespace mammo {

struct FeatureVector {
  std::vector<float> values;
  std::string study_id;
  Laterality laterality = Laterality::kLeft;
  ViewKind view = ViewKind::kCC;
};

struct SideFeature {
  std::vector<float> values;
  std::string study_id;
  Laterality laterality = Laterality::kLeft;
  uint8_t views_present = 0;  // kViewMaskCC | kViewMaskMLO
};

// Elementwise mean when both are present, otherwise the present vector.
// Throws Error(kIntegrity) on dimension or study/laterality mismatch, or when
// both are absent.
SideFeature fuse_side(const std::optional<FeatureVector>& cc, const std::optional<FeatureVector>& mlo);

struct FusedTable {
  FeatureMatrix matrix;      // one row per breast side, view = kFused
  int incomplete_sides = 0;  // sides fused from a single view
};

// Inputs: one matrix per view (any order, any subset). Rows are ordered by
// study (manifest order) then left before right. Diagnosis is the ordinal max
// of the side's view labels; density comes from CC when present, else MLO.
// Throws Error(kIntegrity) for feature rows with no manifest image.
FusedTable build_training_table(std::span<const FeatureMatrix> per_view, const Manifest& manifest);

// Single-view table: one row per image with its own labels, ordered by study
// then L-CC, L-MLO, R-CC, R-MLO.
FeatureMatrix build_single_view_table(std::span<const FeatureMatrix> per_view, const Manifest& manifest);

}  // namespace mammo

#endif  // MAMMO_FUSION_HPP_
