#include <gtest/gtest.h>

#include <sstream>

#include "mammo/error.hpp"
#include "mammo/features.hpp"
#include "mammo/fusion.hpp"
#include "mammo/ingestion.hpp"

using namespace mammo;

namespace {

Manifest two_studies(bool drop_left_mlo) {
  std::string text = "study_id,laterality,view,image_path,diagnosis,density\n";
  for (const char* s : {"S1", "S2"}) {
    text += std::string(s) + ",L,CC,a,2,B\n";
    if (!(drop_left_mlo && std::string(s) == "S2")) text += std::string(s) + ",L,MLO,b,4,C\n";
    text += std::string(s) + ",R,CC,c,1,A\n";
    text += std::string(s) + ",R,MLO,d,1,A\n";
  }
  std::istringstream in(text);
  return parse_manifest(in, LabelScheme{});
}

// One matrix per view holding a row for every manifest image of that view.
std::vector<FeatureMatrix> view_features(const Manifest& m) {
  std::vector<FeatureMatrix> out;
  for (const ViewId& v : kAllViews) {
    FeatureMatrix f;
    f.channels = 2;
    for (size_t r = 0; r < m.rows.size(); ++r) {
      const ImageRecord& row = m.rows[r];
      if (row.view != v) continue;
      const float base = static_cast<float>(r);
      const std::vector<float> vals = {base, 10.0f * static_cast<float>(v.slot())};
      f.append(vals,
               FeatureSource{row.study_id, v.laterality, static_cast<FeatureView>(v.view),
                             v.view == ViewKind::kCC ? kViewMaskCC : kViewMaskMLO},
               row.diagnosis.index(), row.density.index());
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

TEST(FuseSide, AveragesOrPropagates) {
  const FeatureVector cc{{1.0f, 4.0f}, "S", Laterality::kLeft, ViewKind::kCC};
  const FeatureVector mlo{{3.0f, 0.0f}, "S", Laterality::kLeft, ViewKind::kMLO};
  const SideFeature both = fuse_side(cc, mlo);
  EXPECT_EQ(both.values, (std::vector<float>{2.0f, 2.0f}));
  EXPECT_EQ(both.views_present, kViewMaskCC | kViewMaskMLO);
  const SideFeature only = fuse_side(std::nullopt, mlo);
  EXPECT_EQ(only.values, mlo.values);
  EXPECT_EQ(only.views_present, kViewMaskMLO);
  EXPECT_THROW(fuse_side(std::nullopt, std::nullopt), Error);
  FeatureVector other = mlo;
  other.laterality = Laterality::kRight;
  EXPECT_THROW(fuse_side(cc, other), Error);
  other = mlo;
  other.values.push_back(1.0f);
  EXPECT_THROW(fuse_side(cc, other), Error);
}

TEST(FuseSide, IsCommutativeAndIdempotent) {
  const FeatureVector a{{1.5f, -2.0f, 7.0f}, "S", Laterality::kRight, ViewKind::kCC};
  FeatureVector b{{0.5f, 4.0f, -1.0f}, "S", Laterality::kRight, ViewKind::kMLO};
  FeatureVector a_as_mlo = a;
  a_as_mlo.view = ViewKind::kMLO;
  FeatureVector b_as_cc = b;
  b_as_cc.view = ViewKind::kCC;
  EXPECT_EQ(fuse_side(a, b).values, fuse_side(b_as_cc, a_as_mlo).values);
  EXPECT_EQ(fuse_side(a, a_as_mlo).values, a.values);
}

TEST(TrainingTable, OneRowPerSideWithMaxDiagnosisAndCcDensity) {
  const Manifest m = two_studies(false);
  const auto views = view_features(m);
  const FusedTable t = build_training_table(views, m);
  ASSERT_EQ(t.matrix.rows(), 4u);
  EXPECT_EQ(t.incomplete_sides, 0);
  EXPECT_EQ(t.matrix.sources[0].study_id, "S1");
  EXPECT_EQ(t.matrix.sources[0].laterality, Laterality::kLeft);
  EXPECT_EQ(t.matrix.sources[0].view, FeatureView::kFused);
  EXPECT_EQ(t.matrix.diagnosis[0], 3);  // max(BI-RADS 2, 4)
  EXPECT_EQ(t.matrix.density[0], 1);    // CC density B
  // S1 left: rows 0 (L-CC) and 1 (L-MLO); slots 0 and 1.
  EXPECT_EQ(t.matrix.row(0)[0], 0.5f);
  EXPECT_EQ(t.matrix.row(0)[1], 5.0f);
}

TEST(TrainingTable, MissingMloWarnsOnceAndKeepsRowCount) {
  const Manifest full = two_studies(false);
  const Manifest partial = two_studies(true);
  const FusedTable a = build_training_table(view_features(full), full);
  const FusedTable b = build_training_table(view_features(partial), partial);
  EXPECT_EQ(b.incomplete_sides, 1);
  EXPECT_EQ(b.matrix.rows(), a.matrix.rows());
  EXPECT_EQ(b.matrix.sources[2].views_present, kViewMaskCC);
}

TEST(TrainingTable, OrphanFeatureRowsAreIntegrityErrors) {
  const Manifest full = two_studies(false);
  const Manifest partial = two_studies(true);
  try {
    build_training_table(view_features(full), partial);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIntegrity);
  }
}

TEST(SingleViewTable, OneRowPerImageInStudyThenSlotOrder) {
  const Manifest m = two_studies(false);
  const FeatureMatrix t = build_single_view_table(view_features(m), m);
  ASSERT_EQ(t.rows(), 8u);
  EXPECT_EQ(t.sources[0].view, FeatureView::kCC);
  EXPECT_EQ(t.sources[1].view, FeatureView::kMLO);
  EXPECT_EQ(t.sources[2].laterality, Laterality::kRight);
  EXPECT_EQ(t.diagnosis[1], 3);  // per-image label, BI-RADS 4
}

TEST(FeatureFile, RoundTripsAndRejectsBadMagic) {
  const Manifest m = two_studies(false);
  const FeatureMatrix t = build_single_view_table(view_features(m), m);
  EXPECT_TRUE(decode_features(encode_features(t)) == t);
  std::string bytes = encode_features(t);
  bytes[3] = '9';
  EXPECT_THROW(decode_features(bytes), Error);
  EXPECT_THROW(decode_features(encode_features(t).substr(0, 30)), Error);
}
