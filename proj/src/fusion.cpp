#include "mammo/fusion.hpp"

#include <map>
#include <unordered_map>

#include "mammo/error.hpp"

namespace mammo {

SideFeature fuse_side(const std::optional<FeatureVector>& cc, const std::optional<FeatureVector>& mlo) {
  if (!cc && !mlo) fail(ErrorCode::kIntegrity, "cannot fuse a side with no views");
  if (cc && mlo) {
    if (cc->values.size() != mlo->values.size()) {
      fail(ErrorCode::kIntegrity, "CC/MLO feature dimensions differ (" +
                                      std::to_string(cc->values.size()) + " vs " +
                                      std::to_string(mlo->values.size()) + ")");
    }
    if (cc->study_id != mlo->study_id || cc->laterality != mlo->laterality) {
      fail(ErrorCode::kIntegrity, "CC/MLO features come from different breasts");
    }
    SideFeature out{std::vector<float>(cc->values.size()), cc->study_id, cc->laterality,
                    static_cast<uint8_t>(kViewMaskCC | kViewMaskMLO)};
    for (size_t i = 0; i < out.values.size(); ++i) {
      out.values[i] = static_cast<float>(0.5 * (static_cast<double>(cc->values[i]) +
                                                static_cast<double>(mlo->values[i])));
    }
    return out;
  }
  const FeatureVector& only = cc ? *cc : *mlo;
  return {only.values, only.study_id, only.laterality, cc ? kViewMaskCC : kViewMaskMLO};
}

namespace {

struct Located {
  const FeatureMatrix* matrix;
  size_t row;
};

// (study index, view slot) -> feature row; checks every row maps to a
// manifest image and dimensions agree.
std::vector<std::array<std::optional<Located>, 4>> index_rows(std::span<const FeatureMatrix> per_view,
                                                              const std::vector<StudyRecord>& studies,
                                                              int& channels) {
  std::unordered_map<std::string, size_t> study_index;
  for (size_t i = 0; i < studies.size(); ++i) study_index.emplace(studies[i].study_id, i);
  std::vector<std::array<std::optional<Located>, 4>> table(studies.size());
  channels = -1;
  for (const FeatureMatrix& m : per_view) {
    if (channels < 0) channels = m.channels;
    if (m.channels != channels) fail(ErrorCode::kIntegrity, "feature matrices disagree on C");
    for (size_t r = 0; r < m.rows(); ++r) {
      const FeatureSource& s = m.sources[r];
      if (s.view == FeatureView::kFused) fail(ErrorCode::kIntegrity, "fused row given as per-view input");
      const ViewId id{s.laterality, static_cast<ViewKind>(s.view)};
      const auto it = study_index.find(s.study_id);
      if (it == study_index.end() || !studies[it->second].image(id)) {
        fail(ErrorCode::kIntegrity, "orphan feature row: " + s.study_id + " " + view_id_name(id) +
                                        " has no manifest image");
      }
      auto& slot = table[it->second][static_cast<size_t>(id.slot())];
      if (slot) fail(ErrorCode::kIntegrity, "duplicate feature row: " + s.study_id + " " + view_id_name(id));
      slot = Located{&m, r};
    }
  }
  if (channels < 0) channels = 0;
  return table;
}

FeatureVector vector_of(const Located& loc) {
  const FeatureSource& s = loc.matrix->sources[loc.row];
  const auto row = loc.matrix->row(loc.row);
  return {std::vector<float>(row.begin(), row.end()), s.study_id, s.laterality,
          static_cast<ViewKind>(s.view)};
}

}  // namespace

FusedTable build_training_table(std::span<const FeatureMatrix> per_view, const Manifest& manifest) {
  const std::vector<StudyRecord> studies = manifest.studies();
  int channels = 0;
  const auto table = index_rows(per_view, studies, channels);

  FusedTable out;
  out.matrix.channels = channels;
  out.matrix.scheme = manifest.scheme;
  for (size_t i = 0; i < studies.size(); ++i) {
    for (Laterality lat : {Laterality::kLeft, Laterality::kRight}) {
      const auto& cc_loc = table[i][static_cast<size_t>(ViewId{lat, ViewKind::kCC}.slot())];
      const auto& mlo_loc = table[i][static_cast<size_t>(ViewId{lat, ViewKind::kMLO}.slot())];
      if (!cc_loc && !mlo_loc) continue;
      std::optional<FeatureVector> cc, mlo;
      if (cc_loc) cc = vector_of(*cc_loc);
      if (mlo_loc) mlo = vector_of(*mlo_loc);
      const SideFeature side = fuse_side(cc, mlo);
      if (side.views_present != (kViewMaskCC | kViewMaskMLO)) ++out.incomplete_sides;

      // Labels from the views that contributed features.
      const StudyRecord& st = studies[i];
      std::optional<OrdinalLabel> diag;
      std::optional<OrdinalLabel> dens;
      if (cc_loc) {
        const ImageRecord& img = *st.image({lat, ViewKind::kCC});
        diag = img.diagnosis;
        dens = img.density;
      }
      if (mlo_loc) {
        const ImageRecord& img = *st.image({lat, ViewKind::kMLO});
        diag = diag ? combine_view_labels(*diag, img.diagnosis) : img.diagnosis;
        if (!dens) dens = img.density;
      }
      out.matrix.append(side.values,
                        FeatureSource{side.study_id, lat, FeatureView::kFused, side.views_present},
                        diag->index(), dens->index());
    }
  }
  return out;
}

FeatureMatrix build_single_view_table(std::span<const FeatureMatrix> per_view, const Manifest& manifest) {
  const std::vector<StudyRecord> studies = manifest.studies();
  int channels = 0;
  const auto table = index_rows(per_view, studies, channels);
  FeatureMatrix out;
  out.channels = channels;
  out.scheme = manifest.scheme;
  for (size_t i = 0; i < studies.size(); ++i) {
    for (int slot = 0; slot < 4; ++slot) {
      const auto& loc = table[i][static_cast<size_t>(slot)];
      if (!loc) continue;
      const ImageRecord& img = *studies[i].images[static_cast<size_t>(slot)];
      out.append(loc->matrix->row(loc->row), loc->matrix->sources[loc->row], img.diagnosis.index(),
                 img.density.index());
    }
  }
  return out;
}

}  // namespace mammo
