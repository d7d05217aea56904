#ifndef MAMMO_LABELS_HPP_
#define MAMMO_LABELS_HPP_

// Domain vocabulary: ordinal labels, views, and the label-aggregation rules.

#include <array>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mammo {

enum class LabelKind { kBiRads, kDensity, kPathology };

enum class DiagnosisMode { kBiRads5, kPathology3 };

enum class LabelTarget { kDiagnosis, kDensity };

inline constexpr int kDensityClasses = 4;

struct LabelScheme {
  DiagnosisMode mode = DiagnosisMode::kBiRads5;

  int diagnosis_classes() const {
    return mode == DiagnosisMode::kBiRads5 ? 5 : 3;
  }
  LabelKind diagnosis_kind() const {
    return mode == DiagnosisMode::kBiRads5 ? LabelKind::kBiRads
                                           : LabelKind::kPathology;
  }
  static constexpr int density_classes() { return kDensityClasses; }

  friend bool operator==(const LabelScheme&, const LabelScheme&) = default;
};

std::string_view scheme_name(const LabelScheme& scheme);
// Accepts "birads5" or "pathology3"; throws Error(kConfig) otherwise.
LabelScheme parse_scheme(std::string_view name);

int class_count(LabelKind kind);

// A value of one ordinal label family. `index` is the 0-based class index
// (BI-RADS 1 -> 0, density A -> 0, normal -> 0). Ordering across different
// kinds is undefined; comparisons between kinds throw.
class OrdinalLabel {
 public:
  OrdinalLabel(LabelKind kind, int index);

  static OrdinalLabel birads(int category);  // category in 1..5
  static OrdinalLabel density(char letter);  // 'A'..'D'
  static OrdinalLabel pathology(int index);  // 0 normal, 1 benign, 2 cancer

  LabelKind kind() const { return kind_; }
  int index() const { return index_; }

  friend bool operator==(const OrdinalLabel&, const OrdinalLabel&) = default;

 private:
  LabelKind kind_;
  int index_;
};

// Strict ordinal comparison; throws Error(kIntegrity) on mixed kinds.
bool ordinal_less(const OrdinalLabel& a, const OrdinalLabel& b);

// Breast label from its two view labels: ordinal maximum.
OrdinalLabel combine_view_labels(const OrdinalLabel& a, const OrdinalLabel& b);

struct StudyLabel {
  OrdinalLabel label;
  bool one_side_missing = false;
};

// Study label from its breast labels. With one side absent the present side is
// propagated and flagged; with both absent throws.
StudyLabel study_label(const std::optional<OrdinalLabel>& left,
                       const std::optional<OrdinalLabel>& right);

// Case-insensitive. The two DDSM "benign ... callback" variants map to benign.
OrdinalLabel parse_label(std::string_view text, const LabelScheme& scheme,
                         LabelTarget target);

// Canonical token: "1".."5", "A".."D", "normal"/"benign"/"cancer".
std::string render_label(const OrdinalLabel& label);

enum class Laterality { kLeft = 0, kRight = 1 };
enum class ViewKind { kCC = 0, kMLO = 1 };

char laterality_char(Laterality lat);
std::string_view view_kind_name(ViewKind view);

struct ViewId {
  Laterality laterality;
  ViewKind view;

  // 0..3 in the order L-CC, L-MLO, R-CC, R-MLO.
  int slot() const {
    return static_cast<int>(laterality) * 2 + static_cast<int>(view);
  }
  static ViewId from_slot(int slot);

  friend bool operator==(const ViewId&, const ViewId&) = default;
};

std::string view_id_name(const ViewId& id);  // "L-CC"
std::optional<ViewId> parse_view_id(std::string_view text);
inline constexpr std::array<ViewId, 4> kAllViews = {
    ViewId{Laterality::kLeft, ViewKind::kCC},
    ViewId{Laterality::kLeft, ViewKind::kMLO},
    ViewId{Laterality::kRight, ViewKind::kCC},
    ViewId{Laterality::kRight, ViewKind::kMLO},
};

enum class Split { kTrain = 0, kVal = 1, kTest = 2 };
std::string_view split_name(Split split);
std::optional<Split> parse_split(std::string_view text);

struct RoiOverride {
  int x0, y0, x1, y1;
};

struct ImageRecord {
  std::string study_id;
  ViewId view;
  std::string image_path;
  OrdinalLabel diagnosis;
  OrdinalLabel density;
  std::optional<Split> split;
  std::optional<RoiOverride> roi;
};

struct StudyRecord {
  std::string study_id;
  // Indexed by ViewId::slot().
  std::array<std::optional<ImageRecord>, 4> images;

  const std::optional<ImageRecord>& image(ViewId id) const {
    return images[id.slot()];
  }
  bool has_side(Laterality lat) const;
  // Ordinal max over the side's present views.
  std::optional<OrdinalLabel> side_diagnosis(Laterality lat) const;
  // CC density when present, else MLO.
  std::optional<OrdinalLabel> side_density(Laterality lat) const;
  std::optional<Split> split() const;
};

// Groups image rows into studies, ordered by first appearance of study_id.
std::vector<StudyRecord> group_studies(const std::vector<ImageRecord>& rows);

}  // namespace mammo

#endif  // MAMMO_LABELS_HPP_
