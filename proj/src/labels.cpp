#include "mammo/labels.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "mammo/error.hpp"

namespace mammo {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInternal: return "internal";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kTrainingRefused: return "training-refused";
    case ErrorCode::kFormatVersion: return "format-version";
    case ErrorCode::kIntegrity: return "integrity";
  }
  return "unknown";
}

namespace {

std::string lower_trimmed(std::string_view text) {
  size_t begin = 0;
  size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  std::string out(text.substr(begin, end - begin));
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const char* kind_name(LabelKind kind) {
  switch (kind) {
    case LabelKind::kBiRads: return "BI-RADS";
    case LabelKind::kDensity: return "density";
    case LabelKind::kPathology: return "pathology";
  }
  return "?";
}

}  // namespace

std::string_view scheme_name(const LabelScheme& scheme) {
  return scheme.mode == DiagnosisMode::kBiRads5 ? "birads5" : "pathology3";
}

LabelScheme parse_scheme(std::string_view name) {
  const std::string key = lower_trimmed(name);
  if (key == "birads5") return LabelScheme{DiagnosisMode::kBiRads5};
  if (key == "pathology3") return LabelScheme{DiagnosisMode::kPathology3};
  fail(ErrorCode::kConfig, "unknown label scheme '" + std::string(name) +
                               "' (expected birads5 or pathology3)");
}

int class_count(LabelKind kind) {
  switch (kind) {
    case LabelKind::kBiRads: return 5;
    case LabelKind::kDensity: return 4;
    case LabelKind::kPathology: return 3;
  }
  return 0;
}

OrdinalLabel::OrdinalLabel(LabelKind kind, int index) : kind_(kind), index_(index) {
  if (index < 0 || index >= class_count(kind)) {
    fail(ErrorCode::kIntegrity, std::string(kind_name(kind)) + " class index " +
                                    std::to_string(index) + " out of range");
  }
}

OrdinalLabel OrdinalLabel::birads(int category) {
  return OrdinalLabel(LabelKind::kBiRads, category - 1);
}

OrdinalLabel OrdinalLabel::density(char letter) {
  return OrdinalLabel(LabelKind::kDensity,
                      std::toupper(static_cast<unsigned char>(letter)) - 'A');
}

OrdinalLabel OrdinalLabel::pathology(int index) {
  return OrdinalLabel(LabelKind::kPathology, index);
}

bool ordinal_less(const OrdinalLabel& a, const OrdinalLabel& b) {
  if (a.kind() != b.kind()) {
    fail(ErrorCode::kIntegrity, std::string("cannot compare ") + kind_name(a.kind()) +
                                    " label with " + kind_name(b.kind()) + " label");
  }
  return a.index() < b.index();
}

OrdinalLabel combine_view_labels(const OrdinalLabel& a, const OrdinalLabel& b) {
  return ordinal_less(a, b) ? b : a;
}

StudyLabel study_label(const std::optional<OrdinalLabel>& left,
                       const std::optional<OrdinalLabel>& right) {
  if (left && right) return {combine_view_labels(*left, *right), false};
  if (left) return {*left, true};
  if (right) return {*right, true};
  fail(ErrorCode::kIntegrity, "study has no labeled breast");
}

OrdinalLabel parse_label(std::string_view text, const LabelScheme& scheme,
                         LabelTarget target) {
  const std::string token = lower_trimmed(text);
  auto bad = [&]() -> OrdinalLabel {
    fail(ErrorCode::kIntegrity,
         std::string("invalid ") +
             (target == LabelTarget::kDensity ? "density" : "diagnosis") +
             " label '" + std::string(text) + "' for scheme " +
             std::string(scheme_name(scheme)));
  };
  if (token.empty()) return bad();

  if (target == LabelTarget::kDensity) {
    if (token.size() == 1 && token[0] >= 'a' && token[0] <= 'd') {
      return OrdinalLabel::density(token[0]);
    }
    return bad();
  }
  if (scheme.mode == DiagnosisMode::kBiRads5) {
    if (token.size() == 1 && token[0] >= '1' && token[0] <= '5') {
      return OrdinalLabel::birads(token[0] - '0');
    }
    return bad();
  }
  static const std::unordered_map<std::string, int> kPathology = {
      {"normal", 0},
      {"benign", 1},
      {"benign with callback", 1},
      {"benign without callback", 1},
      {"benign_with_callback", 1},
      {"benign_without_callback", 1},
      {"cancer", 2},
      {"malignant", 2},
  };
  if (auto it = kPathology.find(token); it != kPathology.end()) {
    return OrdinalLabel::pathology(it->second);
  }
  return bad();
}

std::string render_label(const OrdinalLabel& label) {
  switch (label.kind()) {
    case LabelKind::kBiRads: return std::to_string(label.index() + 1);
    case LabelKind::kDensity: return std::string(1, static_cast<char>('A' + label.index()));
    case LabelKind::kPathology: {
      static constexpr const char* kNames[] = {"normal", "benign", "cancer"};
      return kNames[label.index()];
    }
  }
  return "?";
}

char laterality_char(Laterality lat) { return lat == Laterality::kLeft ? 'L' : 'R'; }

std::string_view view_kind_name(ViewKind view) {
  return view == ViewKind::kCC ? "CC" : "MLO";
}

ViewId ViewId::from_slot(int slot) {
  return ViewId{static_cast<Laterality>(slot / 2), static_cast<ViewKind>(slot % 2)};
}

std::string view_id_name(const ViewId& id) {
  return std::string(1, laterality_char(id.laterality)) + "-" +
         std::string(view_kind_name(id.view));
}

std::optional<ViewId> parse_view_id(std::string_view text) {
  for (const ViewId& id : kAllViews) {
    if (lower_trimmed(text) == lower_trimmed(view_id_name(id))) return id;
  }
  return std::nullopt;
}

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view text) {
  const std::string token = lower_trimmed(text);
  if (token == "train") return Split::kTrain;
  if (token == "val") return Split::kVal;
  if (token == "test") return Split::kTest;
  return std::nullopt;
}

bool StudyRecord::has_side(Laterality lat) const {
  return image({lat, ViewKind::kCC}).has_value() || image({lat, ViewKind::kMLO}).has_value();
}

std::optional<OrdinalLabel> StudyRecord::side_diagnosis(Laterality lat) const {
  const auto& cc = image({lat, ViewKind::kCC});
  const auto& mlo = image({lat, ViewKind::kMLO});
  if (cc && mlo) return combine_view_labels(cc->diagnosis, mlo->diagnosis);
  if (cc) return cc->diagnosis;
  if (mlo) return mlo->diagnosis;
  return std::nullopt;
}

std::optional<OrdinalLabel> StudyRecord::side_density(Laterality lat) const {
  if (const auto& cc = image({lat, ViewKind::kCC})) return cc->density;
  if (const auto& mlo = image({lat, ViewKind::kMLO})) return mlo->density;
  return std::nullopt;
}

std::optional<Split> StudyRecord::split() const {
  for (const auto& img : images) {
    if (img && img->split) return img->split;
  }
  return std::nullopt;
}

std::vector<StudyRecord> group_studies(const std::vector<ImageRecord>& rows) {
  std::vector<StudyRecord> studies;
  std::unordered_map<std::string, size_t> index;
  for (const ImageRecord& row : rows) {
    auto [it, inserted] = index.try_emplace(row.study_id, studies.size());
    if (inserted) {
      studies.push_back(StudyRecord{row.study_id, {}});
    }
    studies[it->second].images[row.view.slot()] = row;
  }
  return studies;
}

}  // namespace mammo
