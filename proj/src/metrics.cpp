#include "mammo/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>

#include "mammo/error.hpp"

namespace mammo {

ConfusionMatrix::ConfusionMatrix(int classes)
    : k_(classes), counts_(static_cast<size_t>(classes) * static_cast<size_t>(classes), 0) {
  if (classes < 1) fail(ErrorCode::kIntegrity, "confusion matrix needs at least one class");
}

void ConfusionMatrix::add(int truth, int pred, long n) {
  if (truth < 0 || truth >= k_ || pred < 0 || pred >= k_) {
    fail(ErrorCode::kIntegrity, "class index out of range in confusion matrix");
  }
  counts_[static_cast<size_t>(truth * k_ + pred)] += n;
}

long ConfusionMatrix::total() const {
  long t = 0;
  for (long c : counts_) t += c;
  return t;
}

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truth, int classes) {
  if (preds.size() != truth.size()) {
    fail(ErrorCode::kIntegrity, "prediction and truth lengths differ (" + std::to_string(preds.size()) +
                                    " vs " + std::to_string(truth.size()) + ")");
  }
  ConfusionMatrix m(classes);
  for (size_t i = 0; i < preds.size(); ++i) m.add(truth[i], preds[i]);
  return m;
}

ClassScores f1_scores(const ConfusionMatrix& m) {
  const int k = m.classes();
  ClassScores s;
  s.precision.resize(static_cast<size_t>(k));
  s.recall.resize(static_cast<size_t>(k));
  s.f1.resize(static_cast<size_t>(k));
  s.support.resize(static_cast<size_t>(k));
  auto ratio = [](double num, double den) { return den > 0 ? num / den : 0.0; };
  double sum = 0.0;
  for (int c = 0; c < k; ++c) {
    long tp = m.at(c, c);
    long row = 0, col = 0;
    for (int j = 0; j < k; ++j) {
      row += m.at(c, j);
      col += m.at(j, c);
    }
    const auto i = static_cast<size_t>(c);
    s.support[i] = row;
    s.precision[i] = ratio(static_cast<double>(tp), static_cast<double>(col));
    s.recall[i] = ratio(static_cast<double>(tp), static_cast<double>(row));
    s.f1[i] = ratio(2.0 * s.precision[i] * s.recall[i], s.precision[i] + s.recall[i]);
    sum += s.f1[i];
  }
  s.macro_f1 = sum / k;
  return s;
}

double macro_f1(const std::vector<int>& preds, const std::vector<int>& truth, int classes) {
  return f1_scores(confusion(preds, truth, classes)).macro_f1;
}

const char* eval_level_name(EvalLevel level) {
  switch (level) {
    case EvalLevel::kLeft: return "left";
    case EvalLevel::kRight: return "right";
    case EvalLevel::kStudy: return "study";
    case EvalLevel::kSide: return "side";
  }
  return "?";
}

std::vector<SidePrediction> aggregate_image_predictions(const std::vector<ImagePrediction>& images) {
  struct Acc {
    bool present = false;
    SidePrediction side;
    bool have_cc_density = false;
  };
  std::vector<std::string> order;
  std::unordered_map<std::string, std::array<Acc, 2>> acc;
  for (const ImagePrediction& img : images) {
    auto [it, inserted] = acc.try_emplace(img.study_id);
    if (inserted) order.push_back(img.study_id);
    Acc& a = it->second[static_cast<size_t>(img.view.laterality)];
    const bool is_cc = img.view.view == ViewKind::kCC;
    if (!a.present) {
      a.present = true;
      a.side = {img.study_id, img.view.laterality, img.pred_diagnosis, img.true_diagnosis,
                img.pred_density, img.true_density};
      a.have_cc_density = is_cc;
      continue;
    }
    a.side.pred_diagnosis = std::max(a.side.pred_diagnosis, img.pred_diagnosis);
    a.side.true_diagnosis = std::max(a.side.true_diagnosis, img.true_diagnosis);
    a.side.pred_density = std::max(a.side.pred_density, img.pred_density);
    if (is_cc && !a.have_cc_density) {
      a.side.true_density = img.true_density;
      a.have_cc_density = true;
    }
  }
  std::vector<SidePrediction> out;
  for (const std::string& id : order) {
    for (const Acc& a : acc[id]) {
      if (a.present) out.push_back(a.side);
    }
  }
  return out;
}

namespace {

EvalReport make_report(EvalLevel level, const std::vector<int>& preds, const std::vector<int>& truth,
                       int classes) {
  EvalReport r;
  r.level = level;
  r.scores = f1_scores(confusion(preds, truth, classes));
  r.samples = static_cast<long>(preds.size());
  return r;
}

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::vector<std::string> class_names(LabelKind kind) {
  std::vector<std::string> names;
  for (int c = 0; c < class_count(kind); ++c) names.push_back(render_label(OrdinalLabel(kind, c)));
  return names;
}

struct Block {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::string> classes;
  std::vector<std::vector<const EvalReport*>> groups;  // per column group, 3 reports
};

std::string rtrim(std::string s) {
  s.erase(s.find_last_not_of(' ') + 1);
  return s;
}

std::string render_blocks(const std::vector<Block>& blocks, const std::vector<std::string>& group_names,
                          bool with_delta) {
  std::ostringstream out;
  for (const Block& b : blocks) {
    out << b.title << '\n';
    std::string header = "  " + std::string(12, ' ');
    char cell[64];
    for (const std::string& g : group_names) {
      std::snprintf(cell, sizeof(cell), " | %-28s", g.c_str());
      header += cell;
    }
    if (with_delta) {
      std::snprintf(cell, sizeof(cell), " | %-28s", "Delta");
      header += cell;
    }
    out << rtrim(header) << '\n';
    std::string cols = "  " + std::string(12, ' ');
    const size_t groups = b.groups.size() + (with_delta ? 1 : 0);
    for (size_t g = 0; g < groups; ++g) {
      cols += " |";
      for (const std::string& c : b.columns) {
        std::snprintf(cell, sizeof(cell), " %8s", c.c_str());
        cols += cell;
      }
      cols += "  ";
    }
    out << rtrim(cols) << '\n';
    auto emit_row = [&](const std::string& name, auto value_of) {
      std::snprintf(cell, sizeof(cell), "  %-12s", name.c_str());
      std::string line = cell;
      for (const auto& group : b.groups) {
        line += " |";
        for (const EvalReport* r : group) line += " " + fmt(value_of(*r), "%8.4f");
        line += "  ";
      }
      if (with_delta) {
        line += " |";
        for (size_t c = 0; c < b.groups[0].size(); ++c) {
          line += " " + fmt(value_of(*b.groups[1][c]) - value_of(*b.groups[0][c]), "%+8.4f");
        }
        line += "  ";
      }
      out << rtrim(line) << '\n';
    };
    for (size_t k = 0; k < b.classes.size(); ++k) {
      emit_row(b.classes[k], [k](const EvalReport& r) { return r.scores.f1[k]; });
    }
    emit_row("Macro-F1", [](const EvalReport& r) { return r.scores.macro_f1; });
    out << '\n';
  }
  return out.str();
}

}  // namespace

LevelReports evaluate_levels(const std::vector<SidePrediction>& sides,
                             const std::vector<std::string>& study_ids, const LabelScheme& scheme) {
  const int kd = scheme.diagnosis_classes();
  std::vector<int> lp, lt, rp, rt, ldp, ldt, rdp, rdt;
  std::unordered_map<std::string, std::array<const SidePrediction*, 2>> by_study;
  for (const SidePrediction& s : sides) {
    auto& slot = by_study[s.study_id][static_cast<size_t>(s.laterality)];
    if (slot) fail(ErrorCode::kIntegrity, "duplicate side prediction for study " + s.study_id);
    slot = &s;
    if (s.laterality == Laterality::kLeft) {
      lp.push_back(s.pred_diagnosis);
      lt.push_back(s.true_diagnosis);
      ldp.push_back(s.pred_density);
      ldt.push_back(s.true_density);
    } else {
      rp.push_back(s.pred_diagnosis);
      rt.push_back(s.true_diagnosis);
      rdp.push_back(s.pred_density);
      rdt.push_back(s.true_density);
    }
  }

  LevelReports out;
  std::vector<int> sp, st;
  for (const std::string& id : study_ids) {
    const auto it = by_study.find(id);
    if (it == by_study.end()) {
      ++out.excluded_studies;
      continue;
    }
    const auto& [left, right] = it->second;
    const LabelKind kind = scheme.diagnosis_kind();
    auto label = [kind](const SidePrediction* s, bool pred) -> std::optional<OrdinalLabel> {
      if (!s) return std::nullopt;
      return OrdinalLabel(kind, pred ? s->pred_diagnosis : s->true_diagnosis);
    };
    const StudyLabel pred = study_label(label(left, true), label(right, true));
    const StudyLabel truth = study_label(label(left, false), label(right, false));
    if (truth.one_side_missing) ++out.one_sided_studies;
    sp.push_back(pred.label.index());
    st.push_back(truth.label.index());
  }

  out.diagnosis_left = make_report(EvalLevel::kLeft, lp, lt, kd);
  out.diagnosis_right = make_report(EvalLevel::kRight, rp, rt, kd);
  out.diagnosis_study = make_report(EvalLevel::kStudy, sp, st, kd);
  out.density_left = make_report(EvalLevel::kLeft, ldp, ldt, kDensityClasses);
  out.density_right = make_report(EvalLevel::kRight, rdp, rdt, kDensityClasses);
  std::vector<int> pooled_p = ldp, pooled_t = ldt;
  pooled_p.insert(pooled_p.end(), rdp.begin(), rdp.end());
  pooled_t.insert(pooled_t.end(), rdt.begin(), rdt.end());
  out.density_side = make_report(EvalLevel::kSide, pooled_p, pooled_t, kDensityClasses);
  return out;
}

std::string render_report_table(const LevelReports& r, const LabelScheme& scheme) {
  const std::string diag_title =
      scheme.mode == DiagnosisMode::kBiRads5 ? "BI-RADS" : "Pathology";
  std::vector<Block> blocks = {
      {diag_title, {"Left", "Right", "Study"}, class_names(scheme.diagnosis_kind()),
       {{&r.diagnosis_left, &r.diagnosis_right, &r.diagnosis_study}}},
      {"Density", {"Left", "Right", "Side"}, class_names(LabelKind::kDensity),
       {{&r.density_left, &r.density_right, &r.density_side}}},
  };
  return render_blocks(blocks, {"Model"}, false);
}

std::string render_comparison_table(const LevelReports& single_view, const LevelReports& multi_view,
                                    const LabelScheme& scheme) {
  const std::string diag_title =
      scheme.mode == DiagnosisMode::kBiRads5 ? "BI-RADS" : "Pathology";
  const LevelReports& s = single_view;
  const LevelReports& m = multi_view;
  std::vector<Block> blocks = {
      {diag_title, {"Left", "Right", "Study"}, class_names(scheme.diagnosis_kind()),
       {{&s.diagnosis_left, &s.diagnosis_right, &s.diagnosis_study},
        {&m.diagnosis_left, &m.diagnosis_right, &m.diagnosis_study}}},
      {"Density", {"Left", "Right", "Side"}, class_names(LabelKind::kDensity),
       {{&s.density_left, &s.density_right, &s.density_side},
        {&m.density_left, &m.density_right, &m.density_side}}},
  };
  return render_blocks(blocks, {"Single-view model", "Multi-view model"}, true);
}

std::string render_report_kv(const LevelReports& r, const LabelScheme& scheme, const std::string& prefix) {
  std::ostringstream out;
  auto emit = [&](const std::string& target, const EvalReport& rep, LabelKind kind) {
    const std::string base = prefix + target + "." + eval_level_name(rep.level) + ".";
    out << base << "macro_f1=" << fmt(rep.scores.macro_f1, "%.17g") << '\n';
    out << base << "samples=" << rep.samples << '\n';
    const auto names = class_names(kind);
    for (size_t k = 0; k < names.size(); ++k) {
      out << base << "precision." << names[k] << '=' << fmt(rep.scores.precision[k], "%.17g") << '\n';
      out << base << "recall." << names[k] << '=' << fmt(rep.scores.recall[k], "%.17g") << '\n';
      out << base << "f1." << names[k] << '=' << fmt(rep.scores.f1[k], "%.17g") << '\n';
      out << base << "support." << names[k] << '=' << rep.scores.support[k] << '\n';
    }
  };
  const LabelKind dk = scheme.diagnosis_kind();
  emit("diagnosis", r.diagnosis_left, dk);
  emit("diagnosis", r.diagnosis_right, dk);
  emit("diagnosis", r.diagnosis_study, dk);
  emit("density", r.density_left, LabelKind::kDensity);
  emit("density", r.density_right, LabelKind::kDensity);
  emit("density", r.density_side, LabelKind::kDensity);
  out << prefix << "excluded_studies=" << r.excluded_studies << '\n';
  out << prefix << "one_sided_studies=" << r.one_sided_studies << '\n';
  return out.str();
}

}  // namespace mammo
