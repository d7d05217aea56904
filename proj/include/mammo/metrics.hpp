#ifndef MAMMO_METRICS_HPP_
#define MAMMO_METRICS_HPP_

#include <string>
#include <vector>

#include "mammo/labels.hpp"

namespace mammo {

// K x K counts; rows are truth, columns are prediction.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int classes);

  int classes() const { return k_; }
  long at(int truth, int pred) const { return counts_[static_cast<size_t>(truth * k_ + pred)]; }
  void add(int truth, int pred, long n = 1);
  long total() const;

 private:
  int k_;
  std::vector<long> counts_;
};

ConfusionMatrix confusion(const std::vector<int>& preds, const std::vector<int>& truth, int classes);

struct ClassScores {
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<long> support;
  // Mean over all K classes; zero-support classes contribute 0.
  double macro_f1 = 0.0;
};

// 0/0 in precision, recall or F1 is 0.
ClassScores f1_scores(const ConfusionMatrix& matrix);

// Convenience: macro-F1 of a prediction vector.
double macro_f1(const std::vector<int>& preds, const std::vector<int>& truth, int classes);

enum class EvalLevel { kLeft, kRight, kStudy, kSide };
const char* eval_level_name(EvalLevel level);

struct EvalReport {
  EvalLevel level = EvalLevel::kLeft;
  ClassScores scores;
  long samples = 0;
};

struct SidePrediction {
  std::string study_id;
  Laterality laterality = Laterality::kLeft;
  int pred_diagnosis = 0;
  int true_diagnosis = 0;
  int pred_density = 0;
  int true_density = 0;
};

struct ImagePrediction {
  std::string study_id;
  ViewId view{};
  int pred_diagnosis = 0;
  int true_diagnosis = 0;
  int pred_density = 0;
  int true_density = 0;
};

// Reduces per-image predictions to one prediction per breast: diagnosis and
// density predictions by ordinal max; truth diagnosis by ordinal max; truth
// density from CC when present, else MLO. Output order: first appearance of
// the study, left before right.
std::vector<SidePrediction> aggregate_image_predictions(const std::vector<ImagePrediction>& images);

struct LevelReports {
  EvalReport diagnosis_left, diagnosis_right, diagnosis_study;
  EvalReport density_left, density_right, density_side;
  int excluded_studies = 0;   // listed studies with no predicted side
  int one_sided_studies = 0;  // study label propagated from a single side
};

// Left/right: per laterality. Study: ordinal max of side predictions against
// ordinal max of side truths, one sample per listed study. Density side-level
// pools both lateralities.
LevelReports evaluate_levels(const std::vector<SidePrediction>& sides,
                             const std::vector<std::string>& study_ids,
                             const LabelScheme& scheme);

// Per-class rows plus a Macro-F1 row, columns Left/Right/Study (diagnosis)
// and Left/Right/Side (density).
std::string render_report_table(const LevelReports& reports, const LabelScheme& scheme);

// Same layout with single-view and multi-view column groups and deltas.
std::string render_comparison_table(const LevelReports& single_view, const LevelReports& multi_view,
                                    const LabelScheme& scheme);

// One "key=value" per line, e.g. diagnosis.study.macro_f1=0.5.
std::string render_report_kv(const LevelReports& reports, const LabelScheme& scheme,
                             const std::string& prefix = "");

}  // namespace mammo

#endif  // MAMMO_METRICS_HPP_
