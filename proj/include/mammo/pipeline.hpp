#ifndef MAMMO_PIPELINE_HPP_
#define MAMMO_PIPELINE_HPP_

// Stage orchestration shared by the C API and the command-line tool: config
// files, splitting, per-view extractor training, feature extraction, the two
// classifier heads, evaluation, and the single-view vs multi-view comparison.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mammo/extractor.hpp"
#include "mammo/features.hpp"
#include "mammo/gbdt.hpp"
#include "mammo/ingestion.hpp"
#include "mammo/metrics.hpp"
#include "mammo/preprocess.hpp"
#include "mammo/stratify.hpp"
#include "mammo/synthgen.hpp"

namespace mammo {

struct PipelineConfig {
  LabelScheme scheme;
  int threads = 4;  // concurrent per-view jobs
  SynthConfig synth;
  PreprocessConfig preprocess;
  ExtractorConfig extractor;
  gbdt::GbdtConfig gbdt;
  SplitRatios ratios;
  uint64_t split_seed = 0;
  // Stage root when no --out is given.
  std::string workspace_dir = "workspace";
  // Input manifest; empty means <workspace>/manifest.csv.
  std::string manifest_path;
  // Report directory, relative to the workspace.
  std::string outputs_dir = "reports";

  // Throws Error(kConfig) naming the offending key.
  void validate() const;
  // Overrides every section's seed.
  void set_seed(uint64_t seed);
  void set_scheme(const LabelScheme& s);
};

// INI-style text: [pipeline] [paths] [synth] [preprocess] [extractor] [gbdt]
// [stratify] sections of key = value lines. Unknown sections or keys and
// malformed values are Error(kConfig). Missing keys keep their defaults.
PipelineConfig parse_pipeline_config(std::string_view text);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
std::string render_pipeline_config(const PipelineConfig& cfg);
// Sets one "section.key" field without validating the whole config.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

// Returns `manifest` with a stratified split column. Throws Error(kConfig)
// when a split column already exists and `force` is false.
Manifest assign_splits(const Manifest& manifest, const SplitRatios& ratios, uint64_t seed, bool force);

// Per-split, per-class study counts for diagnosis and density (by breast).
std::string render_split_summary(const Manifest& manifest);

// Loads the image for a manifest row.
using ImageSource = std::function<GrayImage(size_t row)>;
ImageSource disk_images(const Manifest& manifest);

// The preprocessed images of one view, in manifest row order.
struct ViewData {
  ViewId view{};
  std::vector<size_t> rows;
  std::vector<StatTensor> stats;
  int degenerate = 0;  // crops with constant intensity
};

ViewData prepare_view(const Manifest& manifest, ViewId view, const ImageSource& images,
                      const PreprocessConfig& pre, const ExtractorConfig& ext);

// Trains on split=train, validates on split=val. Throws Error(kConfig) when
// the manifest has no split column.
TrainedExtractor train_view_extractor(const Manifest& manifest, const ViewData& data,
                                      const ExtractorConfig& cfg);

// One row per image of the view, all splits, manifest order.
FeatureMatrix extract_view_features(const ExtractorModel& model, const Manifest& manifest,
                                    const ViewData& data);

struct HeadModels {
  gbdt::TrainResult diagnosis;
  gbdt::TrainResult density;
};

// Trains the diagnosis and density forests on the table's split=train rows
// with early stopping on split=val rows.
HeadModels train_heads(const FeatureMatrix& table, const Manifest& manifest, const gbdt::GbdtConfig& cfg);

// Predicts every row of `table` belonging to `split` and evaluates at the
// left/right/study and side levels. Per-image tables are reduced to breasts by
// ordinal max first.
LevelReports evaluate_table(const FeatureMatrix& table, const gbdt::Forest& diagnosis,
                            const gbdt::Forest& density, const Manifest& manifest, Split split = Split::kTest);

std::string render_gbdt_log_csv(const gbdt::TrainResult& result);

struct ComparisonReport {
  LabelScheme scheme;
  LevelReports single_view;
  LevelReports multi_view;

  double study_delta() const {
    return multi_view.diagnosis_study.scores.macro_f1 - single_view.diagnosis_study.scores.macro_f1;
  }
  double side_delta() const {
    return multi_view.density_side.scores.macro_f1 - single_view.density_side.scores.macro_f1;
  }
};

std::string render_comparison_kv(const ComparisonReport& report);

struct PipelineArtifacts {
  std::array<TrainedExtractor, 4> extractors;   // by ViewId::slot()
  std::array<FeatureMatrix, 4> features;
  FeatureMatrix fused;
  FeatureMatrix single;
  int incomplete_sides = 0;
  HeadModels fused_heads;
  HeadModels single_heads;
  ComparisonReport report;
};

using ProgressFn = std::function<void(const std::string&)>;

// Runs both pipelines on the same split. When `out_dir` is set every
// intermediate artifact is written below it.
PipelineArtifacts run_pipeline(const PipelineConfig& cfg, const Manifest& manifest, const ImageSource& images,
                               const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                               const ProgressFn& progress = {});

}  // namespace mammo

#endif  // MAMMO_PIPELINE_HPP_
