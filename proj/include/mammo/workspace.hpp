#ifndef MAMMO_WORKSPACE_HPP_
#define MAMMO_WORKSPACE_HPP_

// File-based stages over a workspace directory. Layout below `root`:
//   manifest.csv, images/, truth.json       synth
//   models/extractor_<view>.bin             train-extractor
//   logs/extractor_<view>.csv
//   features/<view>.mfv                     extract
//   features/fused.mfv, features/single.mfv fuse
//   models/gbdt_<table>_<head>.json         train-gbdt (table fused|single,
//   logs/gbdt_<table>_<head>.csv             head diagnosis|density)
//   reports/multi_view.txt, single_view.txt evaluate (reports/ is
//   reports/comparison.txt, comparison.kv    paths.outputs)
//   config.ini                              pipeline

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mammo/pipeline.hpp"

namespace mammo::workspace {

namespace fs = std::filesystem;

fs::path manifest_file(const fs::path& root);
fs::path extractor_file(const fs::path& root, const ViewId& view);
fs::path extractor_log_file(const fs::path& root, const ViewId& view);
fs::path view_features_file(const fs::path& root, const ViewId& view);
fs::path table_file(const fs::path& root, std::string_view table);
fs::path forest_file(const fs::path& root, std::string_view table, std::string_view head);

// "L-CC", "R-CC", "L-MLO", "R-MLO" or "all". Throws Error(kConfig).
std::vector<ViewId> parse_view_selector(std::string_view text);

// cfg.manifest_path when set, otherwise the workspace manifest.
Manifest load_input_manifest(const PipelineConfig& cfg, const fs::path& root);

// Generates the synthetic dataset under `root`.
Manifest synth(const PipelineConfig& cfg, const fs::path& root);

// Writes the split manifest to the workspace manifest and returns the
// per-split summary. Relative image paths are rewritten when the manifest
// moves to a different directory.
std::string split(const PipelineConfig& cfg, const fs::path& root, bool force);

// One line per view: "<view> best_epoch=<n> epochs=<m>".
std::string train_extractors(const PipelineConfig& cfg, const fs::path& root, const std::vector<ViewId>& views);

void extract(const PipelineConfig& cfg, const fs::path& root, const std::vector<ViewId>& views);

struct FuseSummary {
  size_t fused_rows = 0;
  size_t single_rows = 0;
  int incomplete_sides = 0;
};

// Uses every per-view feature file present.
FuseSummary fuse(const PipelineConfig& cfg, const fs::path& root);

// Trains both heads for every table present.
void train_gbdt(const PipelineConfig& cfg, const fs::path& root);

// Evaluates every table with trained heads on the test split. Returns the
// comparison table when both exist, otherwise the single report.
std::string evaluate(const PipelineConfig& cfg, const fs::path& root);

// Runs everything below `root`. With `synthesize` the dataset is generated
// into `root` first; otherwise the input manifest is used.
ComparisonReport pipeline(const PipelineConfig& cfg, const fs::path& root, bool synthesize);

}  // namespace mammo::workspace

#endif  // MAMMO_WORKSPACE_HPP_
