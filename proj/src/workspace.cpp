#include "mammo/workspace.hpp"

#include <future>
#include <optional>
#include <utility>

#include "binary_io.hpp"
#include "mammo/error.hpp"
#include "mammo/fusion.hpp"

namespace mammo::workspace {

namespace {

constexpr std::string_view kTables[] = {"fused", "single"};
constexpr std::string_view kHeads[] = {"diagnosis", "density"};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
}

std::string report_name(std::string_view table) { return table == "fused" ? "multi_view" : "single_view"; }

// Runs `job` for each view, at most cfg.threads at a time, in view order.
template <typename Job>
auto for_views(const PipelineConfig& cfg, const std::vector<ViewId>& views, Job job) {
  using Result = decltype(job(views.front()));
  std::vector<Result> out;
  const auto batch = static_cast<size_t>(cfg.threads);
  for (size_t start = 0; start < views.size(); start += batch) {
    std::vector<std::future<Result>> running;
    for (size_t i = start; i < std::min(views.size(), start + batch); ++i) {
      running.push_back(std::async(std::launch::async, job, views[i]));
    }
    for (auto& f : running) out.push_back(f.get());
  }
  return out;
}

}  // namespace

fs::path manifest_file(const fs::path& root) { return root / "manifest.csv"; }

fs::path extractor_file(const fs::path& root, const ViewId& view) {
  return root / "models" / ("extractor_" + view_id_name(view) + ".bin");
}

fs::path extractor_log_file(const fs::path& root, const ViewId& view) {
  return root / "logs" / ("extractor_" + view_id_name(view) + ".csv");
}

fs::path view_features_file(const fs::path& root, const ViewId& view) {
  return root / "features" / (view_id_name(view) + ".mfv");
}

fs::path table_file(const fs::path& root, std::string_view table) {
  return root / "features" / (std::string(table) + ".mfv");
}

fs::path forest_file(const fs::path& root, std::string_view table, std::string_view head) {
  return root / "models" / ("gbdt_" + std::string(table) + "_" + std::string(head) + ".json");
}

std::vector<ViewId> parse_view_selector(std::string_view text) {
  if (text == "all") return {kAllViews.begin(), kAllViews.end()};
  const auto view = parse_view_id(text);
  if (!view) fail(ErrorCode::kConfig, "unknown view '" + std::string(text) + "' (expected L-CC, R-CC, L-MLO, R-MLO or all)");
  return {*view};
}

Manifest load_input_manifest(const PipelineConfig& cfg, const fs::path& root) {
  const fs::path path = cfg.manifest_path.empty() ? manifest_file(root) : fs::path(cfg.manifest_path);
  if (!fs::exists(path)) fail(ErrorCode::kIo, "manifest '" + path.string() + "' not found");
  return load_manifest(path, cfg.scheme);
}

Manifest synth(const PipelineConfig& cfg, const fs::path& root) {
  ensure_dir(root);
  return generate_dataset(cfg.synth, root);
}

std::string split(const PipelineConfig& cfg, const fs::path& root, bool force) {
  Manifest manifest = assign_splits(load_input_manifest(cfg, root), cfg.ratios, cfg.split_seed, force);
  ensure_dir(root);
  const fs::path target = manifest_file(root);
  if (!manifest.base_dir.empty() && fs::weakly_canonical(manifest.base_dir) != fs::weakly_canonical(root)) {
    for (ImageRecord& row : manifest.rows) {
      row.image_path = fs::proximate(fs::absolute(manifest.resolve(row)), fs::absolute(root)).generic_string();
    }
    manifest.base_dir = root;
  }
  save_manifest(target, manifest);
  return render_split_summary(manifest);
}

std::string train_extractors(const PipelineConfig& cfg, const fs::path& root, const std::vector<ViewId>& views) {
  const Manifest manifest = load_input_manifest(cfg, root);
  const ImageSource images = disk_images(manifest);
  ensure_dir(root / "models");
  ensure_dir(root / "logs");
  const auto results = for_views(cfg, views, [&](ViewId view) {
    const ViewData data = prepare_view(manifest, view, images, cfg.preprocess, cfg.extractor);
    return train_view_extractor(manifest, data, cfg.extractor);
  });
  std::string summary;
  for (size_t i = 0; i < views.size(); ++i) {
    save_extractor(extractor_file(root, views[i]), results[i].model);
    binio::write_file(extractor_log_file(root, views[i]), render_train_log_csv(results[i].log));
    summary += view_id_name(views[i]) + " best_epoch=" + std::to_string(results[i].log.best_epoch) +
               " epochs=" + std::to_string(results[i].log.epochs.size()) + "\n";
  }
  return summary;
}

void extract(const PipelineConfig& cfg, const fs::path& root, const std::vector<ViewId>& views) {
  const Manifest manifest = load_input_manifest(cfg, root);
  const ImageSource images = disk_images(manifest);
  ensure_dir(root / "features");
  const auto matrices = for_views(cfg, views, [&](ViewId view) {
    const ExtractorModel model = load_extractor(extractor_file(root, view));
    const ViewData data = prepare_view(manifest, view, images, cfg.preprocess, model.config);
    return extract_view_features(model, manifest, data);
  });
  for (size_t i = 0; i < views.size(); ++i) save_features(view_features_file(root, views[i]), matrices[i]);
}

FuseSummary fuse(const PipelineConfig& cfg, const fs::path& root) {
  const Manifest manifest = load_input_manifest(cfg, root);
  std::vector<FeatureMatrix> per_view;
  for (const ViewId& view : kAllViews) {
    const fs::path path = view_features_file(root, view);
    if (fs::exists(path)) per_view.push_back(load_features(path));
  }
  if (per_view.empty()) fail(ErrorCode::kIo, "no per-view feature files under '" + (root / "features").string() + "'");
  const FusedTable fused = build_training_table(per_view, manifest);
  const FeatureMatrix single = build_single_view_table(per_view, manifest);
  save_features(table_file(root, "fused"), fused.matrix);
  save_features(table_file(root, "single"), single);
  return {fused.matrix.rows(), single.rows(), fused.incomplete_sides};
}

void train_gbdt(const PipelineConfig& cfg, const fs::path& root) {
  const Manifest manifest = load_input_manifest(cfg, root);
  ensure_dir(root / "models");
  ensure_dir(root / "logs");
  bool any = false;
  for (std::string_view table : kTables) {
    const fs::path path = table_file(root, table);
    if (!fs::exists(path)) continue;
    any = true;
    const HeadModels heads = train_heads(load_features(path), manifest, cfg.gbdt);
    const gbdt::TrainResult* results[] = {&heads.diagnosis, &heads.density};
    for (size_t h = 0; h < 2; ++h) {
      gbdt::save_forest(forest_file(root, table, kHeads[h]), results[h]->forest);
      binio::write_file(root / "logs" / ("gbdt_" + std::string(table) + "_" + std::string(kHeads[h]) + ".csv"),
                        render_gbdt_log_csv(*results[h]));
    }
  }
  if (!any) fail(ErrorCode::kIo, "no fused or single feature table under '" + (root / "features").string() + "'");
}

std::string evaluate(const PipelineConfig& cfg, const fs::path& root) {
  const Manifest manifest = load_input_manifest(cfg, root);
  const fs::path out = root / cfg.outputs_dir;
  ensure_dir(out);
  std::optional<LevelReports> reports[2];
  for (size_t t = 0; t < 2; ++t) {
    const std::string_view table = kTables[t];
    if (!fs::exists(table_file(root, table)) || !fs::exists(forest_file(root, table, "diagnosis"))) continue;
    const FeatureMatrix features = load_features(table_file(root, table));
    const gbdt::Forest diagnosis = gbdt::load_forest(forest_file(root, table, "diagnosis"));
    const gbdt::Forest density = gbdt::load_forest(forest_file(root, table, "density"));
    reports[t] = evaluate_table(features, diagnosis, density, manifest);
    binio::write_file(out / (report_name(table) + ".txt"), render_report_table(*reports[t], manifest.scheme));
  }
  if (reports[0] && reports[1]) {
    const ComparisonReport cmp{manifest.scheme, *reports[1], *reports[0]};
    const std::string table = render_comparison_table(cmp.single_view, cmp.multi_view, manifest.scheme);
    binio::write_file(out / "comparison.txt", table);
    binio::write_file(out / "comparison.kv", render_comparison_kv(cmp));
    return table;
  }
  if (reports[0]) return render_report_table(*reports[0], manifest.scheme);
  if (reports[1]) return render_report_table(*reports[1], manifest.scheme);
  fail(ErrorCode::kIo, "no trained feature table under '" + root.string() + "'");
}

ComparisonReport pipeline(const PipelineConfig& cfg, const fs::path& root, bool synthesize) {
  const Manifest manifest = synthesize ? synth(cfg, root) : load_input_manifest(cfg, root);
  return run_pipeline(cfg, manifest, disk_images(manifest), root).report;
}

}  // namespace mammo::workspace
