#include "mammo/pipeline.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "binary_io.hpp"
#include "mammo/error.hpp"
#include "mammo/fusion.hpp"

namespace mammo {
namespace fs = std::filesystem;

// Config ---------------------------------------------------------------------

void PipelineConfig::validate() const {
  if (threads < 1) fail(ErrorCode::kConfig, "pipeline.threads must be >= 1");
  if (workspace_dir.empty()) fail(ErrorCode::kConfig, "paths.workspace must not be empty");
  if (outputs_dir.empty() || fs::path(outputs_dir).is_absolute()) {
    fail(ErrorCode::kConfig, "paths.outputs must be a relative directory name");
  }
  synth.validate();
  preprocess.validate();
  extractor.validate();
  gbdt.validate();
  ratios.validate();
}

void PipelineConfig::set_seed(uint64_t seed) {
  synth.seed = seed;
  extractor.seed = seed;
  gbdt.seed = seed;
  split_seed = seed;
}

void PipelineConfig::set_scheme(const LabelScheme& s) {
  scheme = s;
  synth.scheme = s;
}

namespace {

using boost::property_tree::ptree;

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last) {
    fail(ErrorCode::kConfig, "config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

struct Binder {
  std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters;

  template <typename T>
  void bind(const std::string& key, T& field) {
    setters[key] = [&field](const std::string& k, const std::string& v) { field = parse_number<T>(k, v); };
  }
};

Binder binder_for(PipelineConfig& c) {
  Binder b;
  b.setters["pipeline.scheme"] = [&c](const std::string&, const std::string& v) { c.set_scheme(parse_scheme(v)); };
  b.bind("pipeline.threads", c.threads);
  b.setters["paths.workspace"] = [&c](const std::string&, const std::string& v) { c.workspace_dir = v; };
  b.setters["paths.manifest"] = [&c](const std::string&, const std::string& v) { c.manifest_path = v; };
  b.setters["paths.outputs"] = [&c](const std::string&, const std::string& v) { c.outputs_dir = v; };

  b.bind("synth.n_train", c.synth.n_train);
  b.bind("synth.n_val", c.synth.n_val);
  b.bind("synth.n_test", c.synth.n_test);
  b.bind("synth.height", c.synth.height);
  b.bind("synth.width", c.synth.width);
  b.bind("synth.p_vis", c.synth.p_vis);
  b.bind("synth.noise_sigma", c.synth.noise_sigma);
  b.bind("synth.seed", c.synth.seed);

  b.bind("preprocess.target_height", c.preprocess.target_height);
  b.bind("preprocess.target_width", c.preprocess.target_width);
  b.bind("preprocess.pad_fraction", c.preprocess.pad_fraction);

  b.bind("extractor.grid_h", c.extractor.grid_h);
  b.bind("extractor.grid_w", c.extractor.grid_w);
  b.bind("extractor.channels", c.extractor.channels);
  b.bind("extractor.lr_max", c.extractor.lr_max);
  b.bind("extractor.lr_min", c.extractor.lr_min);
  b.bind("extractor.momentum", c.extractor.momentum);
  b.bind("extractor.epochs", c.extractor.epochs);
  b.bind("extractor.patience", c.extractor.patience);
  b.bind("extractor.batch_size", c.extractor.batch_size);
  b.bind("extractor.seed", c.extractor.seed);

  b.bind("gbdt.n_rounds", c.gbdt.n_rounds);
  b.bind("gbdt.learning_rate", c.gbdt.learning_rate);
  b.bind("gbdt.max_leaves", c.gbdt.max_leaves);
  b.bind("gbdt.min_samples_leaf", c.gbdt.min_samples_leaf);
  b.bind("gbdt.lambda", c.gbdt.lambda);
  b.bind("gbdt.gamma", c.gbdt.gamma);
  b.bind("gbdt.max_bins", c.gbdt.max_bins);
  b.bind("gbdt.early_stop_rounds", c.gbdt.early_stop_rounds);
  b.bind("gbdt.seed", c.gbdt.seed);

  b.bind("stratify.train", c.ratios.train);
  b.bind("stratify.val", c.ratios.val);
  b.bind("stratify.test", c.ratios.test);
  b.bind("stratify.seed", c.split_seed);
  return b;
}

std::string fmt(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

PipelineConfig parse_pipeline_config(std::string_view text) {
  ptree tree;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorCode::kConfig, std::string("config syntax error: ") + e.message() + " (line " +
                                 std::to_string(e.line()) + ")");
  }
  PipelineConfig cfg;
  Binder b = binder_for(cfg);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      fail(ErrorCode::kConfig, "config key '" + section + "' is outside any section");
    }
    for (const auto& [key, value] : body) {
      const std::string full = section + "." + key;
      const auto it = b.setters.find(full);
      if (it == b.setters.end()) fail(ErrorCode::kConfig, "unknown config key '" + full + "'");
      it->second(full, value.get_value<std::string>());
    }
  }
  cfg.validate();
  return cfg;
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  Binder b = binder_for(cfg);
  const auto it = b.setters.find(key);
  if (it == b.setters.end()) fail(ErrorCode::kConfig, "unknown config key '" + key + "'");
  it->second(key, value);
}

PipelineConfig load_pipeline_config(const fs::path& path) {
  return parse_pipeline_config(binio::read_file(path));
}

std::string render_pipeline_config(const PipelineConfig& c) {
  std::ostringstream o;
  o << "[pipeline]\nscheme = " << scheme_name(c.scheme) << "\nthreads = " << c.threads << "\n\n";
  o << "[paths]\nworkspace = " << c.workspace_dir << "\nmanifest = " << c.manifest_path
    << "\noutputs = " << c.outputs_dir << "\n\n";
  o << "[synth]\nn_train = " << c.synth.n_train << "\nn_val = " << c.synth.n_val
    << "\nn_test = " << c.synth.n_test << "\nheight = " << c.synth.height << "\nwidth = " << c.synth.width
    << "\np_vis = " << fmt(c.synth.p_vis) << "\nnoise_sigma = " << fmt(c.synth.noise_sigma)
    << "\nseed = " << c.synth.seed << "\n\n";
  o << "[preprocess]\ntarget_height = " << c.preprocess.target_height
    << "\ntarget_width = " << c.preprocess.target_width << "\npad_fraction = " << fmt(c.preprocess.pad_fraction)
    << "\n\n";
  const ExtractorConfig& e = c.extractor;
  o << "[extractor]\ngrid_h = " << e.grid_h << "\ngrid_w = " << e.grid_w << "\nchannels = " << e.channels
    << "\nlr_max = " << fmt(e.lr_max) << "\nlr_min = " << fmt(e.lr_min) << "\nmomentum = " << fmt(e.momentum)
    << "\nepochs = " << e.epochs << "\npatience = " << e.patience << "\nbatch_size = " << e.batch_size
    << "\nseed = " << e.seed << "\n\n";
  const gbdt::GbdtConfig& g = c.gbdt;
  o << "[gbdt]\nn_rounds = " << g.n_rounds << "\nlearning_rate = " << fmt(g.learning_rate)
    << "\nmax_leaves = " << g.max_leaves << "\nmin_samples_leaf = " << g.min_samples_leaf
    << "\nlambda = " << fmt(g.lambda) << "\ngamma = " << fmt(g.gamma) << "\nmax_bins = " << g.max_bins
    << "\nearly_stop_rounds = " << g.early_stop_rounds << "\nseed = " << g.seed << "\n\n";
  o << "[stratify]\ntrain = " << fmt(c.ratios.train) << "\nval = " << fmt(c.ratios.val)
    << "\ntest = " << fmt(c.ratios.test) << "\nseed = " << c.split_seed << "\n";
  return o.str();
}

// Splitting ------------------------------------------------------------------

Manifest assign_splits(const Manifest& manifest, const SplitRatios& ratios, uint64_t seed, bool force) {
  if (manifest.split_column_present && !force) {
    fail(ErrorCode::kConfig, "manifest already has a split column (use --force to replace it)");
  }
  ratios.validate();
  const std::vector<StudyRecord> studies = manifest.studies();
  std::vector<std::vector<int>> labelsets;
  labelsets.reserve(studies.size());
  for (const StudyRecord& s : studies) labelsets.push_back(study_labelset(s, manifest.scheme));
  const std::vector<Split> splits =
      stratified_split(labelsets, indicator_count(manifest.scheme), ratios, seed);
  std::unordered_map<std::string, Split> by_study;
  for (size_t i = 0; i < studies.size(); ++i) by_study.emplace(studies[i].study_id, splits[i]);
  Manifest out = manifest;
  out.split_column_present = true;
  for (ImageRecord& row : out.rows) row.split = by_study.at(row.study_id);
  return out;
}

std::string render_split_summary(const Manifest& manifest) {
  const std::vector<StudyRecord> studies = manifest.studies();
  const int kd = manifest.scheme.diagnosis_classes();
  std::array<int, 3> n_studies{};
  std::array<std::vector<int>, 3> diag, dens;
  for (int s = 0; s < 3; ++s) {
    diag[static_cast<size_t>(s)].assign(static_cast<size_t>(kd), 0);
    dens[static_cast<size_t>(s)].assign(kDensityClasses, 0);
  }
  for (const StudyRecord& st : studies) {
    const auto sp = st.split();
    if (!sp) continue;
    const auto si = static_cast<size_t>(*sp);
    ++n_studies[si];
    for (Laterality lat : {Laterality::kLeft, Laterality::kRight}) {
      if (auto d = st.side_diagnosis(lat)) ++diag[si][static_cast<size_t>(d->index())];
      if (auto d = st.side_density(lat)) ++dens[si][static_cast<size_t>(d->index())];
    }
  }
  std::ostringstream o;
  char line[128];
  std::snprintf(line, sizeof(line), "%-14s %8s %8s %8s\n", "", "train", "val", "test");
  o << line;
  std::snprintf(line, sizeof(line), "%-14s %8d %8d %8d\n", "studies", n_studies[0], n_studies[1], n_studies[2]);
  o << line;
  const LabelKind dk = manifest.scheme.diagnosis_kind();
  for (int k = 0; k < kd; ++k) {
    const std::string name = "diagnosis " + render_label(OrdinalLabel(dk, k));
    std::snprintf(line, sizeof(line), "%-14s %8d %8d %8d\n", name.c_str(), diag[0][static_cast<size_t>(k)],
                  diag[1][static_cast<size_t>(k)], diag[2][static_cast<size_t>(k)]);
    o << line;
  }
  for (int k = 0; k < kDensityClasses; ++k) {
    const std::string name = "density " + render_label(OrdinalLabel(LabelKind::kDensity, k));
    std::snprintf(line, sizeof(line), "%-14s %8d %8d %8d\n", name.c_str(), dens[0][static_cast<size_t>(k)],
                  dens[1][static_cast<size_t>(k)], dens[2][static_cast<size_t>(k)]);
    o << line;
  }
  return o.str();
}

// Images and extractors --------------------------------------------------------

ImageSource disk_images(const Manifest& manifest) {
  return [&manifest](size_t row) { return load_image(manifest.resolve(manifest.rows[row])); };
}

ViewData prepare_view(const Manifest& manifest, ViewId view, const ImageSource& images,
                      const PreprocessConfig& pre, const ExtractorConfig& ext) {
  ViewData data;
  data.view = view;
  for (size_t r = 0; r < manifest.rows.size(); ++r) {
    const ImageRecord& row = manifest.rows[r];
    if (row.view != view) continue;
    std::optional<BoundingBox> roi;
    if (row.roi) roi = BoundingBox{row.roi->x0, row.roi->y0, row.roi->x1, row.roi->y1};
    const PreprocessResult res = preprocess_image(images(r), pre, roi);
    if (res.degenerate_intensity) ++data.degenerate;
    data.rows.push_back(r);
    data.stats.push_back(cell_statistics(res.raster, ext.grid_h, ext.grid_w));
  }
  return data;
}

namespace {

Split require_split(const ImageRecord& row) {
  if (!row.split) {
    fail(ErrorCode::kConfig, "image " + row.study_id + " " + view_id_name(row.view) +
                                 " has no split; run the split command first");
  }
  return *row.split;
}

std::unordered_map<std::string, Split> study_splits(const Manifest& manifest) {
  std::unordered_map<std::string, Split> out;
  for (const ImageRecord& row : manifest.rows) out.emplace(row.study_id, require_split(row));
  return out;
}

}  // namespace

TrainedExtractor train_view_extractor(const Manifest& manifest, const ViewData& data, const ExtractorConfig& cfg) {
  std::vector<ExtractorSample> train, val;
  for (size_t i = 0; i < data.rows.size(); ++i) {
    const ImageRecord& row = manifest.rows[data.rows[i]];
    const Split split = require_split(row);
    ExtractorSample s{data.stats[i], row.diagnosis.index(), row.density.index()};
    if (split == Split::kTrain) train.push_back(std::move(s));
    else if (split == Split::kVal) val.push_back(std::move(s));
  }
  if (train.empty()) {
    fail(ErrorCode::kTrainingRefused, "no training images for view " + view_id_name(data.view));
  }
  return train_extractor(train, val, cfg, data.view, manifest.scheme.diagnosis_classes());
}

FeatureMatrix extract_view_features(const ExtractorModel& model, const Manifest& manifest, const ViewData& data) {
  if (model.view != data.view) {
    fail(ErrorCode::kIntegrity, "the " + view_id_name(model.view) + " extractor was given " +
                                    view_id_name(data.view) + " images");
  }
  FeatureMatrix m;
  m.channels = model.channels();
  m.scheme = manifest.scheme;
  std::vector<float> row(static_cast<size_t>(m.channels));
  for (size_t i = 0; i < data.rows.size(); ++i) {
    const ImageRecord& rec = manifest.rows[data.rows[i]];
    const ForwardResult r = forward(model, data.stats[i]);
    for (size_t c = 0; c < row.size(); ++c) row[c] = static_cast<float>(r.feature[c]);
    const uint8_t mask = rec.view.view == ViewKind::kCC ? kViewMaskCC : kViewMaskMLO;
    m.append(row, FeatureSource{rec.study_id, rec.view.laterality, static_cast<FeatureView>(rec.view.view), mask},
             rec.diagnosis.index(), rec.density.index());
  }
  return m;
}

// Classifier heads ---------------------------------------------------------------

namespace {

struct Subset {
  std::vector<double> x;
  std::vector<int> diagnosis;
  std::vector<int> density;
  size_t rows = 0;
};

void add_row(Subset& s, const FeatureMatrix& table, size_t r) {
  const auto v = table.row(r);
  s.x.insert(s.x.end(), v.begin(), v.end());
  s.diagnosis.push_back(table.diagnosis[r]);
  s.density.push_back(table.density[r]);
  ++s.rows;
}

gbdt::Matrix view_of(const Subset& s, int channels) {
  return gbdt::Matrix{s.x, s.rows, static_cast<size_t>(channels)};
}

}  // namespace

HeadModels train_heads(const FeatureMatrix& table, const Manifest& manifest, const gbdt::GbdtConfig& cfg) {
  const auto splits = study_splits(manifest);
  Subset train, val;
  for (size_t r = 0; r < table.rows(); ++r) {
    const auto it = splits.find(table.sources[r].study_id);
    if (it == splits.end()) {
      fail(ErrorCode::kIntegrity, "feature row for unknown study " + table.sources[r].study_id);
    }
    if (it->second == Split::kTrain) add_row(train, table, r);
    else if (it->second == Split::kVal) add_row(val, table, r);
  }
  if (train.rows == 0) fail(ErrorCode::kTrainingRefused, "feature table has no training rows");
  const gbdt::Matrix xt = view_of(train, table.channels);
  const gbdt::Matrix xv = view_of(val, table.channels);
  std::optional<gbdt::Validation> vd, vn;
  if (val.rows > 0) {
    vd = gbdt::Validation{xv, val.diagnosis};
    vn = gbdt::Validation{xv, val.density};
  }
  HeadModels out;
  out.diagnosis = gbdt::train(xt, train.diagnosis, table.scheme.diagnosis_classes(), cfg, vd);
  out.density = gbdt::train(xt, train.density, kDensityClasses, cfg, vn);
  return out;
}

LevelReports evaluate_table(const FeatureMatrix& table, const gbdt::Forest& diagnosis, const gbdt::Forest& density,
                            const Manifest& manifest, Split split) {
  const auto splits = study_splits(manifest);
  std::vector<std::string> study_ids;
  for (const StudyRecord& st : manifest.studies()) {
    if (splits.at(st.study_id) == split) study_ids.push_back(st.study_id);
  }
  std::vector<SidePrediction> sides;
  std::vector<ImagePrediction> images;
  std::vector<double> x(static_cast<size_t>(table.channels));
  for (size_t r = 0; r < table.rows(); ++r) {
    const FeatureSource& src = table.sources[r];
    const auto it = splits.find(src.study_id);
    if (it == splits.end()) fail(ErrorCode::kIntegrity, "feature row for unknown study " + src.study_id);
    if (it->second != split) continue;
    const auto v = table.row(r);
    std::copy(v.begin(), v.end(), x.begin());
    const int pd = diagnosis.predict(x);
    const int pn = density.predict(x);
    if (src.view == FeatureView::kFused) {
      sides.push_back({src.study_id, src.laterality, pd, table.diagnosis[r], pn, table.density[r]});
    } else {
      images.push_back({src.study_id, ViewId{src.laterality, static_cast<ViewKind>(src.view)}, pd,
                        table.diagnosis[r], pn, table.density[r]});
    }
  }
  if (!images.empty()) {
    if (!sides.empty()) fail(ErrorCode::kIntegrity, "table mixes fused and per-image rows");
    sides = aggregate_image_predictions(images);
  }
  return evaluate_levels(sides, study_ids, manifest.scheme);
}

std::string render_gbdt_log_csv(const gbdt::TrainResult& result) {
  std::ostringstream o;
  o << "round,train_loss,val_loss\n";
  for (const gbdt::RoundLog& r : result.log) {
    o << r.round << "," << fmt(r.train_loss) << ",";
    if (r.val_loss) o << fmt(*r.val_loss);
    o << "\n";
  }
  o << "# best_round=" << result.best_round << "\n";
  return o.str();
}

std::string render_comparison_kv(const ComparisonReport& report) {
  std::string out = render_report_kv(report.single_view, report.scheme, "single.");
  out += render_report_kv(report.multi_view, report.scheme, "multi.");
  const auto delta = [](const EvalReport& m, const EvalReport& s) { return m.scores.macro_f1 - s.scores.macro_f1; };
  const LevelReports& m = report.multi_view;
  const LevelReports& s = report.single_view;
  out += "delta.diagnosis.left.macro_f1=" + fmt(delta(m.diagnosis_left, s.diagnosis_left)) + "\n";
  out += "delta.diagnosis.right.macro_f1=" + fmt(delta(m.diagnosis_right, s.diagnosis_right)) + "\n";
  out += "delta.diagnosis.study.macro_f1=" + fmt(delta(m.diagnosis_study, s.diagnosis_study)) + "\n";
  out += "delta.density.left.macro_f1=" + fmt(delta(m.density_left, s.density_left)) + "\n";
  out += "delta.density.right.macro_f1=" + fmt(delta(m.density_right, s.density_right)) + "\n";
  out += "delta.density.side.macro_f1=" + fmt(delta(m.density_side, s.density_side)) + "\n";
  return out;
}

// End to end ---------------------------------------------------------------------

PipelineArtifacts run_pipeline(const PipelineConfig& cfg, const Manifest& input, const ImageSource& images,
                               const std::optional<fs::path>& out_dir, const ProgressFn& progress) {
  cfg.validate();
  const auto note = [&](const std::string& msg) {
    if (progress) progress(msg);
  };
  if (input.scheme.mode != cfg.scheme.mode) {
    fail(ErrorCode::kConfig, "manifest scheme differs from pipeline.scheme");
  }
  Manifest manifest = input;
  if (!manifest.split_column_present) {
    note("no split column; stratifying");
    manifest = assign_splits(manifest, cfg.ratios, cfg.split_seed, false);
  }
  if (out_dir) {
    for (const char* sub : {"models", "logs", "features"}) fs::create_directories(*out_dir / sub);
    fs::create_directories(*out_dir / cfg.outputs_dir);
  }

  PipelineArtifacts art;
  // Per-view jobs: preprocess, train, extract. Batches of cfg.threads.
  const auto job = [&](ViewId view) {
    const ViewData data = prepare_view(manifest, view, images, cfg.preprocess, cfg.extractor);
    TrainedExtractor trained = train_view_extractor(manifest, data, cfg.extractor);
    FeatureMatrix features = extract_view_features(trained.model, manifest, data);
    return std::make_pair(std::move(trained), std::move(features));
  };
  for (size_t start = 0; start < kAllViews.size(); start += static_cast<size_t>(cfg.threads)) {
    std::vector<std::pair<ViewId, std::future<std::pair<TrainedExtractor, FeatureMatrix>>>> running;
    for (size_t i = start; i < std::min(kAllViews.size(), start + static_cast<size_t>(cfg.threads)); ++i) {
      running.emplace_back(kAllViews[i], std::async(std::launch::async, job, kAllViews[i]));
    }
    for (auto& [view, fut] : running) {
      auto [trained, features] = fut.get();
      note("extractor " + view_id_name(view) + ": best epoch " + std::to_string(trained.log.best_epoch) + " of " +
           std::to_string(trained.log.epochs.size()));
      const auto slot = static_cast<size_t>(view.slot());
      art.extractors[slot] = std::move(trained);
      art.features[slot] = std::move(features);
    }
  }

  FusedTable fused = build_training_table(art.features, manifest);
  art.fused = std::move(fused.matrix);
  art.incomplete_sides = fused.incomplete_sides;
  art.single = build_single_view_table(art.features, manifest);

  auto fused_heads = std::async(std::launch::async, [&] { return train_heads(art.fused, manifest, cfg.gbdt); });
  art.single_heads = train_heads(art.single, manifest, cfg.gbdt);
  art.fused_heads = fused_heads.get();
  note("classifiers trained");

  art.report.scheme = manifest.scheme;
  art.report.single_view = evaluate_table(art.single, art.single_heads.diagnosis.forest,
                                          art.single_heads.density.forest, manifest);
  art.report.multi_view = evaluate_table(art.fused, art.fused_heads.diagnosis.forest,
                                         art.fused_heads.density.forest, manifest);

  if (out_dir) {
    const fs::path& out = *out_dir;
    for (const ViewId& view : kAllViews) {
      const auto slot = static_cast<size_t>(view.slot());
      const std::string name = view_id_name(view);
      save_extractor(out / "models" / ("extractor_" + name + ".bin"), art.extractors[slot].model);
      binio::write_file(out / "logs" / ("extractor_" + name + ".csv"), render_train_log_csv(art.extractors[slot].log));
      save_features(out / "features" / (name + ".mfv"), art.features[slot]);
    }
    save_features(out / "features" / "fused.mfv", art.fused);
    save_features(out / "features" / "single.mfv", art.single);
    const std::pair<const char*, const HeadModels*> heads[] = {{"fused", &art.fused_heads},
                                                               {"single", &art.single_heads}};
    for (const auto& [table, h] : heads) {
      const std::string base = std::string("gbdt_") + table;
      gbdt::save_forest(out / "models" / (base + "_diagnosis.json"), h->diagnosis.forest);
      gbdt::save_forest(out / "models" / (base + "_density.json"), h->density.forest);
      binio::write_file(out / "logs" / (base + "_diagnosis.csv"), render_gbdt_log_csv(h->diagnosis));
      binio::write_file(out / "logs" / (base + "_density.csv"), render_gbdt_log_csv(h->density));
    }
    const fs::path reports = out / cfg.outputs_dir;
    binio::write_file(reports / "comparison.txt",
                      render_comparison_table(art.report.single_view, art.report.multi_view, manifest.scheme));
    binio::write_file(reports / "comparison.kv", render_comparison_kv(art.report));
    binio::write_file(reports / "single_view.txt", render_report_table(art.report.single_view, manifest.scheme));
    binio::write_file(reports / "multi_view.txt", render_report_table(art.report.multi_view, manifest.scheme));
    binio::write_file(out / "config.ini", render_pipeline_config(cfg));
  }
  return art;
}

}  // namespace mammo
