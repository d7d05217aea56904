#include "mammo/mammo.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "mammo/error.hpp"
#include "mammo/extractor.hpp"
#include "mammo/gbdt.hpp"
#include "mammo/pipeline.hpp"
#include "mammo/workspace.hpp"

struct mammo_config {
  mammo::PipelineConfig cfg;
};

struct mammo_forest {
  mammo::gbdt::Forest forest;
};

struct mammo_extractor {
  mammo::ExtractorModel model;
};

namespace {

thread_local std::string last_error;

template <typename Fn>
mammo_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return MAMMO_OK;
  } catch (const mammo::Error& e) {
    last_error = e.what();
    return static_cast<mammo_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  }
  return MAMMO_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  if (p == nullptr) mammo::fail(mammo::ErrorCode::kConfig, std::string(what) + " is null");
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_string(char** out, const std::string& s) {
  if (out != nullptr) *out = copy_string(s);
}

}  // namespace

extern "C" {

const char* mammo_version(void) { return "1.0.0"; }

const char* mammo_last_error(void) { return last_error.c_str(); }

void mammo_string_free(char* s) { delete[] s; }

mammo_status mammo_config_default(mammo_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new mammo_config{};
  });
}

mammo_status mammo_config_load(const char* path, mammo_config** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new mammo_config{mammo::load_pipeline_config(path)};
  });
}

mammo_status mammo_config_parse(const char* text, mammo_config** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    *out = new mammo_config{mammo::parse_pipeline_config(text)};
  });
}

void mammo_config_free(mammo_config* cfg) { delete cfg; }

mammo_status mammo_config_set_seed(mammo_config* cfg, uint64_t seed) {
  return guarded([&] {
    require(cfg, "config");
    cfg->cfg.set_seed(seed);
  });
}

mammo_status mammo_config_set_scheme(mammo_config* cfg, const char* scheme) {
  return guarded([&] {
    require(cfg, "config");
    require(scheme, "scheme");
    cfg->cfg.set_scheme(mammo::parse_scheme(scheme));
  });
}

mammo_status mammo_config_set(mammo_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    mammo::set_config_value(cfg->cfg, key, value);
  });
}

mammo_status mammo_config_render(const mammo_config* cfg, char** out_text) {
  return guarded([&] {
    require(cfg, "config");
    require(out_text, "out_text");
    *out_text = copy_string(mammo::render_pipeline_config(cfg->cfg));
  });
}

mammo_status mammo_config_workspace(const mammo_config* cfg, char** out_path) {
  return guarded([&] {
    require(cfg, "config");
    require(out_path, "out_path");
    *out_path = copy_string(cfg->cfg.workspace_dir);
  });
}

// Stages ------------------------------------------------------------------

namespace {

const mammo::PipelineConfig& checked(const mammo_config* cfg, const char* root) {
  require(cfg, "config");
  require(root, "root");
  cfg->cfg.validate();
  return cfg->cfg;
}

}  // namespace

mammo_status mammo_synth(const mammo_config* cfg, const char* root) {
  return guarded([&] { mammo::workspace::synth(checked(cfg, root), root); });
}

mammo_status mammo_split(const mammo_config* cfg, const char* root, int force, char** out_summary) {
  return guarded([&] { set_string(out_summary, mammo::workspace::split(checked(cfg, root), root, force != 0)); });
}

mammo_status mammo_train_extractor(const mammo_config* cfg, const char* root, const char* views,
                                   char** out_summary) {
  return guarded([&] {
    const auto& c = checked(cfg, root);
    require(views, "views");
    set_string(out_summary,
               mammo::workspace::train_extractors(c, root, mammo::workspace::parse_view_selector(views)));
  });
}

mammo_status mammo_extract(const mammo_config* cfg, const char* root, const char* views) {
  return guarded([&] {
    const auto& c = checked(cfg, root);
    require(views, "views");
    mammo::workspace::extract(c, root, mammo::workspace::parse_view_selector(views));
  });
}

mammo_status mammo_fuse(const mammo_config* cfg, const char* root, size_t* out_fused_rows, size_t* out_single_rows,
                        int* out_incomplete_sides) {
  return guarded([&] {
    const mammo::workspace::FuseSummary s = mammo::workspace::fuse(checked(cfg, root), root);
    if (out_fused_rows) *out_fused_rows = s.fused_rows;
    if (out_single_rows) *out_single_rows = s.single_rows;
    if (out_incomplete_sides) *out_incomplete_sides = s.incomplete_sides;
  });
}

mammo_status mammo_train_gbdt(const mammo_config* cfg, const char* root) {
  return guarded([&] { mammo::workspace::train_gbdt(checked(cfg, root), root); });
}

mammo_status mammo_evaluate(const mammo_config* cfg, const char* root, char** out_report) {
  return guarded([&] { set_string(out_report, mammo::workspace::evaluate(checked(cfg, root), root)); });
}

mammo_status mammo_pipeline(const mammo_config* cfg, const char* root, int synthesize, char** out_report,
                            double* out_study_delta, double* out_side_delta) {
  return guarded([&] {
    const mammo::ComparisonReport r = mammo::workspace::pipeline(checked(cfg, root), root, synthesize != 0);
    set_string(out_report, mammo::render_comparison_table(r.single_view, r.multi_view, r.scheme));
    if (out_study_delta) *out_study_delta = r.study_delta();
    if (out_side_delta) *out_side_delta = r.side_delta();
  });
}

// Models ------------------------------------------------------------------

mammo_status mammo_forest_load(const char* path, mammo_forest** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new mammo_forest{mammo::gbdt::load_forest(path)};
  });
}

mammo_status mammo_forest_save(const mammo_forest* forest, const char* path) {
  return guarded([&] {
    require(forest, "forest");
    require(path, "path");
    mammo::gbdt::save_forest(path, forest->forest);
  });
}

void mammo_forest_free(mammo_forest* forest) { delete forest; }

mammo_status mammo_forest_shape(const mammo_forest* forest, int* out_features, int* out_classes) {
  return guarded([&] {
    require(forest, "forest");
    if (out_features) *out_features = forest->forest.features;
    if (out_classes) *out_classes = forest->forest.classes;
  });
}

mammo_status mammo_forest_predict_proba(const mammo_forest* forest, const double* x, size_t rows,
                                        double* out_proba) {
  return guarded([&] {
    require(forest, "forest");
    if (rows == 0) return;
    require(x, "x");
    require(out_proba, "out_proba");
    const auto f = static_cast<size_t>(forest->forest.features);
    const auto k = static_cast<size_t>(forest->forest.classes);
    for (size_t r = 0; r < rows; ++r) {
      const std::vector<double> p = forest->forest.predict_proba({x + r * f, f});
      std::copy(p.begin(), p.end(), out_proba + r * k);
    }
  });
}

mammo_status mammo_extractor_load(const char* path, mammo_extractor** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new mammo_extractor{mammo::load_extractor(path)};
  });
}

void mammo_extractor_free(mammo_extractor* model) { delete model; }

mammo_status mammo_extractor_channels(const mammo_extractor* model, int* out_channels) {
  return guarded([&] {
    require(model, "model");
    require(out_channels, "out_channels");
    *out_channels = model->model.channels();
  });
}

mammo_status mammo_extractor_features(const mammo_extractor* model, const mammo_config* cfg, const char* pgm_path,
                                      double* out_features) {
  return guarded([&] {
    require(model, "model");
    require(cfg, "config");
    require(pgm_path, "pgm_path");
    require(out_features, "out_features");
    const mammo::PreprocessResult pre = mammo::preprocess_image(mammo::load_image(pgm_path), cfg->cfg.preprocess);
    const mammo::ForwardResult res = mammo::forward(model->model, pre.raster);
    std::copy(res.feature.begin(), res.feature.end(), out_features);
  });
}

}  // extern "C"
