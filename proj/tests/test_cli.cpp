#include <gtest/gtest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "mammo/features.hpp"
#include "mammo/mammo.h"

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

std::string take(char* s) {
  std::string out = s ? s : "";
  mammo_string_free(s);
  return out;
}

const char* kSmallConfig =
    "[pipeline]\nthreads = 2\n"
    "[synth]\nn_train = 40\nn_val = 12\nn_test = 12\nseed = 5\n"
    "[extractor]\nchannels = 8\nepochs = 4\npatience = 2\n"
    "[gbdt]\nn_rounds = 10\n";

struct Runner {
  fs::path dir;
  Runner() : dir(fs::temp_directory_path() / ("mammo_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Runner() { fs::remove_all(dir); }

  // Runs the command-line tool; returns its exit status and captures stderr.
  int run(const std::string& args, std::string* err = nullptr, std::string* out = nullptr) const {
    const std::string cmd = std::string(MAMMO_CLI_PATH) + " " + args + " >" + (dir / "out.txt").string() + " 2>" +
                            (dir / "err.txt").string();
    const int status = std::system(cmd.c_str());
    if (err) *err = slurp(dir / "err.txt");
    if (out) *out = slurp(dir / "out.txt");
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
};

class Workspace : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("mammo_ws_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    ASSERT_EQ(mammo_config_parse(kSmallConfig, &cfg_), MAMMO_OK) << mammo_last_error();
  }
  static void TearDownTestSuite() {
    mammo_config_free(cfg_);
    fs::remove_all(root_);
  }
  static const char* root() {
    static std::string s;
    s = root_.string();
    return s.c_str();
  }
  static inline fs::path root_;
  static inline mammo_config* cfg_ = nullptr;
};

}  // namespace

TEST(CApi, ConfigErrorsNameTheKey) {
  mammo_config* cfg = nullptr;
  EXPECT_EQ(mammo_config_parse("[synth]\np_vis = 1.5\n", &cfg), MAMMO_ERR_CONFIG);
  EXPECT_NE(std::string(mammo_last_error()).find("synth.p_vis"), std::string::npos) << mammo_last_error();
  EXPECT_EQ(mammo_config_parse("[synth]\nn_trian = 3\n", &cfg), MAMMO_ERR_CONFIG);
  EXPECT_NE(std::string(mammo_last_error()).find("synth.n_trian"), std::string::npos);
  EXPECT_EQ(mammo_config_parse("[gbdt]\nlambda = abc\n", &cfg), MAMMO_ERR_CONFIG);
  EXPECT_EQ(mammo_config_load("/nonexistent/config.ini", &cfg), MAMMO_ERR_IO);
}

TEST(CApi, ConfigRendersAndParsesBack) {
  mammo_config* a = nullptr;
  ASSERT_EQ(mammo_config_default(&a), MAMMO_OK);
  ASSERT_EQ(mammo_config_set(a, "gbdt.max_leaves", "7"), MAMMO_OK);
  ASSERT_EQ(mammo_config_set(a, "paths.manifest", "in/m.csv"), MAMMO_OK);
  ASSERT_EQ(mammo_config_set_scheme(a, "pathology3"), MAMMO_OK);
  ASSERT_EQ(mammo_config_set_seed(a, 99), MAMMO_OK);
  EXPECT_EQ(mammo_config_set(a, "gbdt.nope", "1"), MAMMO_ERR_CONFIG);
  EXPECT_EQ(mammo_config_set_scheme(a, "birads9"), MAMMO_ERR_CONFIG);
  char* text = nullptr;
  ASSERT_EQ(mammo_config_render(a, &text), MAMMO_OK);
  const std::string first = take(text);
  EXPECT_NE(first.find("max_leaves = 7"), std::string::npos);
  EXPECT_NE(first.find("scheme = pathology3"), std::string::npos);
  mammo_config* b = nullptr;
  ASSERT_EQ(mammo_config_parse(first.c_str(), &b), MAMMO_OK) << mammo_last_error();
  ASSERT_EQ(mammo_config_render(b, &text), MAMMO_OK);
  EXPECT_EQ(take(text), first);
  mammo_config_free(a);
  mammo_config_free(b);
}

TEST(CApi, DefaultsMatchTheCommittedConfig) {
  mammo_config* def = nullptr;
  mammo_config* committed = nullptr;
  ASSERT_EQ(mammo_config_default(&def), MAMMO_OK);
  ASSERT_EQ(mammo_config_load(MAMMO_SOURCE_DIR "/configs/default.ini", &committed), MAMMO_OK) << mammo_last_error();
  char *a = nullptr, *b = nullptr;
  mammo_config_render(def, &a);
  mammo_config_render(committed, &b);
  EXPECT_EQ(take(a), take(b));
  mammo_config_free(def);
  mammo_config_free(committed);
}

TEST(CApi, NullArgumentsAreRejected) {
  EXPECT_EQ(mammo_config_default(nullptr), MAMMO_ERR_CONFIG);
  EXPECT_EQ(mammo_synth(nullptr, "x"), MAMMO_ERR_CONFIG);
  EXPECT_EQ(mammo_forest_load("/nonexistent.json", nullptr), MAMMO_ERR_CONFIG);
}

TEST_F(Workspace, StagesRunEndToEndAndAreReproducible) {
  ASSERT_EQ(mammo_synth(cfg_, root()), MAMMO_OK) << mammo_last_error();
  char* text = nullptr;
  // The generator already assigns splits.
  EXPECT_EQ(mammo_split(cfg_, root(), 0, &text), MAMMO_ERR_CONFIG);
  ASSERT_EQ(mammo_split(cfg_, root(), 1, &text), MAMMO_OK) << mammo_last_error();
  EXPECT_NE(take(text).find("studies"), std::string::npos);
  const std::string split_once = slurp(root_ / "manifest.csv");
  ASSERT_EQ(mammo_split(cfg_, root(), 1, &text), MAMMO_OK);
  mammo_string_free(text);
  EXPECT_EQ(slurp(root_ / "manifest.csv"), split_once);

  EXPECT_EQ(mammo_train_extractor(cfg_, root(), "X-CC", &text), MAMMO_ERR_CONFIG);
  ASSERT_EQ(mammo_train_extractor(cfg_, root(), "all", &text), MAMMO_OK) << mammo_last_error();
  const std::string summary = take(text);
  for (const char* v : {"L-CC", "L-MLO", "R-CC", "R-MLO"}) {
    EXPECT_NE(summary.find(std::string(v) + " best_epoch="), std::string::npos);
    EXPECT_TRUE(fs::exists(root_ / "models" / (std::string("extractor_") + v + ".bin")));
  }
  EXPECT_NE(slurp(root_ / "logs" / "extractor_L-CC.csv").find("# best_epoch="), std::string::npos);

  ASSERT_EQ(mammo_extract(cfg_, root(), "all"), MAMMO_OK) << mammo_last_error();
  size_t fused = 0, single = 0;
  int warnings = -1;
  ASSERT_EQ(mammo_fuse(cfg_, root(), &fused, &single, &warnings), MAMMO_OK) << mammo_last_error();
  EXPECT_EQ(fused, 64u * 2);
  EXPECT_EQ(single, 64u * 4);
  EXPECT_EQ(warnings, 0);

  ASSERT_EQ(mammo_train_gbdt(cfg_, root()), MAMMO_OK) << mammo_last_error();
  ASSERT_EQ(mammo_evaluate(cfg_, root(), &text), MAMMO_OK) << mammo_last_error();
  const std::string report = take(text);
  EXPECT_NE(report.find("Macro-F1"), std::string::npos);
  const std::string kv = slurp(root_ / "reports" / "comparison.kv");
  EXPECT_NE(kv.find("delta.diagnosis.study.macro_f1="), std::string::npos);

  // Retraining and re-evaluating reproduces every byte.
  const std::string model = slurp(root_ / "models" / "gbdt_fused_diagnosis.json");
  ASSERT_EQ(mammo_train_gbdt(cfg_, root()), MAMMO_OK);
  ASSERT_EQ(mammo_evaluate(cfg_, root(), &text), MAMMO_OK);
  EXPECT_EQ(take(text), report);
  EXPECT_EQ(slurp(root_ / "models" / "gbdt_fused_diagnosis.json"), model);
  EXPECT_EQ(slurp(root_ / "reports" / "comparison.kv"), kv);

  // Models through the handle API.
  mammo_forest* forest = nullptr;
  ASSERT_EQ(mammo_forest_load((root_ / "models" / "gbdt_fused_diagnosis.json").c_str(), &forest), MAMMO_OK);
  int features = 0, classes = 0;
  ASSERT_EQ(mammo_forest_shape(forest, &features, &classes), MAMMO_OK);
  EXPECT_EQ(features, 8);
  EXPECT_EQ(classes, 5);
  const mammo::FeatureMatrix table = mammo::load_features(root_ / "features" / "fused.mfv");
  std::vector<double> x(table.row(0).begin(), table.row(0).end());
  std::vector<double> p(5), q(5);
  ASSERT_EQ(mammo_forest_predict_proba(forest, x.data(), 1, p.data()), MAMMO_OK);
  const fs::path copy = root_ / "forest_copy.json";
  ASSERT_EQ(mammo_forest_save(forest, copy.c_str()), MAMMO_OK);
  mammo_forest* again = nullptr;
  ASSERT_EQ(mammo_forest_load(copy.c_str(), &again), MAMMO_OK);
  ASSERT_EQ(mammo_forest_predict_proba(again, x.data(), 1, q.data()), MAMMO_OK);
  EXPECT_EQ(p, q);
  double sum = 0;
  for (double v : p) sum += v;
  EXPECT_NEAR(sum, 1.0, 1e-12);
  mammo_forest_free(forest);
  mammo_forest_free(again);

  mammo_extractor* ext = nullptr;
  ASSERT_EQ(mammo_extractor_load((root_ / "models" / "extractor_L-CC.bin").c_str(), &ext), MAMMO_OK);
  int channels = 0;
  ASSERT_EQ(mammo_extractor_channels(ext, &channels), MAMMO_OK);
  EXPECT_EQ(channels, 8);
  const mammo::FeatureMatrix lcc = mammo::load_features(root_ / "features" / "L-CC.mfv");
  std::vector<double> f(8);
  ASSERT_EQ(mammo_extractor_features(ext, cfg_, (root_ / "images" / "S00000_L-CC.pgm").c_str(), f.data()), MAMMO_OK)
      << mammo_last_error();
  for (int c = 0; c < 8; ++c) EXPECT_EQ(static_cast<float>(f[static_cast<size_t>(c)]), lcc.row(0)[static_cast<size_t>(c)]);
  mammo_extractor_free(ext);

  // A manifest missing one MLO image: one warning, same number of side rows.
  std::istringstream lines(slurp(root_ / "manifest.csv"));
  std::string line, trimmed;
  bool dropped = false;
  while (std::getline(lines, line)) {
    if (!dropped && line.find(",MLO,") != std::string::npos) {
      dropped = true;
      continue;
    }
    trimmed += line + "\n";
  }
  spit(root_ / "partial.csv", trimmed);
  mammo_config* partial = nullptr;
  ASSERT_EQ(mammo_config_parse(kSmallConfig, &partial), MAMMO_OK);
  ASSERT_EQ(mammo_config_set(partial, "paths.manifest", (root_ / "partial.csv").c_str()), MAMMO_OK);
  ASSERT_EQ(mammo_extract(partial, root(), "all"), MAMMO_OK) << mammo_last_error();
  size_t fused2 = 0;
  ASSERT_EQ(mammo_fuse(partial, root(), &fused2, nullptr, &warnings), MAMMO_OK) << mammo_last_error();
  EXPECT_EQ(warnings, 1);
  EXPECT_EQ(fused2, fused);
  mammo_config_free(partial);
}

TEST_F(Workspace, MissingArtifactsAreIoErrors) {
  const fs::path empty = root_ / "empty";
  fs::create_directories(empty);
  EXPECT_EQ(mammo_fuse(cfg_, empty.c_str(), nullptr, nullptr, nullptr), MAMMO_ERR_IO);
  EXPECT_EQ(mammo_train_gbdt(cfg_, empty.c_str()), MAMMO_ERR_IO);
  EXPECT_EQ(mammo_extractor_load((empty / "none.bin").c_str(), nullptr), MAMMO_ERR_CONFIG);
  mammo_extractor* ext = nullptr;
  EXPECT_EQ(mammo_extractor_load((empty / "none.bin").c_str(), &ext), MAMMO_ERR_IO);
}

TEST(Cli, ExitCodesAndQuietStderr) {
  const Runner r;
  const fs::path cfg = r.dir / "small.ini";
  spit(cfg, kSmallConfig);
  const std::string common = "--config " + cfg.string() + " --out " + (r.dir / "ws").string();
  std::string err, out;

  EXPECT_EQ(r.run("synth " + common, &err), 0);
  EXPECT_TRUE(err.empty()) << err;
  EXPECT_EQ(r.run("split " + common, &err), 2);
  EXPECT_FALSE(err.empty());
  EXPECT_EQ(r.run("split --seed 7 --force " + common, &err, &out), 0);
  EXPECT_TRUE(err.empty()) << err;
  const std::string first = slurp(r.dir / "ws" / "manifest.csv");
  EXPECT_EQ(r.run("split --seed 7 --force " + common, &err), 0);
  EXPECT_EQ(slurp(r.dir / "ws" / "manifest.csv"), first);

  const fs::path bad = r.dir / "bad.ini";
  spit(bad, "[synth]\np_vis = 1.5\n");
  EXPECT_EQ(r.run("synth --config " + bad.string() + " --out " + (r.dir / "ws2").string(), &err), 2);
  EXPECT_NE(err.find("synth.p_vis"), std::string::npos) << err;

  EXPECT_EQ(r.run("synth --bogus", &err), 2);
  EXPECT_EQ(r.run("train-extractor --view X-CC " + common, &err), 2);
  EXPECT_EQ(r.run("fuse " + common, &err), 3);
  EXPECT_EQ(r.run("synth --config " + (r.dir / "missing.ini").string(), &err), 3);
  EXPECT_EQ(r.run("--help", &err, &out), 0);
  EXPECT_TRUE(err.empty());
  EXPECT_NE(out.find("pipeline"), std::string::npos);
}

TEST(Cli, PipelineOnASmallDatasetWritesTheDocumentedFiles) {
  const Runner r;
  const fs::path cfg = r.dir / "small.ini";
  spit(cfg, kSmallConfig);
  std::string err, out;
  ASSERT_EQ(r.run("pipeline --synth --config " + cfg.string() + " --out " + (r.dir / "ws").string(), &err, &out), 0)
      << err;
  EXPECT_TRUE(err.empty()) << err;
  EXPECT_NE(out.find("delta study diagnosis macro-F1"), std::string::npos);
  for (const char* f : {"manifest.csv", "truth.json", "config.ini", "models/extractor_R-MLO.bin",
                        "models/gbdt_single_density.json", "logs/gbdt_fused_diagnosis.csv", "features/fused.mfv",
                        "features/single.mfv", "reports/comparison.txt", "reports/comparison.kv",
                        "reports/single_view.txt", "reports/multi_view.txt"}) {
    EXPECT_TRUE(fs::exists(r.dir / "ws" / f)) << f;
  }
  const std::string report = slurp(r.dir / "ws" / "reports" / "comparison.txt");
  ASSERT_EQ(r.run("pipeline --config " + cfg.string() + " --out " + (r.dir / "ws").string(), &err, &out), 0) << err;
  EXPECT_EQ(slurp(r.dir / "ws" / "reports" / "comparison.txt"), report);
}
