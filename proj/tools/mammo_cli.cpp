// mammo: command-line front end over the C interface.
//
// Exit codes: 0 ok, 1 internal, 2 config, 3 io, 4 training refused,
// 5 format version, 6 integrity. Results go to stdout; stderr is written only
// on failure.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mammo/mammo.h"

namespace {

struct Options {
  std::string config;
  std::optional<uint64_t> seed;
  std::string scheme;
  std::string out;
  std::string view = "all";
  bool force = false;
  bool synth = false;
};

class Failure {
 public:
  explicit Failure(mammo_status status) : status_(status) {}
  mammo_status status() const { return status_; }

 private:
  mammo_status status_;
};

void check(mammo_status status) {
  if (status != MAMMO_OK) throw Failure(status);
}

// Owns a string returned by the library.
class Text {
 public:
  Text() = default;
  Text(const Text&) = delete;
  Text& operator=(const Text&) = delete;
  ~Text() { mammo_string_free(ptr_); }
  char** out() { return &ptr_; }
  std::string str() const { return ptr_ ? ptr_ : ""; }

 private:
  char* ptr_ = nullptr;
};

class Config {
 public:
  explicit Config(const Options& o) {
    check(o.config.empty() ? mammo_config_default(&cfg_) : mammo_config_load(o.config.c_str(), &cfg_));
    if (!o.scheme.empty()) check(mammo_config_set_scheme(cfg_, o.scheme.c_str()));
    if (o.seed) check(mammo_config_set_seed(cfg_, *o.seed));
    if (o.out.empty()) {
      Text ws;
      check(mammo_config_workspace(cfg_, ws.out()));
      root_ = ws.str();
    } else {
      root_ = o.out;
    }
  }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;
  ~Config() { mammo_config_free(cfg_); }

  const mammo_config* get() const { return cfg_; }
  const char* root() const { return root_.c_str(); }

 private:
  mammo_config* cfg_ = nullptr;
  std::string root_;
};

void print(const std::string& text) {
  std::fputs(text.c_str(), stdout);
  if (!text.empty() && text.back() != '\n') std::fputc('\n', stdout);
}

void run(const std::string& command, const Options& o) {
  const Config cfg(o);
  if (command == "synth") {
    check(mammo_synth(cfg.get(), cfg.root()));
    print(std::string("dataset written to ") + cfg.root());
  } else if (command == "split") {
    Text summary;
    check(mammo_split(cfg.get(), cfg.root(), o.force ? 1 : 0, summary.out()));
    print(summary.str());
  } else if (command == "train-extractor") {
    Text summary;
    check(mammo_train_extractor(cfg.get(), cfg.root(), o.view.c_str(), summary.out()));
    print(summary.str());
  } else if (command == "extract") {
    check(mammo_extract(cfg.get(), cfg.root(), o.view.c_str()));
    print("features written for " + o.view);
  } else if (command == "fuse") {
    size_t fused = 0, single = 0;
    int incomplete = 0;
    check(mammo_fuse(cfg.get(), cfg.root(), &fused, &single, &incomplete));
    print("fused_rows=" + std::to_string(fused) + " single_rows=" + std::to_string(single) +
          " warnings=" + std::to_string(incomplete));
  } else if (command == "train-gbdt") {
    check(mammo_train_gbdt(cfg.get(), cfg.root()));
    print("classifiers written");
  } else if (command == "evaluate") {
    Text report;
    check(mammo_evaluate(cfg.get(), cfg.root(), report.out()));
    print(report.str());
  } else if (command == "pipeline") {
    Text report;
    double study = 0, side = 0;
    check(mammo_pipeline(cfg.get(), cfg.root(), o.synth ? 1 : 0, report.out(), &study, &side));
    print(report.str());
    char line[128];
    std::snprintf(line, sizeof(line), "delta study diagnosis macro-F1 %+.4f\ndelta side density macro-F1 %+.4f",
                  study, side);
    print(line);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-view mammography classification pipeline"};
  app.require_subcommand(1);
  Options o;

  const auto common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI config file");
    sub->add_option("--seed", o.seed, "Seed for every stage");
    sub->add_option("--scheme", o.scheme, "Diagnosis label scheme")->check(CLI::IsMember({"birads5", "pathology3"}));
    sub->add_option("--out", o.out, "Workspace directory (default paths.workspace)");
  };
  const auto view = [&o](CLI::App* sub) {
    sub->add_option("--view", o.view, "View selector")->check(CLI::IsMember({"L-CC", "R-CC", "L-MLO", "R-MLO", "all"}));
  };

  common(app.add_subcommand("synth", "Generate the synthetic dataset"));
  auto* split = app.add_subcommand("split", "Add a stratified split column to the manifest");
  common(split);
  split->add_flag("--force", o.force, "Replace an existing split column");
  auto* train = app.add_subcommand("train-extractor", "Train per-view feature extractors");
  common(train);
  view(train);
  auto* extract = app.add_subcommand("extract", "Write per-view feature files");
  common(extract);
  view(extract);
  common(app.add_subcommand("fuse", "Build the fused and single-view tables"));
  common(app.add_subcommand("train-gbdt", "Train the diagnosis and density classifiers"));
  common(app.add_subcommand("evaluate", "Evaluate on the test split"));
  auto* pipeline = app.add_subcommand("pipeline", "Run everything and compare single-view with multi-view");
  common(pipeline);
  pipeline->add_flag("--synth", o.synth, "Generate the synthetic dataset first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : MAMMO_ERR_CONFIG;
  }

  try {
    run(app.get_subcommands().front()->get_name(), o);
  } catch (const Failure& f) {
    std::fprintf(stderr, "mammo: %s\n", mammo_last_error());
    return f.status();
  }
  return 0;
}
