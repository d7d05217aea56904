#include "mammo/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "binary_io.hpp"
#include "json.hpp"
#include "mammo/error.hpp"

namespace mammo {
namespace fs = std::filesystem;

namespace {

// Side-level class priors. BI-RADS follows the imbalance of a large screening
// cohort (class 1 near 62%); pathology follows a 486/704/632 split.
constexpr std::array<double, 5> kBiRadsPrior = {16081.0 / 25990, 5561.0 / 25990, 1756.0 / 25990,
                                                1900.0 / 25990, 692.0 / 25990};
constexpr std::array<double, 3> kPathologyPrior = {486.0 / 1822, 704.0 / 1822, 632.0 / 1822};
constexpr std::array<double, 4> kDensityPrior = {0.15, 0.35, 0.35, 0.15};
// Probability that the right breast's density differs by one class.
constexpr double kDensityAsymmetry = 0.10;

constexpr double kBackground = 6.0;
constexpr double kTissueBase = 80.0;
constexpr double kTissueStep = 20.0;
constexpr double kFatSpeckle = 5.0;
constexpr double kDenseSpeckle = 8.0;
constexpr double kBlobRadius = 4.0;
constexpr int kSpecks = 4;
// Spread of the apparent fibroglandular fraction between projections.
constexpr double kDenseFractionJitter = 0.12;
constexpr int kFieldBumps = 6;
constexpr double kFieldScale = 0.30;   // bump width relative to image width
constexpr double kSkinFalloff = 0.08;  // fraction of the semi-axes
constexpr double kDenseEdge = 1.50;    // field units

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Box-Muller; one draw per call keeps the stream layout simple.
double normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <size_t N>
int draw_categorical(std::mt19937_64& rng, const std::array<double, N>& p) {
  double u = uniform01(rng);
  for (size_t i = 0; i + 1 < N; ++i) {
    if (u < p[i]) return static_cast<int>(i);
    u -= p[i];
  }
  return static_cast<int>(N - 1);
}

struct Geometry {
  double cx, cy, ax, ay;  // ellipse center (on the chest-wall edge) and semi-axes
  bool inside(double x, double y) const {
    const double dx = (x - cx) / ax;
    const double dy = (y - cy) / ay;
    return dx * dx + dy * dy <= 1.0;
  }
  // 0 on the skin line rising linearly to 1 at kSkinFalloff inside it.
  double thickness(double x, double y) const {
    const double dx = (x - cx) / ax;
    const double dy = (y - cy) / ay;
    return std::clamp((1.0 - std::sqrt(dx * dx + dy * dy)) / kSkinFalloff, 0.0, 1.0);
  }
};

Geometry draw_geometry(std::mt19937_64& rng, Laterality lat, const SynthConfig& cfg) {
  Geometry g;
  g.cx = lat == Laterality::kRight ? 0.0 : static_cast<double>(cfg.width);
  g.cy = cfg.height * (0.5 + uniform(rng, -0.04, 0.04));
  g.ax = cfg.width * uniform(rng, 0.80, 0.84);
  g.ay = cfg.height * uniform(rng, 0.40, 0.42);
  return g;
}

// Places `radii.size()` non-overlapping findings well inside the breast.
std::vector<Blob> place_blobs(std::mt19937_64& rng, const Geometry& g, const std::vector<double>& radii,
                              double contrast, const SynthConfig& cfg) {
  std::vector<Blob> out;
  const Geometry inner{g.cx, g.cy, g.ax * 0.8, g.ay * 0.8};
  for (double r : radii) {
    bool placed = false;
    for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
      const double x = uniform(rng, 0.0, cfg.width);
      const double y = uniform(rng, 0.0, cfg.height);
      if (!inner.inside(x, y)) continue;
      if (std::abs(x - g.cx) < r + 3.0) continue;
      if (y - r < 1.0 || y + r > cfg.height - 1.0 || x - r < 1.0 || x + r > cfg.width - 1.0) continue;
      bool clear = true;
      for (const Blob& b : out) {
        if (std::hypot(b.cx - x, b.cy - y) < b.radius + r + 3.0) clear = false;
      }
      if (!clear) continue;
      out.push_back({x, y, r, contrast});
      placed = true;
    }
    if (!placed) {
      fail(ErrorCode::kConfig, "synth image " + std::to_string(cfg.height) + "x" +
                                   std::to_string(cfg.width) + " too small to place findings");
    }
  }
  return out;
}

GrayImage render_view(std::mt19937_64& rng, const Geometry& g, const std::vector<Blob>& blobs,
                      const OrdinalLabel& density, const SynthConfig& cfg, BoundingBox& bbox) {
  const int w = cfg.width;
  const int h = cfg.height;
  GrayImage img{w, h, 8, std::vector<uint16_t>(static_cast<size_t>(w) * static_cast<size_t>(h))};

  // Fibroglandular tissue: the top `fraction` of a smooth random field inside
  // the breast, blended into fat over a wide ramp. A fraction of d / 3 gives a
  // breast-wide mean level near kTissueBase + kTissueStep * d. Each projection
  // draws its own apparent fraction.
  const double fraction =
      std::clamp(density.index() / 3.0 + kDenseFractionJitter * normal(rng), 0.0, 1.0);
  std::array<std::array<double, 3>, kFieldBumps> bumps;
  for (auto& b : bumps) {
    b = {uniform(rng, 0.0, w), uniform(rng, 0.0, h), uniform(rng, 0.5, 1.0)};
  }
  const double s2 = 2.0 * std::pow(kFieldScale * w, 2);
  std::vector<double> field(static_cast<size_t>(w) * static_cast<size_t>(h), 0.0);
  std::vector<double> inside_values;
  bbox = BoundingBox{w, h, 0, 0};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;
      if (!g.inside(px, py)) continue;
      bbox.x0 = std::min(bbox.x0, x);
      bbox.y0 = std::min(bbox.y0, y);
      bbox.x1 = std::max(bbox.x1, x + 1);
      bbox.y1 = std::max(bbox.y1, y + 1);
      double f = 0.0;
      for (const auto& b : bumps) f += b[2] * std::exp(-(std::pow(px - b[0], 2) + std::pow(py - b[1], 2)) / s2);
      field[static_cast<size_t>(y) * w + x] = f;
      inside_values.push_back(f);
    }
  }
  double cut = std::numeric_limits<double>::infinity();
  const auto n_dense = static_cast<size_t>(std::lround(fraction * static_cast<double>(inside_values.size())));
  if (n_dense > 0) {
    std::nth_element(inside_values.begin(), inside_values.end() - static_cast<long>(n_dense), inside_values.end());
    cut = *(inside_values.end() - static_cast<long>(n_dense));
  }

  const double fat_level = kTissueBase;
  const double dense_level = kTissueBase + 3.0 * kTissueStep;
  const double fat_speckle = kFatSpeckle;
  const double dense_speckle = kDenseSpeckle;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;
      double v = kBackground;
      if (g.inside(px, py)) {
        // Linear ramp across the dense/fat boundary.
        const double t = std::clamp((field[static_cast<size_t>(y) * w + x] - cut) / kDenseEdge + 0.5, 0.0, 1.0);
        v = fat_level + t * (dense_level - fat_level) + (fat_speckle + t * (dense_speckle - fat_speckle)) * normal(rng);
        v = kBackground + g.thickness(px, py) * (v - kBackground);
        for (const Blob& b : blobs) {
          const double d = std::hypot(px - b.cx, py - b.cy);
          // Flat disk at the finding's intensity with a one-pixel linear rim.
          const double wgt = std::clamp(b.radius + 0.5 - d, 0.0, 1.0);
          v = (1.0 - wgt) * v + wgt * b.contrast;
        }
      }
      v += cfg.noise_sigma * normal(rng);
      img.at(x, y) = static_cast<uint16_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  // Saturated single-pixel specks inside every breast, independent of the
  // labels, so the crop's intensity range does not depend on the findings.
  const Geometry inner{g.cx, g.cy, g.ax * 0.8, g.ay * 0.8};
  for (int placed = 0, attempt = 0; placed < kSpecks && attempt < 1000; ++attempt) {
    const int x = static_cast<int>(uniform(rng, 0.0, cfg.width));
    const int y = static_cast<int>(uniform(rng, 0.0, cfg.height));
    if (x >= cfg.width || y >= cfg.height || !inner.inside(x + 0.5, y + 0.5)) continue;
    img.at(x, y) = 255;
    ++placed;
  }
  return img;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_train < 1) fail(ErrorCode::kConfig, "synth.n_train must be >= 1");
  if (n_val < 1) fail(ErrorCode::kConfig, "synth.n_val must be >= 1");
  if (n_test < 1) fail(ErrorCode::kConfig, "synth.n_test must be >= 1");
  if (!(p_vis >= 0.0 && p_vis <= 1.0)) fail(ErrorCode::kConfig, "synth.p_vis must lie in [0, 1]");
  if (!(noise_sigma >= 0.0)) fail(ErrorCode::kConfig, "synth.noise_sigma must be >= 0");
  if (height < 32 || width < 24) {
    fail(ErrorCode::kConfig, "synth.height/width too small to place findings (min 32x24)");
  }
}

int nominal_blob_count(const OrdinalLabel& diagnosis) {
  if (diagnosis.kind() == LabelKind::kBiRads) {
    static constexpr int kCounts[] = {0, 2, 5, 8, 11};
    return kCounts[diagnosis.index()];
  }
  if (diagnosis.kind() == LabelKind::kPathology) {
    static constexpr int kCounts[] = {0, 2, 8};
    return kCounts[diagnosis.index()];
  }
  fail(ErrorCode::kIntegrity, "finding count requested for a density label");
}

double blob_contrast(const OrdinalLabel& diagnosis) {
  if (diagnosis.kind() == LabelKind::kBiRads) {
    static constexpr double kContrast[] = {0.0, 250.0, 250.1, 250.2, 250.3};
    return kContrast[diagnosis.index()];
  }
  if (diagnosis.kind() == LabelKind::kPathology) return diagnosis.index() == 2 ? 250.2 : 250.0;
  fail(ErrorCode::kIntegrity, "finding contrast requested for a density label");
}

std::mt19937_64 study_rng(uint64_t seed, uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ index));
}

std::array<SideLabels, 2> draw_study_labels(std::mt19937_64& rng, const LabelScheme& scheme) {
  auto diag = [&]() {
    return scheme.mode == DiagnosisMode::kBiRads5
               ? OrdinalLabel(LabelKind::kBiRads, draw_categorical(rng, kBiRadsPrior))
               : OrdinalLabel(LabelKind::kPathology, draw_categorical(rng, kPathologyPrior));
  };
  const OrdinalLabel left_diag = diag();
  const OrdinalLabel right_diag = diag();
  const int left_density = draw_categorical(rng, kDensityPrior);
  int right_density = left_density;
  if (uniform01(rng) < kDensityAsymmetry) {
    const int step = uniform01(rng) < 0.5 ? -1 : 1;
    right_density = std::clamp(left_density + step, 0, kDensityClasses - 1);
  }
  return {SideLabels{left_diag, OrdinalLabel(LabelKind::kDensity, left_density)},
          SideLabels{right_diag, OrdinalLabel(LabelKind::kDensity, right_density)}};
}

SynthStudy generate_study(std::mt19937_64& rng, const std::array<SideLabels, 2>& labels,
                          const SynthConfig& cfg) {
  cfg.validate();
  SynthStudy study;
  for (Laterality lat : {Laterality::kLeft, Laterality::kRight}) {
    const SideLabels& side = labels[static_cast<size_t>(lat)];
    const int n = nominal_blob_count(side.diagnosis);
    const double contrast = blob_contrast(side.diagnosis);

    std::vector<double> radii;
    std::vector<std::array<bool, 2>> visible;
    for (int b = 0; b < n; ++b) {
      radii.push_back(kBlobRadius);
      std::array<bool, 2> vis = {uniform01(rng) < cfg.p_vis, uniform01(rng) < cfg.p_vis};
      if (!vis[0] && !vis[1]) vis[uniform01(rng) < 0.5 ? 0 : 1] = true;
      visible.push_back(vis);
    }

    for (ViewKind view : {ViewKind::kCC, ViewKind::kMLO}) {
      const ViewId id{lat, view};
      const Geometry g = draw_geometry(rng, lat, cfg);
      // Each view is a separate projection: finding positions are redrawn.
      const std::vector<Blob> all = place_blobs(rng, g, radii, contrast, cfg);
      std::vector<Blob> shown;
      for (int b = 0; b < n; ++b) {
        if (visible[static_cast<size_t>(b)][static_cast<size_t>(view)]) shown.push_back(all[static_cast<size_t>(b)]);
      }
      ImageTruth& truth = study.truth[static_cast<size_t>(id.slot())];
      truth.nominal_blobs = n;
      truth.blobs = shown;
      study.images[static_cast<size_t>(id.slot())] = render_view(rng, g, shown, side.density, cfg, truth.breast);
    }
  }
  return study;
}

SynthDataset generate_dataset_in_memory(const SynthConfig& cfg) {
  cfg.validate();
  SynthDataset out;
  out.manifest.scheme = cfg.scheme;
  out.manifest.split_column_present = true;
  const int total = cfg.total_studies();
  for (int i = 0; i < total; ++i) {
    std::mt19937_64 rng = study_rng(cfg.seed, static_cast<uint64_t>(i));
    const auto labels = draw_study_labels(rng, cfg.scheme);
    SynthStudy study = generate_study(rng, labels, cfg);
    char id[16];
    std::snprintf(id, sizeof(id), "S%05d", i);
    const Split split = i < cfg.n_train ? Split::kTrain
                        : i < cfg.n_train + cfg.n_val ? Split::kVal
                                                      : Split::kTest;
    for (const ViewId& view : kAllViews) {
      const auto slot = static_cast<size_t>(view.slot());
      const SideLabels& side = labels[static_cast<size_t>(view.laterality)];
      std::string name = std::string(id) + "_" + view_id_name(view) + ".pgm";
      out.manifest.rows.push_back(ImageRecord{id, view, "images/" + name, side.diagnosis, side.density, split,
                                              std::nullopt});
      out.truth.push_back(std::move(study.truth[slot]));
      out.images.push_back(std::move(study.images[slot]));
    }
  }
  return out;
}

std::string encode_truth(const SynthDataset& dataset) {
  using nlohmann::json;
  json images = json::array();
  for (size_t i = 0; i < dataset.truth.size(); ++i) {
    const ImageRecord& row = dataset.manifest.rows[i];
    const ImageTruth& t = dataset.truth[i];
    json blobs = json::array();
    for (const Blob& b : t.blobs) {
      blobs.push_back({{"cx", b.cx}, {"cy", b.cy}, {"radius", b.radius}, {"contrast", b.contrast}});
    }
    images.push_back({{"study_id", row.study_id},
                      {"view", view_id_name(row.view)},
                      {"image_path", row.image_path},
                      {"breast_bbox", {t.breast.x0, t.breast.y0, t.breast.x1, t.breast.y1}},
                      {"nominal_findings", t.nominal_blobs},
                      {"findings", std::move(blobs)},
                      {"diagnosis", render_label(row.diagnosis)},
                      {"density", render_label(row.density)}});
  }
  json doc = {{"format", "mammo-synth-truth"}, {"format_version", 1}, {"images", std::move(images)}};
  return doc.dump(1) + "\n";
}

Manifest generate_dataset(const SynthConfig& cfg, const fs::path& out_dir) {
  SynthDataset data = generate_dataset_in_memory(cfg);
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec) fail(ErrorCode::kIo, "cannot create '" + (out_dir / "images").string() + "': " + ec.message());
  for (size_t i = 0; i < data.images.size(); ++i) {
    save_image(out_dir / data.manifest.rows[i].image_path, data.images[i]);
  }
  data.manifest.base_dir = out_dir;
  save_manifest(out_dir / "manifest.csv", data.manifest);
  binio::write_file(out_dir / "truth.json", encode_truth(data));
  return data.manifest;
}

}  // namespace mammo
