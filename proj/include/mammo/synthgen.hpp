#ifndef MAMMO_SYNTHGEN_HPP_
#define MAMMO_SYNTHGEN_HPP_

// Deterministic synthetic four-view mammography studies.
//
// Each breast is a half-ellipse anchored at the chest-wall edge (left edge
// for right-breast images, right edge for left-breast images) whose
// brightness falls off toward the skin line. The density class sets the
// fibroglandular fraction of a smooth tissue field, so mean brightness grows
// with density; each projection sees a slightly different fraction. The
// diagnosis class sets the number of bright round findings, with a
// near-saturated intensity that grows slightly with the class. Every finding
// is rendered in each view of its breast independently with probability
// p_vis, and in at least one view, so a single view can show fewer findings
// than its breast holds while the pair never misses one. A few saturated
// single-pixel specks in every breast pin the intensity range.

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "mammo/ingestion.hpp"
#include "mammo/preprocess.hpp"

namespace mammo {

struct SynthConfig {
  int n_train = 600;
  int n_val = 150;
  int n_test = 150;
  int height = 128;
  int width = 96;
  double p_vis = 0.6;
  double noise_sigma = 4.0;
  uint64_t seed = 20220;
  LabelScheme scheme;

  // Throws Error(kConfig) naming the offending key.
  void validate() const;
  int total_studies() const { return n_train + n_val + n_test; }
};

struct Blob {
  double cx = 0, cy = 0, radius = 0, contrast = 0;
};

struct ImageTruth {
  BoundingBox breast;        // exact bounding box of the rendered breast mask
  std::vector<Blob> blobs;   // findings actually rendered in this view
  int nominal_blobs = 0;     // findings assigned to the breast
};

struct SideLabels {
  OrdinalLabel diagnosis;
  OrdinalLabel density;
};

struct SynthStudy {
  std::array<GrayImage, 4> images;   // by ViewId::slot()
  std::array<ImageTruth, 4> truth;
};

// Number of findings for a diagnosis class: BI-RADS 1..5 -> 0/2/5/8/11;
// pathology normal/benign/cancer -> 0/2/8.
int nominal_blob_count(const OrdinalLabel& diagnosis);
// Finding intensity on the 0-255 scale; grows with the diagnosis class.
double blob_contrast(const OrdinalLabel& diagnosis);

// Renders the four views of one study. labels[0] is left, labels[1] right.
// Throws Error(kConfig) when the image is too small to place findings.
SynthStudy generate_study(std::mt19937_64& rng, const std::array<SideLabels, 2>& labels,
                          const SynthConfig& cfg);

// Draws the side labels of study `index` from the fixed priors.
std::array<SideLabels, 2> draw_study_labels(std::mt19937_64& rng, const LabelScheme& scheme);

// Independent per-study generator stream.
std::mt19937_64 study_rng(uint64_t seed, uint64_t index);

struct SynthDataset {
  Manifest manifest;
  // Per manifest row, in the same order.
  std::vector<ImageTruth> truth;
  std::vector<GrayImage> images;
};

// Generates the whole dataset in memory. Studies are named S00000, S00001, ...
// and assigned train/val/test in that order according to the counts.
SynthDataset generate_dataset_in_memory(const SynthConfig& cfg);

// Writes images/<study>_<view>.pgm, manifest.csv and truth.json under `out_dir`
// and returns the manifest (base_dir = out_dir).
Manifest generate_dataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

std::string encode_truth(const SynthDataset& dataset);

}  // namespace mammo

#endif  // MAMMO_SYNTHGEN_HPP_
