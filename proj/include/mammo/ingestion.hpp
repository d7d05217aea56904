#ifndef MAMMO_INGESTION_HPP_
#define MAMMO_INGESTION_HPP_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "mammo/labels.hpp"

namespace mammo {

// Comma-separated manifest, one row per image. Header:
//   study_id,laterality,view,image_path,diagnosis,density[,split]
//   [,roi_x0,roi_y0,roi_x1,roi_y1]
// Columns may appear in any order; unknown columns are an error.
struct Manifest {
  LabelScheme scheme;
  std::vector<ImageRecord> rows;
  bool split_column_present = false;
  bool roi_columns_present = false;
  // Directory relative image paths are resolved against.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ImageRecord& row) const;
  std::vector<StudyRecord> studies() const { return group_studies(rows); }
};

// Errors carry the 1-based line number. Duplicate (study, laterality, view)
// keys are rejected at the second occurrence.
Manifest parse_manifest(std::istream& in, const LabelScheme& scheme);
Manifest load_manifest(const std::filesystem::path& path, const LabelScheme& scheme);

void write_manifest(std::ostream& out, const Manifest& manifest);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct GrayImage {
  int width = 0;
  int height = 0;
  int bit_depth = 8;  // 8 or 16
  std::vector<uint16_t> pixels;  // row-major

  uint16_t at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
  uint16_t& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  uint32_t max_value() const { return bit_depth == 16 ? 65535u : 255u; }
};

// Plain (P2) and binary (P5) PGM, maxval 255 or 65535. 16-bit P5 samples are
// big-endian.
GrayImage decode_pgm(const std::string& bytes);
std::string encode_pgm(const GrayImage& image, bool binary = true);
GrayImage load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const GrayImage& image);

struct ValidationReport {
  struct Finding {
    enum class Kind { kIncompleteStudy, kDensityMismatch } kind;
    std::string study_id;
    std::string detail;
  };
  std::vector<Finding> findings;
  // counts[split][target][class]; split "all" when the manifest has no split
  // column. target is "diagnosis" or "density". Counted per image row.
  std::map<std::string, std::map<std::string, std::vector<int>>> class_counts;

  int count(Finding::Kind kind) const;
};

ValidationReport validate_dataset(const Manifest& manifest);

}  // namespace mammo

#endif  // MAMMO_INGESTION_HPP_
