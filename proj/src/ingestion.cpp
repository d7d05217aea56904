#include "mammo/ingestion.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include "mammo/error.hpp"

namespace mammo {
namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    const auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    fields.emplace_back(trim(field));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void line_error(int line, const std::string& message) {
  fail(ErrorCode::kIntegrity, "manifest line " + std::to_string(line) + ": " + message);
}

int parse_int_field(std::string_view text, int line, const char* column) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    line_error(line, std::string("invalid integer '") + std::string(text) + "' in column " + column);
  }
  return value;
}

enum Column { kStudy, kLat, kView, kPath, kDiag, kDens, kSplit, kRx0, kRy0, kRx1, kRy1, kColumnCount };

constexpr std::array<const char*, kColumnCount> kColumnNames = {
    "study_id", "laterality", "view", "image_path", "diagnosis", "density",
    "split", "roi_x0", "roi_y0", "roi_x1", "roi_y1"};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

fs::path Manifest::resolve(const ImageRecord& row) const {
  const fs::path p(row.image_path);
  return p.is_absolute() ? p : base_dir / p;
}

Manifest parse_manifest(std::istream& in, const LabelScheme& scheme) {
  Manifest manifest;
  manifest.scheme = scheme;

  std::string line;
  int line_no = 0;
  std::array<int, kColumnCount> col;
  col.fill(-1);
  size_t header_width = 0;
  bool have_header = false;
  std::set<std::tuple<std::string, int>> seen;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv_line(line);

    if (!have_header) {
      for (size_t i = 0; i < fields.size(); ++i) {
        const auto it = std::find(kColumnNames.begin(), kColumnNames.end(), fields[i]);
        if (it == kColumnNames.end()) line_error(line_no, "unknown column '" + fields[i] + "'");
        const auto c = static_cast<size_t>(it - kColumnNames.begin());
        if (col[c] >= 0) line_error(line_no, "duplicate column '" + fields[i] + "'");
        col[c] = static_cast<int>(i);
      }
      for (int c = kStudy; c <= kDens; ++c) {
        if (col[c] < 0) line_error(line_no, std::string("missing required column '") + kColumnNames[c] + "'");
      }
      const int roi_present = (col[kRx0] >= 0) + (col[kRy0] >= 0) + (col[kRx1] >= 0) + (col[kRy1] >= 0);
      if (roi_present != 0 && roi_present != 4) line_error(line_no, "roi columns must appear together");
      manifest.split_column_present = col[kSplit] >= 0;
      manifest.roi_columns_present = roi_present == 4;
      header_width = fields.size();
      have_header = true;
      continue;
    }

    if (fields.size() != header_width) {
      line_error(line_no, "expected " + std::to_string(header_width) + " fields, got " +
                              std::to_string(fields.size()));
    }
    auto field = [&](Column c) -> const std::string& { return fields[static_cast<size_t>(col[c])]; };

    ImageRecord row{.study_id = field(kStudy),
                    .view = {},
                    .image_path = field(kPath),
                    .diagnosis = OrdinalLabel::birads(1),
                    .density = OrdinalLabel::density('A'),
                    .split = std::nullopt,
                    .roi = std::nullopt};
    if (row.study_id.empty()) line_error(line_no, "empty study_id");

    const std::string& lat = field(kLat);
    if (lat == "L" || lat == "l") {
      row.view.laterality = Laterality::kLeft;
    } else if (lat == "R" || lat == "r") {
      row.view.laterality = Laterality::kRight;
    } else {
      line_error(line_no, "invalid laterality '" + lat + "'");
    }
    std::string view = field(kView);
    std::transform(view.begin(), view.end(), view.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (view == "CC") {
      row.view.view = ViewKind::kCC;
    } else if (view == "MLO") {
      row.view.view = ViewKind::kMLO;
    } else {
      line_error(line_no, "invalid view '" + field(kView) + "'");
    }

    try {
      row.diagnosis = parse_label(field(kDiag), scheme, LabelTarget::kDiagnosis);
      row.density = parse_label(field(kDens), scheme, LabelTarget::kDensity);
    } catch (const Error& e) {
      line_error(line_no, e.what());
    }

    if (manifest.split_column_present) {
      const std::string& s = field(kSplit);
      if (!s.empty()) {
        row.split = parse_split(s);
        if (!row.split) line_error(line_no, "invalid split '" + s + "'");
      }
    }
    if (manifest.roi_columns_present && !field(kRx0).empty()) {
      RoiOverride roi{parse_int_field(field(kRx0), line_no, "roi_x0"),
                      parse_int_field(field(kRy0), line_no, "roi_y0"),
                      parse_int_field(field(kRx1), line_no, "roi_x1"),
                      parse_int_field(field(kRy1), line_no, "roi_y1")};
      if (roi.x0 < 0 || roi.y0 < 0 || roi.x1 <= roi.x0 || roi.y1 <= roi.y0) {
        line_error(line_no, "degenerate roi override");
      }
      row.roi = roi;
    }

    if (!seen.emplace(row.study_id, row.view.slot()).second) {
      line_error(line_no, "duplicate key (" + row.study_id + ", " + view_id_name(row.view) + ")");
    }
    manifest.rows.push_back(std::move(row));
  }
  if (!have_header) fail(ErrorCode::kIntegrity, "manifest is empty (no header row)");
  return manifest;
}

Manifest load_manifest(const fs::path& path, const LabelScheme& scheme) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open manifest '" + path.string() + "'");
  Manifest manifest = parse_manifest(in, scheme);
  manifest.base_dir = path.parent_path();
  return manifest;
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
  out << "study_id,laterality,view,image_path,diagnosis,density";
  if (manifest.split_column_present) out << ",split";
  if (manifest.roi_columns_present) out << ",roi_x0,roi_y0,roi_x1,roi_y1";
  out << '\n';
  for (const ImageRecord& row : manifest.rows) {
    out << row.study_id << ',' << laterality_char(row.view.laterality) << ','
        << view_kind_name(row.view.view) << ',' << row.image_path << ','
        << render_label(row.diagnosis) << ',' << render_label(row.density);
    if (manifest.split_column_present) {
      out << ',' << (row.split ? split_name(*row.split) : std::string_view());
    }
    if (manifest.roi_columns_present) {
      if (row.roi) {
        out << ',' << row.roi->x0 << ',' << row.roi->y0 << ',' << row.roi->x1 << ',' << row.roi->y1;
      } else {
        out << ",,,,";
      }
    }
    out << '\n';
  }
}

void save_manifest(const fs::path& path, const Manifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write manifest '" + path.string() + "'");
  write_manifest(out, manifest);
  if (!out) fail(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

// PGM ----------------------------------------------------------------------

namespace {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(const std::string& bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long next_uint(const char* what) {
    skip_space_and_comments();
    const size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1'000'000'000L) fail(ErrorCode::kIntegrity, std::string("PGM ") + what + " too large");
      ++pos_;
    }
    if (pos_ == start) fail(ErrorCode::kIntegrity, std::string("PGM: expected ") + what);
    return value;
  }

  size_t pos() const { return pos_; }
  void advance(size_t n) { pos_ += n; }

 private:
  const std::string& bytes_;
  size_t pos_ = 0;
};

}  // namespace

GrayImage decode_pgm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5')) {
    fail(ErrorCode::kIntegrity, "unknown image magic number (expected P2 or P5 PGM)");
  }
  const bool binary = bytes[1] == '5';
  PgmHeaderReader reader(bytes);
  reader.advance(2);
  const long width = reader.next_uint("width");
  const long height = reader.next_uint("height");
  const long maxval = reader.next_uint("maxval");
  if (width <= 0 || height <= 0) fail(ErrorCode::kIntegrity, "PGM has zero dimension");
  if (maxval != 255 && maxval != 65535) {
    fail(ErrorCode::kIntegrity, "PGM maxval " + std::to_string(maxval) + " unsupported (255 or 65535)");
  }

  GrayImage image;
  image.width = static_cast<int>(width);
  image.height = static_cast<int>(height);
  image.bit_depth = maxval == 255 ? 8 : 16;
  const size_t count = static_cast<size_t>(width) * static_cast<size_t>(height);
  image.pixels.resize(count);

  if (binary) {
    // Exactly one whitespace byte separates maxval from the raster.
    if (reader.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[reader.pos()]))) {
      fail(ErrorCode::kIntegrity, "PGM header not terminated by whitespace");
    }
    reader.advance(1);
    const size_t sample_bytes = image.bit_depth == 16 ? 2 : 1;
    const size_t payload = bytes.size() - reader.pos();
    if (payload != count * sample_bytes) {
      fail(ErrorCode::kIntegrity, "PGM payload length " + std::to_string(payload) +
                                      " does not match declared " + std::to_string(width) + "x" +
                                      std::to_string(height) + " (" +
                                      std::to_string(count * sample_bytes) + " bytes)");
    }
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data() + reader.pos());
    for (size_t i = 0; i < count; ++i) {
      image.pixels[i] = sample_bytes == 2
                            ? static_cast<uint16_t>((data[2 * i] << 8) | data[2 * i + 1])
                            : data[i];
    }
  } else {
    for (size_t i = 0; i < count; ++i) {
      const long v = reader.next_uint("sample");
      if (v > maxval) fail(ErrorCode::kIntegrity, "PGM sample exceeds maxval");
      image.pixels[i] = static_cast<uint16_t>(v);
    }
    reader.skip_space_and_comments();
    if (reader.pos() != bytes.size()) {
      fail(ErrorCode::kIntegrity, "PGM payload longer than declared dimensions");
    }
  }
  return image;
}

std::string encode_pgm(const GrayImage& image, bool binary) {
  const uint32_t maxval = image.max_value();
  std::string out = (binary ? "P5\n" : "P2\n") + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n" + std::to_string(maxval) + "\n";
  if (binary) {
    for (uint16_t v : image.pixels) {
      if (image.bit_depth == 16) out.push_back(static_cast<char>(v >> 8));
      out.push_back(static_cast<char>(v & 0xFF));
    }
  } else {
    for (int y = 0; y < image.height; ++y) {
      for (int x = 0; x < image.width; ++x) {
        if (x) out.push_back(' ');
        out += std::to_string(image.at(x, y));
      }
      out.push_back('\n');
    }
  }
  return out;
}

GrayImage load_image(const fs::path& path) {
  return decode_pgm(read_file(path));
}

void save_image(const fs::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write image '" + path.string() + "'");
  const std::string bytes = encode_pgm(image, true);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

// Validation ---------------------------------------------------------------

int ValidationReport::count(Finding::Kind kind) const {
  return static_cast<int>(std::count_if(findings.begin(), findings.end(),
                                        [kind](const Finding& f) { return f.kind == kind; }));
}

ValidationReport validate_dataset(const Manifest& manifest) {
  ValidationReport report;
  for (const StudyRecord& study : manifest.studies()) {
    std::string missing;
    for (const ViewId& id : kAllViews) {
      if (!study.image(id)) missing += (missing.empty() ? "" : " ") + view_id_name(id);
    }
    if (!missing.empty()) {
      report.findings.push_back({ValidationReport::Finding::Kind::kIncompleteStudy, study.study_id,
                                 "missing " + missing});
    }
    for (Laterality lat : {Laterality::kLeft, Laterality::kRight}) {
      const auto& cc = study.image({lat, ViewKind::kCC});
      const auto& mlo = study.image({lat, ViewKind::kMLO});
      if (cc && mlo && cc->density != mlo->density) {
        report.findings.push_back({ValidationReport::Finding::Kind::kDensityMismatch, study.study_id,
                                   std::string(1, laterality_char(lat)) + "-CC density " +
                                       render_label(cc->density) + " vs MLO " +
                                       render_label(mlo->density)});
      }
    }
  }

  const int diag_k = manifest.scheme.diagnosis_classes();
  for (const ImageRecord& row : manifest.rows) {
    const std::string split =
        row.split ? std::string(split_name(*row.split)) : (manifest.split_column_present ? "unassigned" : "all");
    auto& per_target = report.class_counts[split];
    auto& diag = per_target["diagnosis"];
    auto& dens = per_target["density"];
    diag.resize(static_cast<size_t>(diag_k));
    dens.resize(kDensityClasses);
    ++diag[static_cast<size_t>(row.diagnosis.index())];
    ++dens[static_cast<size_t>(row.density.index())];
  }
  return report;
}

}  // namespace mammo
