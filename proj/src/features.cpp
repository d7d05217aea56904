#include "mammo/features.hpp"

#include "binary_io.hpp"
#include "mammo/error.hpp"

namespace mammo {

void FeatureMatrix::append(std::span<const float> v, FeatureSource source, int diag, int dens) {
  if (static_cast<int>(v.size()) != channels) {
    fail(ErrorCode::kIntegrity, "feature row has " + std::to_string(v.size()) +
                                    " values, matrix declares " + std::to_string(channels));
  }
  values.insert(values.end(), v.begin(), v.end());
  sources.push_back(std::move(source));
  diagnosis.push_back(static_cast<uint8_t>(diag));
  density.push_back(static_cast<uint8_t>(dens));
}

std::string encode_features(const FeatureMatrix& m) {
  binio::Writer w;
  w.raw("MFV1");
  w.u64(m.rows());
  w.u32(static_cast<uint32_t>(m.channels));
  w.u8(m.scheme.mode == DiagnosisMode::kBiRads5 ? 0 : 1);
  for (size_t i = 0; i < m.rows(); ++i) {
    for (float v : m.row(i)) w.f32(v);
    const FeatureSource& s = m.sources[i];
    w.u8(m.diagnosis[i]);
    w.u8(m.density[i]);
    w.u8(static_cast<uint8_t>(s.laterality));
    w.u8(static_cast<uint8_t>(s.view));
    w.u8(s.views_present);
    if (s.study_id.size() > 0xFFFF) fail(ErrorCode::kIntegrity, "study_id too long for feature file");
    w.u16(static_cast<uint16_t>(s.study_id.size()));
    w.raw(s.study_id);
  }
  return w.take();
}

FeatureMatrix decode_features(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 3) != "MFV") {
    fail(ErrorCode::kFormatVersion, "not a feature file (bad magic)");
  }
  if (bytes[3] != '1') {
    fail(ErrorCode::kFormatVersion,
         std::string("unsupported feature file version '") + bytes[3] + "' (expected 1)");
  }
  binio::Reader r(bytes.substr(4), "feature file");
  FeatureMatrix m;
  const uint64_t n = r.u64();
  m.channels = static_cast<int>(r.u32());
  const uint8_t scheme = r.u8();
  if (scheme > 1) fail(ErrorCode::kIntegrity, "feature file: unknown scheme byte");
  m.scheme.mode = scheme == 0 ? DiagnosisMode::kBiRads5 : DiagnosisMode::kPathology3;
  const size_t min_record = static_cast<size_t>(m.channels) * 4 + 7;
  if (n > r.remaining() / min_record) fail(ErrorCode::kIntegrity, "feature file: truncated file");
  m.values.reserve(n * static_cast<size_t>(m.channels));
  std::vector<float> row(static_cast<size_t>(m.channels));
  for (uint64_t i = 0; i < n; ++i) {
    for (float& v : row) v = r.f32();
    FeatureSource s;
    const int diag = r.u8();
    const int dens = r.u8();
    const uint8_t lat = r.u8();
    const uint8_t view = r.u8();
    s.views_present = r.u8();
    if (lat > 1 || view > 2) fail(ErrorCode::kIntegrity, "feature file: bad source key");
    if (diag >= m.scheme.diagnosis_classes() || dens >= kDensityClasses) {
      fail(ErrorCode::kIntegrity, "feature file: label out of range");
    }
    s.laterality = static_cast<Laterality>(lat);
    s.view = static_cast<FeatureView>(view);
    s.study_id = std::string(r.raw(r.u16()));
    m.append(row, std::move(s), diag, dens);
  }
  if (!r.at_end()) fail(ErrorCode::kIntegrity, "feature file: trailing bytes");
  return m;
}

void save_features(const std::filesystem::path& path, const FeatureMatrix& matrix) {
  binio::write_file(path, encode_features(matrix));
}

FeatureMatrix load_features(const std::filesystem::path& path) {
  return decode_features(binio::read_file(path));
}

}  // namespace mammo
