#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "poolface/core.hpp"

namespace poolface::embedding {

/// Row-major float32 matrix in the FPF1 container:
///   "FPF1" | u32 rows | u32 cols | rows*cols binary32, all little-endian.
struct Fpf1Matrix {
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<float> values;
};

void write_fpf1(const std::string& path, const Fpf1Matrix& m);
Fpf1Matrix read_fpf1(const std::string& path);

/// "<path>.json"
std::string sidecar_path(const std::string& path);

/// Feature vectors keyed by provenance id (a media_id or
/// "<template_id>/<pose_bin><quality_bin>"). On disk: an FPF1 file plus a
/// JSON sidecar {"extractor_id": ..., "ids": [row 0 id, row 1 id, ...]}.
class FeatureStore {
 public:
  FeatureStore(std::string extractor_id, std::uint32_t dim);

  static FeatureStore load(const std::string& path);
  void save(const std::string& path) const;

  /// Stored as binary32. Throws MixedExtractors on a dimension mismatch and
  /// ValidationError on a repeated id.
  void add(const std::string& id, const std::vector<double>& values);

  bool contains(std::string_view id) const;
  /// Throws MissingExternalFeature.
  FeatureVector lookup(std::string_view id) const;

  const std::string& extractor_id() const noexcept { return extractor_id_; }
  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }

 private:
  std::string extractor_id_;
  std::uint32_t dim_;
  std::vector<std::string> ids_;
  std::vector<float> values_;
  std::map<std::string, std::size_t, std::less<>> rows_;
};

}  // namespace poolface::embedding
