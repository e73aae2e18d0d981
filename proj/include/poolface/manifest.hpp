#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "poolface/core.hpp"
#include "poolface/pooling.hpp"
#include "poolface/pose.hpp"
#include "poolface/quality.hpp"

namespace poolface::ingest {

struct MediaEntry {
  std::string media_id;
  /// As written in the manifest; relative paths resolve against the
  /// manifest's directory.
  std::string path;
  MediaKind media_kind = MediaKind::still;
  Landmarks landmarks{};
  std::optional<double> yaw_override_deg;
  std::optional<double> quality_override;
};

struct TemplateEntry {
  std::string template_id;
  std::string subject_id;
  std::vector<MediaEntry> media;
};

/// Manifest JSON:
///   {"templates": [{"template_id": str, "subject_id": str, "media": [
///       {"media_id": str (optional, defaults to path), "path": str,
///        "media_kind": "still"|"frame" (optional),
///        "landmarks": [[x, y] x 68] | "landmarks.txt",
///        "yaw_override_deg": num (optional), "quality_override": num (optional)}]}]}
/// A landmark written as null or [null, null] is missing. Landmark files
/// hold 68 lines of "x y" ("nan nan" for missing).
struct Manifest {
  std::vector<TemplateEntry> templates;
  /// Directory relative paths resolve against.
  std::string base_dir;

  const TemplateEntry* find(std::string_view template_id) const;
  std::string resolve(const std::string& path) const;
  std::size_t media_count() const;
};

struct ManifestOptions {
  /// Require every media file to exist.
  bool check_files = true;
};

Manifest load_manifest(const std::string& path, const ManifestOptions& options = {});
Manifest parse_manifest(std::string_view text, const std::string& base_dir,
                        const ManifestOptions& options = {});
/// Landmarks are always written inline.
std::string manifest_to_json(const Manifest& manifest);

struct VerificationPair {
  std::string a;  // probe side
  std::string b;  // gallery side
  bool genuine = false;
};

/// Protocol JSON:
///   {"verification": [{"a": id, "b": id, "genuine": bool}, ...],
///    "identification": {"gallery": [id, ...], "probe": [id, ...]}}
/// Either section may be absent.
struct Protocol {
  std::vector<VerificationPair> verification;
  std::vector<std::string> gallery;
  std::vector<std::string> probe;

  bool has_identification() const { return !gallery.empty() && !probe.empty(); }
};

Protocol load_protocol(const std::string& path);
Protocol parse_protocol(std::string_view text);
std::string protocol_to_json(const Protocol& protocol);

/// Referenced templates must exist, genuine flags must agree with subject
/// ids, and identification must be closed-set with one gallery template per
/// subject.
void validate_protocol(const Protocol& protocol, const Manifest& manifest);

struct PipelineConfig {
  PoolMode mode = PoolMode::image_per_bin;
  pooling::PixelStatistic pixel_statistic = pooling::PixelStatistic::mean;
  /// "pixels" or "external:<path to FPF1 store>".
  std::string extractor = "pixels";
  std::vector<double> betas;  // defaults to 0..20
  int crop_size = 128;
  pose::YawBinEdges yaw_bins;
  quality::QualityThresholds quality_thresholds;
  std::optional<double> focal_px;
  /// Empty: the bundled generic head.
  std::string model3d_path;
  std::uint64_t seed = 0;
  int jobs = 1;
};

PipelineConfig default_config();
PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(std::string_view text);
std::string config_to_json(const PipelineConfig& config);

/// Reads a whole file; throws IoError.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace poolface::ingest
