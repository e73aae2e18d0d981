#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "poolface/error.hpp"
#include "poolface/raster.hpp"

namespace poolface {

inline constexpr int kLandmarkCount = 68;
inline constexpr int kPoseBins = 4;
inline constexpr int kQualityBins = 5;
inline constexpr int kBinCount = kPoseBins * kQualityBins;

/// Image-plane point in pixels. A landmark with non-finite coordinates is
/// treated as missing.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  bool valid() const noexcept;
  friend bool operator==(const Point2&, const Point2&) = default;
};

using Landmarks = std::array<Point2, kLandmarkCount>;

/// Landmark indices of the 68-point scheme used for eye geometry.
namespace landmark {
inline constexpr int kLeftEyeOuter = 36;   // image-left eye
inline constexpr int kLeftEyeInner = 39;
inline constexpr int kRightEyeInner = 42;  // image-right eye
inline constexpr int kRightEyeOuter = 45;
}  // namespace landmark

enum class MediaKind : std::uint8_t { still, frame };

std::string_view to_string(MediaKind kind);
MediaKind media_kind_from_string(std::string_view name);

struct FaceMedia {
  std::string media_id;
  Raster image;
  Landmarks landmarks{};
  MediaKind media_kind = MediaKind::still;
  std::string source_path;

  friend bool operator==(const FaceMedia&, const FaceMedia&) = default;
};

/// Throws ValidationError when the raster is smaller than 8x8 or a valid
/// landmark falls outside [-0.5W, 1.5W] x [-0.5H, 1.5H].
void validate(const FaceMedia& media);

struct Template {
  std::string template_id;
  std::string subject_id;
  std::vector<FaceMedia> media;

  friend bool operator==(const Template&, const Template&) = default;
};

/// Throws ValidationError for empty templates and duplicate media ids.
void validate(const Template& t);

/// One of the 20 (pose, quality) cells. Ordered lexicographically.
struct BinKey {
  int pose_bin = 0;
  int quality_bin = 0;

  /// Dense index in [0, 20).
  int index() const noexcept { return pose_bin * kQualityBins + quality_bin; }
  /// Two-digit code "<pose_bin><quality_bin>" used in file names and ids.
  std::string code() const;
  bool valid() const noexcept;

  static BinKey from_index(int index);

  friend auto operator<=>(const BinKey&, const BinKey&) = default;
};

struct FeatureVector {
  std::vector<double> values;
  std::string extractor_id;

  std::size_t dim() const noexcept { return values.size(); }
  bool empty() const noexcept { return values.empty(); }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class PoolMode : std::uint8_t {
  all_images,
  single_image,
  single_feature,
  random_per_bin,
  feature_per_bin,
  image_per_bin,
};

std::string_view to_string(PoolMode mode);
PoolMode pool_mode_from_string(std::string_view name);

/// True for the modes that average features rather than pixels.
bool defers_to_feature_pooling(PoolMode mode);

struct PooledEntry {
  BinKey key;
  /// Provenance id: a media_id for single-image entries, otherwise
  /// "<template_id>/<pose_bin><quality_bin>" (or "<template_id>/all").
  std::string entry_id;
  /// Pooled or selected raster. Empty when feature pooling is deferred.
  Raster image;
  /// Member rasters kept for deferred feature pooling, sorted by member id.
  std::vector<Raster> member_images;
  std::vector<std::string> member_ids;
  int member_count = 0;
  /// Empty until the embedding stage runs.
  FeatureVector feature;

  friend bool operator==(const PooledEntry&, const PooledEntry&) = default;
};

struct PooledTemplate {
  std::string template_id;
  std::string subject_id;
  PoolMode mode = PoolMode::image_per_bin;
  /// Raw template cardinality N.
  int source_count = 0;
  std::vector<PooledEntry> entries;

  bool feature_pooling_deferred() const noexcept { return defers_to_feature_pooling(mode); }

  friend bool operator==(const PooledTemplate&, const PooledTemplate&) = default;
};

/// Checks entry-count and member-count invariants.
void validate(const PooledTemplate& t);

}  // namespace poolface
