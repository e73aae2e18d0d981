#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "poolface/core.hpp"
#include "poolface/feature_store.hpp"

namespace poolface::embedding {

enum class ExtractorKind { baseline_pixels, external_lookup };

/// Maps face rasters to feature vectors.
///
/// baseline_pixels: grayscale, 32x32 area downsample, mean removed,
/// L2-normalized (1024 dims). Deliberately weak; it keeps the pipeline
/// runnable without a network.
/// external_lookup: returns the stored vector for the raster's provenance
/// id, verbatim.
class Extractor {
 public:
  static Extractor baseline_pixels();
  static Extractor external(std::shared_ptr<const FeatureStore> store);

  const std::string& id() const noexcept { return id_; }
  std::size_t dim() const noexcept { return dim_; }
  ExtractorKind kind() const noexcept { return kind_; }

  /// Throws ZeroVarianceImage (baseline, constant raster) or
  /// MissingExternalFeature (external, unknown id).
  FeatureVector extract(const Raster& raster, std::string_view provenance_id) const;

 private:
  Extractor(ExtractorKind kind, std::string id, std::size_t dim,
            std::shared_ptr<const FeatureStore> store);

  ExtractorKind kind_;
  std::string id_;
  std::size_t dim_;
  std::shared_ptr<const FeatureStore> store_;
};

inline constexpr int kBaselineSide = 32;

/// Area-averaged resize of a single-channel raster.
Raster area_resize(const Raster& gray, int width, int height);

/// Elementwise mean, L2-renormalized.
FeatureVector pool_features(std::span<const FeatureVector> xs);

/// Pearson correlation of the two vectors, in [-1, 1].
double ncc(const FeatureVector& x, const FeatureVector& y);

/// Fills every entry's feature; deferred entries get the pooled feature of
/// their members.
void embed_template(PooledTemplate& t, const Extractor& extractor);

}  // namespace poolface::embedding
