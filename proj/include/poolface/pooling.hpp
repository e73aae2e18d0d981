#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "poolface/alignment.hpp"
#include "poolface/core.hpp"
#include "poolface/quality.hpp"

namespace poolface::pooling {

/// One media item after alignment, pose and quality estimation.
struct PreparedFace {
  pose::AlignedFace face;
  quality::QualityScore quality;
  BinKey bin;
};

struct PreparedTemplate {
  std::string template_id;
  std::string subject_id;
  std::vector<PreparedFace> faces;
};

struct BinnedTemplate {
  std::string template_id;
  /// Members of each populated bin, sorted by media_id.
  std::map<BinKey, std::vector<const PreparedFace*>> bins;
};

BinKey assign_bin(const pose::AlignedFace& face, const quality::QualityScore& q,
                  const pose::YawBinEdges& yaw_bins = {});

BinnedTemplate bin_template(const PreparedTemplate& t);

/// Per-pixel, per-channel mean accumulated in double. The result does not
/// depend on the order of `faces`: members are summed in a canonical
/// content order.
Raster pool_bin(std::span<const Raster* const> faces);
Raster pool_bin(std::span<const Raster> faces);

/// Per-pixel median (mean of the two middle values for even counts).
Raster median_pool_bin(std::span<const Raster* const> faces);

enum class PixelStatistic { mean, median };

struct PoolOptions {
  std::uint64_t seed = 0;
  PixelStatistic statistic = PixelStatistic::mean;
};

/// Builds the template representation for one of the baseline modes.
/// Single-entry modes use BinKey{0, 0} and entry id "<template_id>/all";
/// feature modes keep member rasters for the embedding stage.
PooledTemplate pool_template(const PreparedTemplate& t, PoolMode mode, const PoolOptions& options = {});

}  // namespace poolface::pooling
