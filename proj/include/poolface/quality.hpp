#pragma once

#include <array>
#include <vector>

#include "poolface/raster.hpp"

namespace poolface::quality {

/// Mean and skewness of percentile-pooled block entropies at one scale.
struct ScaleFeatures {
  double spatial_mean = 0.0;
  double spatial_skew = 0.0;
  double spectral_mean = 0.0;
  double spectral_skew = 0.0;
};

/// Scales 1, 1/2 and 1/4, in that order.
struct QualityFeatures {
  std::array<ScaleFeatures, 3> scales{};
};

struct QualityScore {
  double score = 0.0;
  int quality_bin = 0;
};

/// Lower edges of quality bins 1..4.
struct QualityThresholds {
  std::array<double, 4> edges{0.45, 0.55, 0.65, 0.75};
};

/// Block entropies of one 8x8 tile.
/// `levels` are 8-bit intensities (histogram term), `values` the same
/// pixels before quantization (DCT term), both row-major.
double spatial_entropy(const std::array<int, 64>& levels);
double spectral_entropy(const std::array<double, 64>& values);

/// Central 60% of the values after sorting.
std::vector<double> percentile_pool(std::vector<double> values);

/// Adjusted Fisher-Pearson skewness; 0 for fewer than 3 samples or no spread.
double adjusted_skewness(const std::vector<double>& values);

/// Entropy features of a grayscale raster (color input is converted).
/// Throws ImageTooSmall when min(H, W) < 32.
QualityFeatures sseq_features(const Raster& image);

/// Fixed monotone map of the scale-1 entropy means to [0, 1], binned.
QualityScore quality_score(const Raster& image, const QualityThresholds& thresholds = {});

/// The calibration alone, for callers that already have the features.
double calibrated_score(const QualityFeatures& features);

int quantize_quality(double score, const QualityThresholds& thresholds = {});

}  // namespace poolface::quality
