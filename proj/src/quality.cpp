#include "poolface/quality.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "poolface/error.hpp"
#include "poolface/image_io.hpp"

namespace poolface::quality {

namespace {

constexpr int kBlock = 8;
constexpr double kMassFloor = 1e-12;

/// Orthonormal DCT-II basis, basis[u][x].
const std::array<std::array<double, kBlock>, kBlock>& dct_basis() {
  static const auto basis = [] {
    std::array<std::array<double, kBlock>, kBlock> b{};
    for (int u = 0; u < kBlock; ++u) {
      const double alpha = u == 0 ? std::sqrt(1.0 / kBlock) : std::sqrt(2.0 / kBlock);
      for (int x = 0; x < kBlock; ++x) {
        b[u][x] = alpha * std::cos((2 * x + 1) * u * std::numbers::pi / (2.0 * kBlock));
      }
    }
    return b;
  }();
  return basis;
}

Raster halve(const Raster& src) {
  Raster out(src.width() / 2, src.height() / 2, 1);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      const double sum = static_cast<double>(src.at(0, 2 * y, 2 * x)) + src.at(0, 2 * y, 2 * x + 1) +
                         src.at(0, 2 * y + 1, 2 * x) + src.at(0, 2 * y + 1, 2 * x + 1);
      out.at(0, y, x) = static_cast<float>(0.25 * sum);
    }
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

ScaleFeatures scale_features(const Raster& gray) {
  std::vector<double> spatial;
  std::vector<double> spectral;
  std::array<int, 64> levels{};
  std::array<double, 64> values{};
  for (int by = 0; by + kBlock <= gray.height(); by += kBlock) {
    for (int bx = 0; bx + kBlock <= gray.width(); bx += kBlock) {
      for (int y = 0; y < kBlock; ++y) {
        for (int x = 0; x < kBlock; ++x) {
          const float v = gray.at(0, by + y, bx + x);
          levels[y * kBlock + x] = to_u8(v);
          values[y * kBlock + x] = 255.0 * static_cast<double>(v);
        }
      }
      spatial.push_back(spatial_entropy(levels));
      spectral.push_back(spectral_entropy(values));
    }
  }
  const auto sp = percentile_pool(std::move(spatial));
  const auto sf = percentile_pool(std::move(spectral));
  return {mean_of(sp), adjusted_skewness(sp), mean_of(sf), adjusted_skewness(sf)};
}

}  // namespace

double spatial_entropy(const std::array<int, 64>& levels) {
  std::array<int, 256> hist{};
  for (int v : levels) ++hist[std::clamp(v, 0, 255)];
  double h = 0.0;
  for (int count : hist) {
    if (count == 0) continue;
    const double p = count / 64.0;
    h -= p * std::log2(p);
  }
  return h;
}

double spectral_entropy(const std::array<double, 64>& values) {
  const auto& d = dct_basis();
  // rows[u][x] = sum_y basis[u][y] * block[y][x]
  std::array<std::array<double, kBlock>, kBlock> rows{};
  for (int u = 0; u < kBlock; ++u) {
    for (int x = 0; x < kBlock; ++x) {
      double acc = 0.0;
      for (int y = 0; y < kBlock; ++y) acc += d[u][y] * values[y * kBlock + x];
      rows[u][x] = acc;
    }
  }
  std::array<double, 64> power{};
  double mass = 0.0;
  for (int u = 0; u < kBlock; ++u) {
    for (int v = 0; v < kBlock; ++v) {
      if (u == 0 && v == 0) continue;
      double acc = 0.0;
      for (int x = 0; x < kBlock; ++x) acc += rows[u][x] * d[v][x];
      power[u * kBlock + v] = acc * acc;
      mass += acc * acc;
    }
  }
  if (mass < kMassFloor) return 0.0;
  double h = 0.0;
  for (int k = 1; k < 64; ++k) {
    if (power[k] <= 0.0) continue;
    const double p = power[k] / mass;
    h -= p * std::log2(p);
  }
  return std::max(h, 0.0);
}

std::vector<double> percentile_pool(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t drop = values.size() / 5;
  return {values.begin() + static_cast<std::ptrdiff_t>(drop),
          values.end() - static_cast<std::ptrdiff_t>(drop)};
}

double adjusted_skewness(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 3) return 0.0;
  const double mean = mean_of(values);
  double m2 = 0.0, m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= static_cast<double>(n);
  m3 /= static_cast<double>(n);
  if (m2 <= 1e-300) return 0.0;
  const double g1 = m3 / std::pow(m2, 1.5);
  const double nd = static_cast<double>(n);
  return std::sqrt(nd * (nd - 1.0)) / (nd - 2.0) * g1;
}

QualityFeatures sseq_features(const Raster& image) {
  if (std::min(image.width(), image.height()) < 32) {
    throw Error(ErrorCode::ImageTooSmall, "quality features need at least 32x32 pixels");
  }
  Raster gray = to_grayscale(image);
  QualityFeatures f;
  for (int s = 0; s < 3; ++s) {
    f.scales[s] = scale_features(gray);
    if (s < 2) gray = halve(gray);
  }
  return f;
}

double calibrated_score(const QualityFeatures& features) {
  const ScaleFeatures& full = features.scales[0];
  const double spectral = std::clamp(full.spectral_mean / std::log2(63.0), 0.0, 1.0);
  const double spatial = std::clamp(full.spatial_mean / 8.0, 0.0, 1.0);
  return 0.5 * spectral + 0.5 * spatial;
}

QualityScore quality_score(const Raster& image, const QualityThresholds& thresholds) {
  QualityScore q;
  q.score = calibrated_score(sseq_features(image));
  q.quality_bin = quantize_quality(q.score, thresholds);
  return q;
}

int quantize_quality(double score, const QualityThresholds& thresholds) {
  int bin = 0;
  for (double edge : thresholds.edges) {
    if (score >= edge) ++bin;
  }
  return bin;
}

}  // namespace poolface::quality
