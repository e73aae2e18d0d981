#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "poolface/error.hpp"
#include "poolface/image_io.hpp"
#include "poolface/quality.hpp"

using namespace poolface;
using namespace poolface::quality;

namespace {

Raster transpose(const Raster& r) {
  Raster t(r.height(), r.width(), r.channels());
  for (int c = 0; c < r.channels(); ++c) {
    for (int y = 0; y < r.height(); ++y) {
      for (int x = 0; x < r.width(); ++x) t.at(c, x, y) = r.at(c, y, x);
    }
  }
  return t;
}

/// Image whose pixels sit exactly on the 8-bit levels.
Raster quantized(const Raster& r) {
  Raster q = r;
  for (float& v : q.data()) v = static_cast<float>(to_u8(v)) / 255.0f;
  return q;
}

std::vector<Raster> corpus() {
  SplitMix64 rng(2024);
  std::vector<Raster> images;
  for (int i = 0; i < 24; ++i) images.push_back(fixtures::natural_like(rng, 96 + 8 * (i % 3), 96));
  return images;
}

}  // namespace

TEST_CASE("constant image scores zero") {
  const Raster flat(64, 64, 1, 0.4f);
  const QualityFeatures f = sseq_features(flat);
  for (const auto& s : f.scales) {
    CHECK(s.spatial_mean == 0.0);
    CHECK(s.spectral_mean == 0.0);
    CHECK(s.spatial_skew == 0.0);
    CHECK(s.spectral_skew == 0.0);
  }
  const QualityScore q = quality_score(flat);
  CHECK(q.score == 0.0);
  CHECK(q.quality_bin == 0);
}

TEST_CASE("checkerboard of period 2 has 1 bit per block") {
  Raster board(64, 64, 1);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) board.at(0, y, x) = ((x + y) % 2) ? 1.0f : 0.0f;
  }
  std::array<int, 64> levels{};
  for (int i = 0; i < 64; ++i) levels[i] = ((i % 8 + i / 8) % 2) ? 255 : 0;
  CHECK(spatial_entropy(levels) == 1.0);
  CHECK(sseq_features(board).scales[0].spatial_mean == 1.0);
}

TEST_CASE("uniform noise reaches the 64-sample entropy ceiling") {
  // Oracle: expected histogram entropy of 64 draws from 256 levels,
  // estimated with an independent generator.
  std::mt19937_64 gen(7);
  std::uniform_int_distribution<int> level(0, 255);
  double expected = 0.0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    std::array<int, 256> hist{};
    for (int i = 0; i < 64; ++i) ++hist[level(gen)];
    double h = 0.0;
    for (int c : hist) {
      if (c) h -= (c / 64.0) * std::log2(c / 64.0);
    }
    expected += h / trials;
  }

  SplitMix64 rng(1);
  Raster noise(256, 256, 1);
  for (float& v : noise.data()) v = static_cast<float>(rng.below(256)) / 255.0f;
  const double measured = sseq_features(noise).scales[0].spatial_mean;
  CHECK(measured == doctest::Approx(expected).epsilon(0.01));
  CHECK(measured > 5.7);
  CHECK(measured <= 6.0);  // log2(64): the ceiling for 64-pixel blocks
}

TEST_CASE("block entropies stay in range") {
  SplitMix64 rng(3);
  for (int t = 0; t < 500; ++t) {
    std::array<int, 64> levels{};
    std::array<double, 64> values{};
    const int spread = 1 + static_cast<int>(rng.below(256));
    for (int i = 0; i < 64; ++i) {
      levels[i] = static_cast<int>(rng.below(static_cast<std::uint64_t>(spread)));
      values[i] = levels[i];
    }
    const double s = spatial_entropy(levels);
    const double f = spectral_entropy(values);
    CHECK(s >= 0.0);
    CHECK(s <= 8.0);
    CHECK(f >= 0.0);
    CHECK(f <= std::log2(63.0) + 1e-12);
  }
  std::array<double, 64> flat{};
  flat.fill(3.0);
  CHECK(spectral_entropy(flat) == 0.0);
}

TEST_CASE("single DCT basis function has zero spectral entropy") {
  std::array<double, 64> values{};
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) values[y * 8 + x] = std::cos((2 * x + 1) * 3 * M_PI / 16.0);
  }
  CHECK(std::abs(spectral_entropy(values)) < 1e-9);
}

TEST_CASE("percentile pooling keeps the central 60%") {
  std::vector<double> v;
  for (int i = 10; i > 0; --i) v.push_back(i);
  const auto kept = percentile_pool(v);
  CHECK(kept == std::vector<double>{3, 4, 5, 6, 7, 8});
  CHECK(percentile_pool({1, 2, 3, 4}).size() == 4);
}

TEST_CASE("adjusted skewness") {
  CHECK(adjusted_skewness({1, 2}) == 0.0);
  CHECK(adjusted_skewness({2, 2, 2, 2}) == 0.0);
  CHECK(adjusted_skewness({1, 2, 3, 4, 5}) == doctest::Approx(0.0));
  // Hand computation for {0, 0, 3}: mean 1, m2 = 2, m3 = 2, g1 = 2 / 2^1.5,
  // G1 = sqrt(6) / 1 * g1.
  CHECK(adjusted_skewness({0, 0, 3}) == doctest::Approx(std::sqrt(6.0) * 2.0 / std::pow(2.0, 1.5)));
}

TEST_CASE("quality quantizer") {
  CHECK(quantize_quality(0.44) == 0);
  CHECK(quantize_quality(0.45) == 1);
  CHECK(quantize_quality(0.55) == 2);
  CHECK(quantize_quality(0.70) == 3);
  CHECK(quantize_quality(0.75) == 4);
  CHECK(quantize_quality(0.80) == 4);
  for (int k = 0; k <= 1000; ++k) {
    const double s = k / 1000.0;
    const int expected = s < 0.45 ? 0 : s < 0.55 ? 1 : s < 0.65 ? 2 : s < 0.75 ? 3 : 4;
    CHECK(quantize_quality(s) == expected);
  }
}

TEST_CASE("too small images are rejected") {
  try {
    sseq_features(Raster(31, 64, 1));
    FAIL("expected ImageTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ImageTooSmall);
  }
  CHECK_NOTHROW(sseq_features(Raster(32, 32, 1)));
}

TEST_CASE("features are invariant to transposition at scale 1") {
  SplitMix64 rng(8);
  for (int i = 0; i < 5; ++i) {
    const Raster img = fixtures::natural_like(rng, 96, 96);
    const auto a = sseq_features(img).scales[0];
    const auto b = sseq_features(transpose(img)).scales[0];
    CHECK(std::abs(a.spatial_mean - b.spatial_mean) < 1e-9);
    CHECK(std::abs(a.spatial_skew - b.spatial_skew) < 1e-9);
    CHECK(std::abs(a.spectral_mean - b.spectral_mean) < 1e-9);
    CHECK(std::abs(a.spectral_skew - b.spectral_skew) < 1e-9);
  }
}

TEST_CASE("score is invariant to intensity inversion") {
  // v -> 255 - v is the non-trivial affine bijection of the 8-bit levels.
  SplitMix64 rng(4);
  for (int i = 0; i < 5; ++i) {
    const Raster img = quantized(fixtures::natural_like(rng, 96, 96));
    Raster inv = img;
    for (float& v : inv.data()) v = static_cast<float>(255 - to_u8(v)) / 255.0f;
    const auto a = sseq_features(img).scales[0];
    const auto b = sseq_features(inv).scales[0];
    CHECK(a.spatial_mean == doctest::Approx(b.spatial_mean).epsilon(1e-12));
    CHECK(std::abs(a.spectral_mean - b.spectral_mean) < 0.05);
    CHECK(std::abs(quality_score(img).score - quality_score(inv).score) < 0.05);
  }
}

TEST_CASE("score drops under blur on most corpus images") {
  const auto images = corpus();
  REQUIRE(images.size() >= 20);
  int lower = 0;
  for (const auto& img : images) {
    if (quality_score(gaussian_blur(img, 3.0)).score < quality_score(img).score) ++lower;
  }
  CHECK(lower >= static_cast<int>(std::ceil(0.9 * images.size())));
}

TEST_CASE("spectral mean never rises with blur") {
  for (const auto& img : corpus()) {
    double previous = sseq_features(img).scales[0].spectral_mean;
    for (double sigma : {1.0, 2.0, 4.0}) {
      const double now = sseq_features(gaussian_blur(img, sigma)).scales[0].spectral_mean;
      CHECK(now <= previous);
      previous = now;
    }
  }
}

TEST_CASE("score blends the two scale-1 means") {
  QualityFeatures f;
  f.scales[0].spatial_mean = 4.0;
  f.scales[0].spectral_mean = std::log2(63.0) / 2.0;
  f.scales[1].spatial_mean = 8.0;  // ignored
  CHECK(calibrated_score(f) == doctest::Approx(0.5 * 0.5 + 0.5 * 0.5));
  f.scales[0].spatial_mean = 9.0;
  f.scales[0].spectral_mean = 10.0;
  CHECK(calibrated_score(f) == 1.0);
}
