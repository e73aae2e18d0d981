#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numeric>

#include "fixtures.hpp"
#include "poolface/embedding.hpp"
#include "poolface/error.hpp"
#include "poolface/feature_store.hpp"
#include "poolface/matching.hpp"

using namespace poolface;
using namespace poolface::embedding;

namespace {

FeatureVector vec(std::vector<double> v, std::string id = "x") { return {std::move(v), std::move(id)}; }

FeatureVector random_unit(SplitMix64& rng, std::size_t d) {
  FeatureVector f{{}, "x"};
  double n = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    f.values.push_back(rng.normal());
    n += f.values.back() * f.values.back();
  }
  for (double& v : f.values) v /= std::sqrt(n);
  return f;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = a.size();
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

PooledTemplate with_features(const std::string& id, const std::vector<FeatureVector>& fs) {
  PooledTemplate t;
  t.template_id = id;
  t.subject_id = id;
  t.mode = PoolMode::all_images;
  t.source_count = static_cast<int>(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) {
    PooledEntry e;
    e.entry_id = id + "_" + std::to_string(i);
    e.member_count = 1;
    e.feature = fs[i];
    t.entries.push_back(e);
  }
  return t;
}

}  // namespace

TEST_CASE("baseline extractor output is unit norm and zero mean") {
  SplitMix64 rng(1);
  const Extractor ex = Extractor::baseline_pixels();
  CHECK(ex.dim() == 1024);
  for (int i = 0; i < 5; ++i) {
    const Raster r = fixtures::random_raster(rng, 128, 128, 3);
    const FeatureVector f = ex.extract(r, "m");
    REQUIRE(f.dim() == 1024);
    double n2 = 0, s = 0;
    for (double v : f.values) {
      n2 += v * v;
      s += v;
    }
    CHECK(std::sqrt(n2) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(s) < 1e-9);
    CHECK(f.extractor_id == ex.id());
    CHECK(ex.extract(r, "other") == f);
  }
  try {
    ex.extract(Raster(64, 64, 1, 0.5f), "flat");
    FAIL("expected ZeroVarianceImage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVarianceImage);
  }
}

TEST_CASE("area resize averages blocks") {
  Raster g(4, 4, 1);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) g.at(0, y, x) = static_cast<float>(y * 4 + x);
  }
  const Raster s = area_resize(g, 2, 2);
  CHECK(s.at(0, 0, 0) == doctest::Approx((0 + 1 + 4 + 5) / 4.0));
  CHECK(s.at(0, 1, 1) == doctest::Approx((10 + 11 + 14 + 15) / 4.0));
}

TEST_CASE("pool_features") {
  const auto p = pool_features(std::vector{vec({1, 0}), vec({0, 1})});
  CHECK(p.values[0] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(p.values[1] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));

  SplitMix64 rng(4);
  const FeatureVector x = random_unit(rng, 16);
  const auto same = pool_features(std::vector<FeatureVector>(5, x));
  for (std::size_t i = 0; i < x.dim(); ++i) CHECK(same.values[i] == doctest::Approx(x.values[i]).epsilon(1e-12));

  std::vector<FeatureVector> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(random_unit(rng, 32));
  std::vector<double> mean(32, 0.0);
  for (const auto& f : xs) {
    for (int k = 0; k < 32; ++k) mean[k] += f.values[k];
  }
  double n = 0;
  for (double& v : mean) {
    v /= 10.0;
    n += v * v;
  }
  const auto pooled = pool_features(xs);
  for (int k = 0; k < 32; ++k) CHECK(std::abs(pooled.values[k] - mean[k] / std::sqrt(n)) < 1e-9);

  try {
    pool_features(std::vector<FeatureVector>{});
    FAIL("expected EmptySequence");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptySequence);
  }
  try {
    pool_features(std::vector{vec({1, 0}, "a"), vec({0, 1}, "b")});
    FAIL("expected MixedExtractors");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MixedExtractors);
  }
}

TEST_CASE("ncc is Pearson correlation") {
  CHECK(ncc(vec({1, 2, 3}), vec({3, 2, 1})) == doctest::Approx(-1.0).epsilon(1e-12));
  try {
    ncc(vec({1, 1, 1}), vec({1, 2, 3}));
    FAIL("expected ZeroVariance");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroVariance);
  }
  SplitMix64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const auto x = random_unit(rng, 20);
    const auto y = random_unit(rng, 20);
    const double s = ncc(x, y);
    CHECK(std::abs(ncc(x, x) - 1.0) < 1e-9);
    CHECK(s == ncc(y, x));
    CHECK(std::abs(s) <= 1.0 + 1e-12);
    CHECK(std::abs(s - pearson(x.values, y.values)) < 1e-12);
    const double a = rng.uniform(0.1, 5.0), b = rng.uniform(-3, 3);
    auto z = x;
    for (double& v : z.values) v = a * v + b;
    CHECK(std::abs(ncc(z, y) - s) < 1e-9);
  }
}

TEST_CASE("feature store round trip is bit-exact") {
  const auto dir = std::filesystem::temp_directory_path() / "poolface_test_store";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "feats.fpf").string();

  SplitMix64 rng(6);
  FeatureStore store("net", 8);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 5; ++i) {
    std::vector<double> v;
    for (int k = 0; k < 8; ++k) v.push_back(static_cast<float>(rng.normal()));
    rows.push_back(v);
    store.add("t/" + std::to_string(i) + "0", v);
  }
  CHECK_THROWS_AS(store.add("t/00", rows[0]), Error);
  CHECK_THROWS_AS(store.add("short", {1.0}), Error);
  store.save(path);

  const FeatureStore back = FeatureStore::load(path);
  CHECK(back.extractor_id() == "net");
  CHECK(back.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(back.lookup("t/" + std::to_string(i) + "0").values == rows[i]);

  const Extractor ex = Extractor::external(std::make_shared<FeatureStore>(back));
  CHECK(ex.extract(Raster(), "t/30").values == rows[3]);
  try {
    ex.extract(Raster(), "missing");
    FAIL("expected MissingExternalFeature");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingExternalFeature);
  }

  Fpf1Matrix m{2, 3, {1.5f, -2.0f, 0.0f, 3.25f, 1e-8f, -0.0f}};
  write_fpf1(path, m);
  const auto mb = read_fpf1(path);
  CHECK(mb.rows == 2);
  CHECK(mb.cols == 3);
  CHECK(std::memcmp(mb.values.data(), m.values.data(), 6 * sizeof(float)) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("embed_template pools deferred member features") {
  SplitMix64 rng(7);
  PooledTemplate t;
  t.template_id = "t";
  t.mode = PoolMode::feature_per_bin;
  PooledEntry e;
  e.entry_id = "t/00";
  for (int i = 0; i < 3; ++i) {
    e.member_images.push_back(fixtures::random_raster(rng, 64, 64, 1));
    e.member_ids.push_back("m" + std::to_string(i));
  }
  e.member_count = 3;
  t.entries.push_back(e);
  const Extractor ex = Extractor::baseline_pixels();
  embed_template(t, ex);
  std::vector<FeatureVector> fs;
  for (const auto& r : e.member_images) fs.push_back(ex.extract(r, ""));
  const auto expect = pool_features(fs);
  REQUIRE(t.entries[0].feature.dim() == expect.dim());
  for (std::size_t k = 0; k < expect.dim(); ++k) {
    CHECK(t.entries[0].feature.values[k] == doctest::Approx(expect.values[k]).epsilon(1e-12));
  }
}

using namespace poolface::matching;

TEST_CASE("softmax fusion examples") {
  const std::vector<double> s01{0.0, 1.0};
  CHECK(softmax_fuse(s01, 0.0) == 0.5);
  for (double b : {0.0, 1.0, 20.0, 500.0}) CHECK(softmax_fuse(std::vector{0.37}, b) == doctest::Approx(0.37));
  // Direct evaluation of (0.2 e^4 + 0.8 e^16) / (e^4 + e^16).
  const double direct = (0.2 * std::exp(4.0) + 0.8 * std::exp(16.0)) / (std::exp(4.0) + std::exp(16.0));
  CHECK(std::abs(softmax_fuse(std::vector{0.2, 0.8}, 20.0) - direct) < 1e-12);
  CHECK(std::abs(direct - (0.8 - 0.6 * std::exp(-12.0) / (1 + std::exp(-12.0)))) < 1e-15);
  CHECK_THROWS_AS(softmax_fuse(std::vector<double>{}, 1.0), Error);
}

TEST_CASE("softmax fusion properties") {
  SplitMix64 rng(8);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> s;
    const int n = 1 + static_cast<int>(rng.below(12));
    for (int i = 0; i < n; ++i) s.push_back(rng.uniform(-1, 1));
    const double lo = *std::min_element(s.begin(), s.end());
    const double hi = *std::max_element(s.begin(), s.end());
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
    CHECK(std::abs(softmax_fuse(s, 0.0) - mean) < 1e-12);
    double prev = -2.0;
    for (double b = 0.0; b <= 50.0; b += 0.5) {
      const double f = softmax_fuse(s, b);
      CHECK(f >= lo - 1e-15);
      CHECK(f <= hi + 1e-15);
      CHECK(f >= prev - 1e-12);
      prev = f;
      double num = 0, den = 0;
      for (double v : s) {
        num += v * std::exp(b * v);
        den += std::exp(b * v);
      }
      CHECK(std::abs(f - num / den) < 1e-9);
    }
  }
}

TEST_CASE("beta grids") {
  const auto g = default_beta_grid();
  REQUIRE(g.size() == 21);
  for (int i = 0; i <= 20; ++i) CHECK(g[i] == i);
  CHECK(beta_grid(0, 1, 0.25) == std::vector<double>{0, 0.25, 0.5, 0.75, 1.0});
  CHECK(beta_grid(0, 2, 0.3).size() == 7);
  CHECK_THROWS_AS(beta_grid(0, 1, 0), Error);
}

TEST_CASE("pair scores and template similarity") {
  SplitMix64 rng(9);
  std::vector<FeatureVector> pf, gf;
  for (int i = 0; i < 3; ++i) pf.push_back(random_unit(rng, 10));
  for (int i = 0; i < 4; ++i) gf.push_back(random_unit(rng, 10));
  const auto P = with_features("p", pf);
  const auto G = with_features("g", gf);
  const PairScoreMatrix m = pair_scores(P, G);
  REQUIRE(m.scores.size() == 12);
  CHECK(m.valid_count() == 12);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) CHECK(m.at(r, c) == ncc(pf[r], gf[c]));
  }

  const auto betas = default_beta_grid();
  double brute = 0.0;
  for (double b : betas) {
    double num = 0, den = 0;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        const double s = ncc(pf[r], gf[c]);
        num += s * std::exp(b * s);
        den += std::exp(b * s);
      }
    }
    brute += num / den / betas.size();
  }
  const double sim = template_similarity(P, G, betas);
  CHECK(std::abs(sim - brute) < 1e-9);
  CHECK(std::abs(sim - template_similarity(G, P, betas)) < 1e-12);

  const auto one_p = with_features("p1", {pf[0]});
  const auto one_g = with_features("g1", {gf[0]});
  CHECK(template_similarity(one_p, one_g, betas) == doctest::Approx(ncc(pf[0], gf[0])).epsilon(1e-12));

  const PairScoreMatrix self = pair_scores(P, P);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(self.at(i, i) - 1.0) < 1e-9);
}

TEST_CASE("pair scores skip undefined pairs") {
  const auto P = with_features("p", {vec({1, 1, 1}), vec({1, 2, 3})});
  const auto G = with_features("g", {vec({3, 2, 1})});
  const auto m = pair_scores(P, G);
  CHECK(m.valid_count() == 1);
  CHECK(template_similarity(P, G, default_beta_grid()) == doctest::Approx(-1.0));
  const auto bad = with_features("b", {vec({2, 2, 2})});
  try {
    pair_scores(bad, G);
    FAIL("expected InvalidTemplatePair");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidTemplatePair);
  }
  try {
    pair_scores(with_features("o", {vec({1, 2, 4}, "other")}), G);
    FAIL("expected MixedExtractors");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MixedExtractors);
  }
}
