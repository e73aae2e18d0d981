#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "fixtures.hpp"
#include "poolface/error.hpp"
#include "poolface/pooling.hpp"

using namespace poolface;
using namespace poolface::pooling;

namespace {

Raster naive_mean(const std::vector<Raster>& xs) {
  Raster out(xs[0].width(), xs[0].height(), xs[0].channels());
  for (int c = 0; c < out.channels(); ++c) {
    for (int y = 0; y < out.height(); ++y) {
      for (int x = 0; x < out.width(); ++x) {
        double s = 0.0;
        for (const auto& r : xs) s += r.at(c, y, x);
        out.at(c, y, x) = static_cast<float>(s / xs.size());
      }
    }
  }
  return out;
}

/// 30 faces over 6 distinct bins.
PreparedTemplate spread_template() {
  SplitMix64 rng(11);
  const double yaws[] = {0, 25, 45};
  const double qs[] = {0.3, 0.8};
  PreparedTemplate t{"tpl", "subj", {}};
  for (int i = 0; i < 30; ++i) {
    const int cell = i % 6;
    t.faces.push_back(fixtures::prepared_face("m" + std::to_string(100 + i), fixtures::random_raster(rng, 8, 8, 3),
                                              yaws[cell / 2], qs[cell % 2]));
  }
  return t;
}

}  // namespace

TEST_CASE("pool_bin small cases") {
  Raster a(2, 2, 1, 0.0f), b(2, 2, 1, 1.0f);
  const std::vector<Raster> pair{a, b};
  const Raster m = pool_bin(std::span<const Raster>(pair));
  for (float v : m.data()) CHECK(v == 0.5f);

  SplitMix64 rng(1);
  const Raster x = fixtures::random_raster(rng, 5, 4, 3);
  const std::vector<Raster> same(7, x);
  CHECK(pool_bin(std::span<const Raster>(same)) == x);
}

TEST_CASE("pool_bin matches a naive mean") {
  SplitMix64 rng(2);
  for (int t = 0; t < 10; ++t) {
    std::vector<Raster> xs;
    for (int i = 0; i < 10; ++i) xs.push_back(fixtures::random_raster(rng, 9, 7, 3));
    CHECK(max_abs_diff(pool_bin(std::span<const Raster>(xs)), naive_mean(xs)) <= 1e-6f);
  }
}

TEST_CASE("pool_bin errors") {
  std::vector<Raster> none;
  try {
    pool_bin(std::span<const Raster>(none));
    FAIL("expected EmptyBin");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyBin);
  }
  std::vector<Raster> mixed{Raster(4, 4, 1), Raster(4, 4, 3)};
  try {
    pool_bin(std::span<const Raster>(mixed));
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("pool_bin is permutation invariant, bounded and linear") {
  SplitMix64 rng(3);
  for (int t = 0; t < 20; ++t) {
    std::vector<Raster> xs;
    const int n = 2 + static_cast<int>(rng.below(10));
    for (int i = 0; i < n; ++i) xs.push_back(fixtures::random_raster(rng, 6, 6, 1));
    const Raster ref = pool_bin(std::span<const Raster>(xs));
    auto shuffled = xs;
    for (int k = n - 1; k > 0; --k) std::swap(shuffled[k], shuffled[rng.below(k + 1)]);
    CHECK(pool_bin(std::span<const Raster>(shuffled)) == ref);

    for (std::size_t p = 0; p < ref.plane_size(); ++p) {
      float lo = 1.0f, hi = 0.0f;
      for (const auto& r : xs) {
        lo = std::min(lo, r.data()[p]);
        hi = std::max(hi, r.data()[p]);
      }
      CHECK(ref.data()[p] >= lo);
      CHECK(ref.data()[p] <= hi);
    }

    const float alpha = static_cast<float>(rng.uniform());
    auto scaled = xs;
    for (auto& r : scaled) {
      for (float& v : r.data()) v *= alpha;
    }
    Raster expect = ref;
    for (float& v : expect.data()) v *= alpha;
    CHECK(max_abs_diff(pool_bin(std::span<const Raster>(scaled)), expect) <= 1e-6f);
  }
}

TEST_CASE("median pooling") {
  std::vector<Raster> xs{Raster(1, 1, 1, 0.1f), Raster(1, 1, 1, 0.9f), Raster(1, 1, 1, 0.2f)};
  std::vector<const Raster*> ptrs;
  for (const auto& r : xs) ptrs.push_back(&r);
  CHECK(median_pool_bin(ptrs).at(0, 0, 0) == doctest::Approx(0.2));
  xs.emplace_back(1, 1, 1, 0.4f);
  ptrs = {&xs[0], &xs[1], &xs[2], &xs[3]};
  CHECK(median_pool_bin(ptrs).at(0, 0, 0) == doctest::Approx(0.3));
}

TEST_CASE("assign_bin combines yaw and quality bins") {
  const auto f = fixtures::prepared_face("a", Raster(4, 4, 1), -45.0, 0.6);
  CHECK(f.bin == BinKey{2, 2});
  CHECK(fixtures::prepared_face("b", Raster(4, 4, 1), 20.0, 0.75).bin == BinKey{1, 4});
  CHECK(fixtures::prepared_face("c", Raster(4, 4, 1), 19.99, 0.449).bin == BinKey{0, 0});
  CHECK(fixtures::prepared_face("d", Raster(4, 4, 1), 89.0, 1.0).bin == BinKey{3, 4});
}

TEST_CASE("image_per_bin on a six-bin template") {
  const PreparedTemplate t = spread_template();
  const PooledTemplate p = pool_template(t, PoolMode::image_per_bin);
  CHECK(p.entries.size() == 6);
  CHECK(p.source_count == 30);
  int members = 0;
  for (const auto& e : p.entries) {
    members += e.member_count;
    CHECK(e.entry_id == "tpl/" + e.key.code());
    CHECK(!e.image.empty());
    CHECK(std::is_sorted(e.member_ids.begin(), e.member_ids.end()));
  }
  CHECK(members == 30);
  CHECK_NOTHROW(validate(p));
  for (std::size_t i = 1; i < p.entries.size(); ++i) CHECK(p.entries[i - 1].key < p.entries[i].key);
}

TEST_CASE("pooling modes and entry counts") {
  const PreparedTemplate t = spread_template();
  CHECK(pool_template(t, PoolMode::all_images).entries.size() == 30);
  for (PoolMode m : {PoolMode::single_image, PoolMode::single_feature}) {
    const auto p = pool_template(t, m);
    REQUIRE(p.entries.size() == 1);
    CHECK(p.entries[0].key == BinKey{0, 0});
    CHECK(p.entries[0].entry_id == "tpl/all");
    CHECK(p.entries[0].member_count == 30);
  }
  const auto single = pool_template(t, PoolMode::single_image);
  std::vector<Raster> all;
  for (const auto& f : t.faces) all.push_back(f.face.raster);
  CHECK(max_abs_diff(single.entries[0].image, naive_mean(all)) <= 1e-6f);

  const auto feat = pool_template(t, PoolMode::feature_per_bin);
  CHECK(feat.feature_pooling_deferred());
  CHECK(feat.entries.size() == 6);
  for (const auto& e : feat.entries) {
    CHECK(e.image.empty());
    CHECK(static_cast<int>(e.member_images.size()) == e.member_count);
  }
  CHECK(pool_template(t, PoolMode::single_feature).entries[0].member_images.size() == 30);
}

TEST_CASE("template with one image") {
  PreparedTemplate t{"one", "s", {fixtures::prepared_face("x", Raster(4, 4, 1, 0.3f), 0, 0.5)}};
  for (PoolMode m : {PoolMode::single_image, PoolMode::single_feature, PoolMode::random_per_bin,
                     PoolMode::feature_per_bin, PoolMode::image_per_bin}) {
    CHECK(pool_template(t, m).entries.size() == 1);
  }
}

TEST_CASE("random_per_bin is seeded and picks members of the bin") {
  const PreparedTemplate t = spread_template();
  const auto a = pool_template(t, PoolMode::random_per_bin, {7});
  const auto b = pool_template(t, PoolMode::random_per_bin, {7});
  CHECK(a == b);
  REQUIRE(a.entries.size() == 6);
  for (const auto& e : a.entries) {
    CHECK(std::find(e.member_ids.begin(), e.member_ids.end(), e.entry_id) != e.member_ids.end());
  }
  bool any_differs = false;
  for (std::uint64_t seed = 8; seed < 20 && !any_differs; ++seed) {
    any_differs = pool_template(t, PoolMode::random_per_bin, {seed}) != a;
  }
  CHECK(any_differs);
}

TEST_CASE("pooling is invariant to template member order") {
  PreparedTemplate t = spread_template();
  const auto ref = pool_template(t, PoolMode::image_per_bin);
  std::reverse(t.faces.begin(), t.faces.end());
  CHECK(pool_template(t, PoolMode::image_per_bin) == ref);
}

TEST_CASE("empty template") {
  PreparedTemplate t{"none", "s", {}};
  try {
    pool_template(t, PoolMode::image_per_bin);
    FAIL("expected EmptyTemplate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyTemplate);
  }
}
