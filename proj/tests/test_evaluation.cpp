#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <boost/math/distributions/normal.hpp>

#include "fixtures.hpp"
#include "poolface/error.hpp"
#include "poolface/evaluation.hpp"

using namespace poolface;
using namespace poolface::eval;

namespace {

/// TPR of the best threshold whose FPR does not exceed the target.
double brute_tpr_at_fpr(const std::vector<double>& g, const std::vector<double>& i, double target) {
  std::vector<double> thresholds(g);
  thresholds.insert(thresholds.end(), i.begin(), i.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  double best = 0.0;
  for (double t : thresholds) {
    const double fpr = std::count_if(i.begin(), i.end(), [&](double s) { return s >= t; }) / double(i.size());
    const double tpr = std::count_if(g.begin(), g.end(), [&](double s) { return s >= t; }) / double(g.size());
    if (fpr <= target) best = std::max(best, tpr);
  }
  return best;
}

double brute_fpr_at_tpr(const std::vector<double>& g, const std::vector<double>& i, double target) {
  std::vector<double> thresholds(g);
  thresholds.insert(thresholds.end(), i.begin(), i.end());
  double best = 1.0;
  for (double t : thresholds) {
    const double fpr = std::count_if(i.begin(), i.end(), [&](double s) { return s >= t; }) / double(i.size());
    const double tpr = std::count_if(g.begin(), g.end(), [&](double s) { return s >= t; }) / double(g.size());
    if (tpr >= target) best = std::min(best, fpr);
  }
  return best;
}

/// Linear interpolation of the ROC polyline at x, integrated on a fine grid.
double numeric_auc(const RocCurve& c, double lo, double hi) {
  auto tpr_at = [&](double x) {
    double v = 0.0;
    for (std::size_t k = 1; k < c.points.size(); ++k) {
      const auto& a = c.points[k - 1];
      const auto& b = c.points[k];
      if (b.fpr > a.fpr && x >= a.fpr && x <= b.fpr) {
        v = std::max(v, a.tpr + (b.tpr - a.tpr) * (x - a.fpr) / (b.fpr - a.fpr));
      } else if (b.fpr == a.fpr && x == a.fpr) {
        v = std::max(v, b.tpr);
      }
    }
    return v;
  };
  const int n = 200000;
  const double h = (hi - lo) / n;
  double s = 0.0;
  for (int k = 0; k < n; ++k) s += tpr_at(lo + (k + 0.5) * h) * h;
  return s;
}

}  // namespace

TEST_CASE("perfect separation") {
  const std::vector<double> g{0.9, 0.8}, i{0.1, 0.2};
  const RocCurve c = roc(g, i);
  CHECK(c.points.front().fpr == 0.0);
  CHECK(c.points.back().fpr == 1.0);
  CHECK(c.points.back().tpr == 1.0);
  for (double t : {0.0001, 0.001, 0.01, 0.5, 1.0}) CHECK(tpr_at_fpr(c, t) == 1.0);
  CHECK(fpr_at_tpr(c).fpr == 0.0);
  CHECK(fpr_at_tpr(c).reachable);
  CHECK(nauc(c) == 1.0);
  CHECK(nauc(c, 0.0, 1.0) == 1.0);
}

TEST_CASE("identical lists give the diagonal") {
  std::vector<double> s;
  for (int k = 0; k < 1000; ++k) s.push_back(k / 1000.0);
  const RocCurve c = roc(s, s);
  for (const auto& p : c.points) CHECK(p.tpr == doctest::Approx(p.fpr));
  CHECK(std::abs(nauc(c) - 0.5) < 1e-9);
  CHECK(std::abs(nauc(c, 0.0, 1.0) - 0.5) < 1e-9);
  CHECK(std::abs(partial_auc(c, 0.0, 0.01) - 0.00005) < 1e-15);
  CHECK(std::abs(tpr_at_fpr(c, 0.1) - 0.1) <= 1.0 / 1000 + 1e-12);
  CHECK(std::abs(fpr_at_tpr(c, 0.85).fpr - 0.85) <= 1.0 / 1000 + 1e-12);
}

TEST_CASE("ROC errors and ties") {
  CHECK_THROWS_AS(roc(std::vector<double>{}, std::vector<double>{1.0}), Error);
  try {
    roc(std::vector<double>{1.0}, std::vector<double>{});
    FAIL("expected EmptyScoreList");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyScoreList);
  }
  const RocCurve c = roc(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5});
  CHECK(c.points.size() == 2);
  CHECK(tpr_at_fpr(c, 0.5) == 0.0);
  try {
    partial_auc(c, 0.2, 0.2);
    FAIL("expected DegenerateRange");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateRange);
  }
  CHECK_THROWS_AS(nauc(c, -0.1, 0.5), Error);
}

TEST_CASE("unreachable recall is flagged") {
  const RocCurve c = roc(std::vector<double>{0.0, 0.0, 0.0, 0.9}, std::vector<double>{0.5});
  const auto f = fpr_at_tpr(c, 0.85);
  CHECK(f.fpr == 1.0);
  CHECK_FALSE(f.reachable);
}

TEST_CASE("ROC readouts match a brute-force threshold sweep") {
  SplitMix64 rng(10);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> g, i;
    const int ng = 5 + static_cast<int>(rng.below(60)), ni = 5 + static_cast<int>(rng.below(200));
    // Coarse rounding forces ties.
    for (int k = 0; k < ng; ++k) g.push_back(std::round(rng.normal() * 10 + 8) / 10);
    for (int k = 0; k < ni; ++k) i.push_back(std::round(rng.normal() * 10) / 10);
    const RocCurve c = roc(g, i);
    for (double target : {0.0001, 0.001, 0.01, 0.05, 0.1, 0.3, 1.0}) {
      CHECK(tpr_at_fpr(c, target) == brute_tpr_at_fpr(g, i, target));
    }
    for (double target : {0.1, 0.5, 0.85, 1.0}) CHECK(fpr_at_tpr(c, target).fpr == brute_fpr_at_tpr(g, i, target));
    for (std::size_t k = 1; k < c.points.size(); ++k) {
      CHECK(c.points[k].fpr >= c.points[k - 1].fpr);
      CHECK(c.points[k].tpr >= c.points[k - 1].tpr);
    }
  }
}

TEST_CASE("nAUC matches numeric integration") {
  SplitMix64 rng(11);
  for (int t = 0; t < 5; ++t) {
    std::vector<double> g, i;
    for (int k = 0; k < 40; ++k) g.push_back(rng.normal() + 1.5);
    for (int k = 0; k < 300; ++k) i.push_back(rng.normal());
    const RocCurve c = roc(g, i);
    CHECK(std::abs(partial_auc(c, 0.0, 0.1) - numeric_auc(c, 0.0, 0.1)) < 1e-6);
    CHECK(std::abs(partial_auc(c, 0.05, 0.6) - numeric_auc(c, 0.05, 0.6)) < 1e-6);
    const double a = numeric_auc(c, 0.0, 0.01);
    CHECK(std::abs(nauc(c) - 0.5 * (1 + (a - 0.00005) / (0.01 - 0.00005))) < 1e-6);
  }
}

TEST_CASE("Gaussian ROC matches the closed form") {
  const boost::math::normal phi;
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> g, i;
  for (int k = 0; k < 10000; ++k) {
    g.push_back(n01(gen) + 1.0);
    i.push_back(n01(gen));
  }
  const RocCurve c = roc(g, i);
  for (double fpr : {0.1, 0.01}) {
    const double expected = boost::math::cdf(phi, 1.0 - boost::math::quantile(phi, 1.0 - fpr));
    CHECK(std::abs(tpr_at_fpr(c, fpr) - expected) <= 0.02);
  }
  // FPR at TPR 0.85: threshold t = 1 + z_{0.15}, FPR = 1 - Phi(t).
  const double t85 = 1.0 + boost::math::quantile(phi, 0.15);
  CHECK(std::abs(fpr_at_tpr(c, 0.85).fpr - (1.0 - boost::math::cdf(phi, t85))) <= 0.02);
}

TEST_CASE("CMC examples") {
  const std::vector<std::string> labels{"a", "b", "c"};
  const std::vector<double> diag{0.9, 0.1, 0.2, 0.3, 0.8, 0.1, 0.0, 0.4, 0.7};
  const CmcCurve c = cmc(diag, labels, labels);
  CHECK(c.rate(1) == 1.0);

  std::vector<std::string> g10;
  for (int k = 0; k < 10; ++k) g10.push_back("s" + std::to_string(k));
  const std::vector<std::string> probes{"s3", "s7"};
  const std::vector<double> flat(20, 0.5);
  const CmcCurve t = cmc(flat, probes, g10);
  CHECK(t.rate(1) == 0.0);
  CHECK(t.rate(9) == 0.0);
  CHECK(t.rate(10) == 1.0);
  CHECK(t.rate(50) == 1.0);

  try {
    cmc(std::vector<double>{0.1, 0.2}, std::vector<std::string>{"zz"}, std::vector<std::string>{"a", "b"});
    FAIL("expected ProbeSubjectNotEnrolled");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProbeSubjectNotEnrolled);
  }
}

TEST_CASE("CMC matches brute-force ranking") {
  SplitMix64 rng(12);
  std::vector<std::string> gallery;
  for (int k = 0; k < 20; ++k) gallery.push_back("g" + std::to_string(k));
  for (int t = 0; t < 20; ++t) {
    std::vector<std::string> probes;
    std::vector<double> scores;
    for (int p = 0; p < 50; ++p) {
      probes.push_back(gallery[rng.below(20)]);
      for (int k = 0; k < 20; ++k) scores.push_back(std::round(rng.uniform() * 20) / 20);
    }
    const CmcCurve c = cmc(scores, probes, gallery);
    REQUIRE(c.rates.size() == 20);
    std::vector<int> rank(50);
    for (int p = 0; p < 50; ++p) {
      const int mate = std::stoi(probes[p].substr(1));
      std::vector<std::pair<double, int>> row;
      for (int k = 0; k < 20; ++k) row.push_back({scores[p * 20 + k], k == mate ? 0 : 1});
      // Sort descending by score; ties put the mate last.
      std::sort(row.begin(), row.end(), [](auto a, auto b) { return a.first != b.first ? a.first > b.first : a.second > b.second; });
      for (int k = 0; k < 20; ++k) {
        if (row[k].second == 0) rank[p] = k + 1;
      }
    }
    for (int k = 1; k <= 20; ++k) {
      const double expect = std::count_if(rank.begin(), rank.end(), [&](int r) { return r <= k; }) / 50.0;
      CHECK(c.rate(k) == expect);
    }
    CHECK(c.rate(20) == 1.0);
  }
}

TEST_CASE("metrics are invariant to monotone transforms") {
  SplitMix64 rng(13);
  std::vector<double> g, i, g2, i2;
  for (int k = 0; k < 100; ++k) g.push_back(rng.uniform());
  for (int k = 0; k < 400; ++k) i.push_back(rng.uniform() * 0.8);
  for (double v : g) g2.push_back(std::exp(3 * v) - 7);
  for (double v : i) i2.push_back(std::exp(3 * v) - 7);
  EvalReport a, b;
  add_verification(a, g, i);
  add_verification(b, g2, i2);
  CHECK(*a.tpr_1f == *b.tpr_1f);
  CHECK(*a.fpr_85t == *b.fpr_85t);
  CHECK(*a.naucj == doctest::Approx(*b.naucj).epsilon(1e-12));
}

TEST_CASE("template size statistics") {
  CHECK(size_stats(std::vector<double>{2, 4}).mean == 3.0);
  CHECK(size_stats(std::vector<double>{2, 4}).sd == 1.0);
  const SizeStats ones = size_stats(std::vector<double>(9, 1.0));
  CHECK(ones.mean == 1.0);
  CHECK(ones.sd == 0.0);
  try {
    size_stats(std::vector<double>{});
    FAIL("expected EmptyCollection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCollection);
  }
  SplitMix64 rng(14);
  std::vector<double> xs;
  for (int k = 0; k < 137; ++k) xs.push_back(1 + static_cast<double>(rng.below(20)));
  double m = 0;
  for (double x : xs) m += x;
  m /= xs.size();
  double v = 0;
  for (double x : xs) v += (x - m) * (x - m);
  const SizeStats s = size_stats(xs);
  CHECK(std::abs(s.mean - m) < 1e-12);
  CHECK(std::abs(s.sd - std::sqrt(v / xs.size())) < 1e-12);

  std::vector<PooledTemplate> pooled(3);
  pooled[0].entries.resize(2);
  pooled[1].entries.resize(4);
  pooled[2].entries.resize(3);
  CHECK(template_size_stats(pooled).mean == 3.0);
}

TEST_CASE("report JSON round trip") {
  EvalReport r;
  r.mode = "image_per_bin";
  r.tpr_1f = 0.1 + 0.2;
  r.naucj = 1.0 / 3.0;
  r.fpr_85t = 0.42;
  r.fpr_85t_reachable = false;
  r.rank1 = 0.7;
  r.avg_img_g = {7.3, 2.6};
  r.genuine_pairs = 50;
  const std::string text = report_to_json(r);
  const EvalReport back = report_from_json(text);
  CHECK(report_to_json(back) == text);
  CHECK(*back.tpr_1f == 0.1 + 0.2);
  CHECK(!back.tpr_01f);
  CHECK(text.find("\"tpr_1f\"") < text.find("\"rank1\""));
  for (const char* key : {"tpr_1f", "tpr_01f", "tpr_001f", "naucj", "fpr_85t", "rank1", "rank5", "rank10",
                          "avg_img_g", "avg_img_p"}) {
    CHECK(text.find(std::string("\"") + key + "\"") != std::string::npos);
  }
}

TEST_CASE("curve CSV") {
  const RocCurve c = roc(std::vector<double>{1.0}, std::vector<double>{0.0});
  const std::string csv = roc_to_csv(c);
  CHECK(csv.rfind("fpr,tpr,threshold\n", 0) == 0);
  CmcCurve m;
  m.rates = {0.5, 1.0};
  CHECK(cmc_to_csv(m) == "rank,rate\n1,0.5\n2,1\n");
}
