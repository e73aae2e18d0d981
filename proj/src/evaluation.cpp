#include "poolface/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace poolface::eval {

RocCurve roc(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) {
    throw Error(ErrorCode::EmptyScoreList, "ROC needs genuine and impostor scores");
  }
  struct Scored {
    double score;
    bool genuine;
  };
  std::vector<Scored> all;
  all.reserve(genuine.size() + impostor.size());
  for (double s : genuine) all.push_back({s, true});
  for (double s : impostor) all.push_back({s, false});
  for (const auto& s : all) {
    if (!std::isfinite(s.score)) throw Error(ErrorCode::ValidationError, "non-finite score in ROC input");
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score > b.score; });

  const double ng = static_cast<double>(genuine.size());
  const double ni = static_cast<double>(impostor.size());
  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < all.size();) {
    const double threshold = all[i].score;
    while (i < all.size() && all[i].score == threshold) {
      (all[i].genuine ? tp : fp)++;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / ni, static_cast<double>(tp) / ng, threshold});
  }
  return curve;
}

double tpr_at_fpr(const RocCurve& curve, double target_fpr) {
  double best = 0.0;
  for (const auto& p : curve.points) {
    if (p.fpr <= target_fpr) best = std::max(best, p.tpr);
  }
  return best;
}

FprAtTpr fpr_at_tpr(const RocCurve& curve, double target_tpr) {
  for (const auto& p : curve.points) {
    if (p.tpr >= target_tpr) return {p.fpr, p.fpr < 1.0};
  }
  return {1.0, false};
}

double partial_auc(const RocCurve& curve, double lo, double hi) {
  if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) {
    throw Error(ErrorCode::DegenerateRange, "nAUC range must satisfy 0 <= lo < hi <= 1");
  }
  double area = 0.0;
  for (std::size_t k = 1; k < curve.points.size(); ++k) {
    const RocPoint& p0 = curve.points[k - 1];
    const RocPoint& p1 = curve.points[k];
    if (p1.fpr <= p0.fpr) continue;
    const double a = std::max(p0.fpr, lo);
    const double b = std::min(p1.fpr, hi);
    if (a >= b) continue;
    const double slope = (p1.tpr - p0.tpr) / (p1.fpr - p0.fpr);
    const double ta = p0.tpr + slope * (a - p0.fpr);
    const double tb = p0.tpr + slope * (b - p0.fpr);
    area += 0.5 * (b - a) * (ta + tb);
  }
  return area;
}

double nauc(const RocCurve& curve, double lo, double hi) {
  const double area = partial_auc(curve, lo, hi);
  const double chance = 0.5 * (hi * hi - lo * lo);
  const double perfect = hi - lo;
  return 0.5 * (1.0 + (area - chance) / (perfect - chance));
}

double CmcCurve::rate(std::size_t k) const {
  if (rates.empty() || k == 0) return 0.0;
  return rates[std::min(k, rates.size()) - 1];
}

std::vector<std::size_t> mate_ranks(std::span<const double> scores,
                                    std::span<const std::string> probe_labels,
                                    std::span<const std::string> gallery_labels) {
  const std::size_t np = probe_labels.size();
  const std::size_t ng = gallery_labels.size();
  if (scores.size() != np * ng) throw Error(ErrorCode::ShapeMismatch, "CMC score matrix has wrong size");
  std::map<std::string_view, std::size_t> mate_column;
  for (std::size_t j = 0; j < ng; ++j) {
    if (!mate_column.emplace(gallery_labels[j], j).second) {
      throw Error(ErrorCode::ValidationError,
                  "subject " + gallery_labels[j] + " is enrolled more than once");
    }
  }
  std::vector<std::size_t> ranks(np);
  for (std::size_t i = 0; i < np; ++i) {
    const auto it = mate_column.find(probe_labels[i]);
    if (it == mate_column.end()) {
      throw Error(ErrorCode::ProbeSubjectNotEnrolled,
                  "probe subject " + probe_labels[i] + " is not in the gallery");
    }
    const double mate = scores[i * ng + it->second];
    std::size_t rank = 1;
    for (std::size_t j = 0; j < ng; ++j) {
      if (j != it->second && scores[i * ng + j] >= mate) ++rank;
    }
    ranks[i] = rank;
  }
  return ranks;
}

CmcCurve cmc(std::span<const double> scores, std::span<const std::string> probe_labels,
             std::span<const std::string> gallery_labels) {
  const auto ranks = mate_ranks(scores, probe_labels, gallery_labels);
  CmcCurve curve;
  curve.rates.assign(gallery_labels.size(), 0.0);
  if (ranks.empty()) return curve;
  std::vector<std::size_t> at_rank(gallery_labels.size() + 1, 0);
  for (std::size_t r : ranks) ++at_rank[r];
  std::size_t cumulative = 0;
  for (std::size_t k = 1; k <= gallery_labels.size(); ++k) {
    cumulative += at_rank[k];
    curve.rates[k - 1] = static_cast<double>(cumulative) / static_cast<double>(ranks.size());
  }
  return curve;
}

SizeStats size_stats(std::span<const double> sizes) {
  if (sizes.empty()) throw Error(ErrorCode::EmptyCollection, "template size statistics of nothing");
  double sum = 0.0;
  for (double s : sizes) sum += s;
  const double mean = sum / static_cast<double>(sizes.size());
  double ss = 0.0;
  for (double s : sizes) ss += (s - mean) * (s - mean);
  return {mean, std::sqrt(ss / static_cast<double>(sizes.size()))};
}

SizeStats template_size_stats(std::span<const PooledTemplate> pooled) {
  std::vector<double> sizes;
  sizes.reserve(pooled.size());
  for (const auto& t : pooled) sizes.push_back(static_cast<double>(t.entries.size()));
  return size_stats(sizes);
}

void add_verification(EvalReport& report, std::span<const double> genuine,
                      std::span<const double> impostor) {
  const RocCurve curve = roc(genuine, impostor);
  report.tpr_1f = tpr_at_fpr(curve, 0.01);
  report.tpr_01f = tpr_at_fpr(curve, 0.001);
  report.tpr_001f = tpr_at_fpr(curve, 0.0001);
  report.naucj = nauc(curve, 0.0, 0.01);
  const FprAtTpr f = fpr_at_tpr(curve, 0.85);
  report.fpr_85t = f.fpr;
  report.fpr_85t_reachable = f.reachable;
  report.genuine_pairs = genuine.size();
  report.impostor_pairs = impostor.size();
}

void add_identification(EvalReport& report, std::span<const double> scores,
                        std::span<const std::string> probe_labels,
                        std::span<const std::string> gallery_labels) {
  const CmcCurve curve = cmc(scores, probe_labels, gallery_labels);
  report.rank1 = curve.rate(1);
  report.rank5 = curve.rate(5);
  report.rank10 = curve.rate(10);
  report.probes = probe_labels.size();
  report.gallery = gallery_labels.size();
}

namespace {

nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = r.mode;
  j["tpr_1f"] = opt(r.tpr_1f);
  j["tpr_01f"] = opt(r.tpr_01f);
  j["tpr_001f"] = opt(r.tpr_001f);
  j["naucj"] = opt(r.naucj);
  j["fpr_85t"] = opt(r.fpr_85t);
  j["fpr_85t_reachable"] = r.fpr_85t_reachable;
  j["rank1"] = opt(r.rank1);
  j["rank5"] = opt(r.rank5);
  j["rank10"] = opt(r.rank10);
  j["avg_img_g"] = {{"mean", r.avg_img_g.mean}, {"sd", r.avg_img_g.sd}};
  j["avg_img_p"] = {{"mean", r.avg_img_p.mean}, {"sd", r.avg_img_p.sd}};
  j["genuine_pairs"] = r.genuine_pairs;
  j["impostor_pairs"] = r.impostor_pairs;
  j["probes"] = r.probes;
  j["gallery"] = r.gallery;
  return j.dump(2) + "\n";
}

EvalReport report_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("report: ") + e.what());
  }
  EvalReport r;
  r.mode = j.value("mode", "");
  r.tpr_1f = opt_from(j, "tpr_1f");
  r.tpr_01f = opt_from(j, "tpr_01f");
  r.tpr_001f = opt_from(j, "tpr_001f");
  r.naucj = opt_from(j, "naucj");
  r.fpr_85t = opt_from(j, "fpr_85t");
  r.fpr_85t_reachable = j.value("fpr_85t_reachable", true);
  r.rank1 = opt_from(j, "rank1");
  r.rank5 = opt_from(j, "rank5");
  r.rank10 = opt_from(j, "rank10");
  r.avg_img_g = {j.at("avg_img_g").at("mean").get<double>(), j.at("avg_img_g").at("sd").get<double>()};
  r.avg_img_p = {j.at("avg_img_p").at("mean").get<double>(), j.at("avg_img_p").at("sd").get<double>()};
  r.genuine_pairs = j.value("genuine_pairs", std::size_t{0});
  r.impostor_pairs = j.value("impostor_pairs", std::size_t{0});
  r.probes = j.value("probes", std::size_t{0});
  r.gallery = j.value("gallery", std::size_t{0});
  return r;
}

std::string roc_to_csv(const RocCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "fpr,tpr,threshold\n";
  for (const auto& p : curve.points) {
    out << p.fpr << ',' << p.tpr << ',';
    if (std::isinf(p.threshold)) {
      out << "inf";
    } else {
      out << p.threshold;
    }
    out << '\n';
  }
  return out.str();
}

std::string cmc_to_csv(const CmcCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "rank,rate\n";
  for (std::size_t k = 0; k < curve.rates.size(); ++k) out << k + 1 << ',' << curve.rates[k] << '\n';
  return out.str();
}

}  // namespace poolface::eval
