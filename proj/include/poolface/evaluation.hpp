#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "poolface/core.hpp"

namespace poolface::eval {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  /// Accept when score >= threshold. The first point uses +infinity.
  double threshold = 0.0;
};

/// Empirical ROC, one point per distinct score (ties share a step).
/// Starts at (0, 0) and ends at (1, 1).
struct RocCurve {
  std::vector<RocPoint> points;
};

RocCurve roc(std::span<const double> genuine, std::span<const double> impostor);

/// TPR at the largest achieved FPR <= target. Step readout, no interpolation.
double tpr_at_fpr(const RocCurve& curve, double target_fpr);

struct FprAtTpr {
  double fpr = 1.0;
  /// False when the target recall is only met at FPR = 1.
  bool reachable = false;
};

/// Smallest achieved FPR with TPR >= target.
FprAtTpr fpr_at_tpr(const RocCurve& curve, double target_tpr = 0.85);

/// Trapezoidal area under the ROC over [lo, hi].
/// Throws DegenerateRange unless 0 <= lo < hi <= 1.
double partial_auc(const RocCurve& curve, double lo, double hi);

/// Partial area standardized so the chance diagonal scores 0.5 and a
/// perfect curve 1: 0.5 * (1 + (A - Amin) / (Amax - Amin)) with
/// Amin = (hi^2 - lo^2) / 2 and Amax = hi - lo.
double nauc(const RocCurve& curve, double lo = 0.0, double hi = 0.01);

/// Identification rate at ranks 1..K, K = gallery size.
struct CmcCurve {
  std::vector<double> rates;

  /// rate at rank k (ranks past K read rate(K)).
  double rate(std::size_t k) const;
};

/// `scores` is probes x gallery, row-major. The mate rank counts every
/// other gallery entry scoring >= the mate, so ties rank against the probe.
/// Throws ProbeSubjectNotEnrolled, or ValidationError when a subject has
/// more than one gallery entry.
CmcCurve cmc(std::span<const double> scores, std::span<const std::string> probe_labels,
             std::span<const std::string> gallery_labels);

/// 1-based rank of each probe's mate, same conventions as cmc().
std::vector<std::size_t> mate_ranks(std::span<const double> scores,
                                    std::span<const std::string> probe_labels,
                                    std::span<const std::string> gallery_labels);

struct SizeStats {
  double mean = 0.0;
  double sd = 0.0;  // population
};

SizeStats template_size_stats(std::span<const PooledTemplate> pooled);
SizeStats size_stats(std::span<const double> sizes);

/// Scalar metrics named after the result-table columns.
struct EvalReport {
  std::string mode;
  std::optional<double> tpr_1f, tpr_01f, tpr_001f, naucj, fpr_85t;
  bool fpr_85t_reachable = true;
  std::optional<double> rank1, rank5, rank10;
  SizeStats avg_img_g, avg_img_p;
  std::size_t genuine_pairs = 0;
  std::size_t impostor_pairs = 0;
  std::size_t probes = 0;
  std::size_t gallery = 0;
};

/// Fills the verification fields from genuine/impostor similarity lists.
void add_verification(EvalReport& report, std::span<const double> genuine,
                      std::span<const double> impostor);

/// Fills the identification fields from a probe x gallery score matrix.
void add_identification(EvalReport& report, std::span<const double> scores,
                        std::span<const std::string> probe_labels,
                        std::span<const std::string> gallery_labels);

/// Deterministic JSON text (fixed key order, round-trip precision).
std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(const std::string& text);

/// "fpr,tpr,threshold" lines with a header.
std::string roc_to_csv(const RocCurve& curve);
/// "rank,rate" lines with a header.
std::string cmc_to_csv(const CmcCurve& curve);

}  // namespace poolface::eval
