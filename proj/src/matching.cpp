#include "poolface/matching.hpp"

#include <algorithm>
#include <cmath>

#include "poolface/embedding.hpp"

namespace poolface::matching {

std::size_t PairScoreMatrix::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

PairScoreMatrix pair_scores(const PooledTemplate& probe, const PooledTemplate& gallery) {
  PairScoreMatrix m;
  for (const auto& e : probe.entries) m.rows.push_back(e.entry_id);
  for (const auto& e : gallery.entries) m.cols.push_back(e.entry_id);
  m.scores.assign(m.rows.size() * m.cols.size(), 0.0);
  m.valid.assign(m.scores.size(), 0);
  for (std::size_t i = 0; i < probe.entries.size(); ++i) {
    for (std::size_t j = 0; j < gallery.entries.size(); ++j) {
      const auto& x = probe.entries[i].feature;
      const auto& y = gallery.entries[j].feature;
      if (x.extractor_id != y.extractor_id) {
        throw Error(ErrorCode::MixedExtractors, probe.template_id + " vs " + gallery.template_id +
                                                    ": features come from different extractors");
      }
      try {
        m.scores[i * m.cols.size() + j] = embedding::ncc(x, y);
        m.valid[i * m.cols.size() + j] = 1;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroVariance) throw;
      }
    }
  }
  if (m.valid_count() == 0) {
    throw Error(ErrorCode::InvalidTemplatePair,
                probe.template_id + " vs " + gallery.template_id + ": no scorable entry pair");
  }
  return m;
}

double softmax_fuse(std::span<const double> scores, double beta) {
  if (scores.empty()) throw Error(ErrorCode::EmptyMatrix, "softmax fusion of no scores");
  if (!(beta >= 0.0)) throw Error(ErrorCode::ValidationError, "beta must be non-negative");
  const double top = *std::max_element(scores.begin(), scores.end());
  double num = 0.0;
  double den = 0.0;
  for (double s : scores) {
    const double w = std::exp(beta * (s - top));
    num += w * s;
    den += w;
  }
  return num / den;
}

double softmax_fuse(const PairScoreMatrix& m, double beta) {
  std::vector<double> flat;
  flat.reserve(m.scores.size());
  for (std::size_t k = 0; k < m.scores.size(); ++k) {
    if (m.valid[k]) flat.push_back(m.scores[k]);
  }
  return softmax_fuse(flat, beta);
}

std::vector<double> default_beta_grid() { return beta_grid(0.0, 20.0, 1.0); }

std::vector<double> beta_grid(double start, double stop, double step) {
  if (!(step > 0.0) || stop < start || start < 0.0) {
    throw Error(ErrorCode::ValidationError, "beta grid needs 0 <= start <= stop and step > 0");
  }
  std::vector<double> grid;
  for (long k = 0;; ++k) {
    const double b = start + static_cast<double>(k) * step;
    if (b > stop + 1e-9) break;
    grid.push_back(b);
  }
  return grid;
}

double fuse_over_grid(const PairScoreMatrix& m, std::span<const double> betas) {
  if (betas.empty()) throw Error(ErrorCode::ValidationError, "empty beta grid");
  std::vector<double> flat;
  for (std::size_t k = 0; k < m.scores.size(); ++k) {
    if (m.valid[k]) flat.push_back(m.scores[k]);
  }
  double total = 0.0;
  for (double b : betas) total += softmax_fuse(flat, b);
  return total / static_cast<double>(betas.size());
}

double template_similarity(const PooledTemplate& probe, const PooledTemplate& gallery,
                           std::span<const double> betas) {
  return fuse_over_grid(pair_scores(probe, gallery), betas);
}

}  // namespace poolface::matching
