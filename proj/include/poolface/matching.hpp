#pragma once

#include <span>
#include <string>
#include <vector>

#include "poolface/core.hpp"

namespace poolface::matching {

/// NCC scores between every probe entry (rows) and gallery entry (cols).
/// Pairs whose NCC was undefined are marked skipped and excluded from fusion.
struct PairScoreMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  std::vector<double> scores;   // row-major
  std::vector<char> valid;      // row-major, 1 = scored

  double at(std::size_t r, std::size_t c) const { return scores[r * cols.size() + c]; }
  std::size_t valid_count() const;
};

/// Throws MixedExtractors, or InvalidTemplatePair if no pair could be scored.
PairScoreMatrix pair_scores(const PooledTemplate& probe, const PooledTemplate& gallery);

/// Score-weighted average sum(w s) / sum(w), w = exp(beta s), over all
/// scored pairs jointly. Exponents are shifted by the max score.
double softmax_fuse(const PairScoreMatrix& m, double beta);

/// Flat-list form of the same fusion.
double softmax_fuse(std::span<const double> scores, double beta);

/// Integers 0..20.
std::vector<double> default_beta_grid();

/// start, start+step, ... up to and including stop (within 1e-9).
std::vector<double> beta_grid(double start, double stop, double step);

/// Mean of softmax_fuse over the grid.
double fuse_over_grid(const PairScoreMatrix& m, std::span<const double> betas);

double template_similarity(const PooledTemplate& probe, const PooledTemplate& gallery,
                           std::span<const double> betas);

}  // namespace poolface::matching
