#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "poolface/embedding.hpp"
#include "poolface/evaluation.hpp"
#include "poolface/manifest.hpp"
#include "poolface/pooling.hpp"

namespace poolface::ingest {

/// A media item that did not make it through preprocessing.
struct SkipRecord {
  std::string template_id;
  std::string media_id;
  std::string reason;
};

/// Per-media estimates, kept for the `pose` and `quality` reports.
struct MediaEstimate {
  std::string template_id;
  std::string media_id;
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  double roll_deg = 0.0;
  double reproj_rmse = 0.0;
  bool yaw_overridden = false;
  double quality = 0.0;
  BinKey bin;
};

/// Everything up to binning. Independent of the pooling mode, so one
/// prepared set serves several runs.
struct PreparedSet {
  std::vector<pooling::PreparedTemplate> templates;  // manifest order
  std::vector<MediaEstimate> estimates;              // manifest order, processed only
  std::vector<SkipRecord> skipped;                   // manifest order
  std::size_t total_media = 0;

  const pooling::PreparedTemplate* find(std::string_view template_id) const;
};

/// align -> pose -> quality -> bin for every media item, on `config.jobs`
/// workers. Per-media failures are logged in `skipped`.
PreparedSet prepare(const Manifest& manifest, const PipelineConfig& config);

/// Builds the extractor named by `config.extractor`.
embedding::Extractor make_extractor(const PipelineConfig& config);

/// Fused similarity of one ordered (probe side, gallery side) template pair.
struct PairScore {
  std::string probe;
  std::string gallery;
  double similarity = 0.0;
};

struct Evaluation {
  eval::EvalReport report;
  std::optional<eval::RocCurve> roc;
  std::optional<eval::CmcCurve> cmc;
  std::vector<std::string> probe_ids;
  std::vector<std::string> gallery_ids;
  /// probes x gallery similarities, row-major.
  std::vector<double> identification_scores;
};

struct PipelineResult {
  Evaluation evaluation;
  /// Non-empty templates in manifest order.
  std::vector<PooledTemplate> pooled;
  /// Every pair the protocol needs, sorted by (probe, gallery).
  std::vector<PairScore> pair_scores;
  std::vector<SkipRecord> skipped;
  std::size_t total_media = 0;

  const eval::EvalReport& report() const { return evaluation.report; }
};

/// Pools, embeds, matches and evaluates an already prepared set. Errors
/// carry the template ids involved.
PipelineResult run_prepared(const PreparedSet& prepared, const Protocol& protocol,
                            const PipelineConfig& config);

PipelineResult run_pipeline(const Manifest& manifest, const Protocol& protocol,
                            const PipelineConfig& config);

/// Pools templates only (no matching).
std::vector<PooledTemplate> pool_all(const PreparedSet& prepared, const PipelineConfig& config);

/// Tab-separated reports.
std::string pose_report(const PreparedSet& prepared);     // media_id yaw pitch roll rmse bin
std::string quality_report(const PreparedSet& prepared);  // media_id score bin
std::string skip_report(const std::vector<SkipRecord>& skipped);

struct ArtifactOptions {
  bool pooled_images = false;
};

/// Writes report.json, roc.csv, cmc.csv, scores.tsv, ident.fpf (+ sidecar),
/// template_sizes.json and skipped.tsv into `out_dir` (created if needed).
/// With `pooled_images`, also pooled/<template_id>_<pq>.png and
/// pooled/pool_index.json.
void write_artifacts(const PipelineResult& result, const std::string& out_dir,
                     const ArtifactOptions& options = {});

/// Writes pooled images and their index only.
void write_pooled_images(const std::vector<PooledTemplate>& pooled, const std::string& dir);

/// Score matrix in FPF1 with a sidecar {"rows": [...], "cols": [...],
/// "row_subjects": [...], "col_subjects": [...]}.
struct ScoreMatrix {
  std::vector<std::string> rows, cols;
  std::vector<std::string> row_subjects, col_subjects;
  std::vector<double> scores;
};
void write_score_matrix(const std::string& path, const ScoreMatrix& m);
ScoreMatrix read_score_matrix(const std::string& path);

/// "probe\tgallery\tsimilarity" lines, round-trip precision.
std::string pair_scores_to_tsv(const std::vector<PairScore>& scores);
std::vector<PairScore> pair_scores_from_tsv(const std::string& text);

/// Looks up every protocol pair in `scores` and computes the metrics.
/// `subject_of` maps template ids to subject ids. The mode and size
/// statistics are copied into the report as given.
Evaluation evaluate_scores(const std::vector<PairScore>& scores, const Protocol& protocol,
                           const std::map<std::string, std::string>& subject_of, const std::string& mode,
                           const eval::SizeStats& gallery_sizes, const eval::SizeStats& probe_sizes);

/// {"mode", "avg_img_g", "avg_img_p", "templates": [{template_id, subject_id,
/// entries, source_count}]}
std::string template_sizes_to_json(const PipelineResult& result);
struct TemplateSizes {
  std::string mode;
  eval::SizeStats gallery, probe;
};
TemplateSizes template_sizes_from_json(const std::string& text);

}  // namespace poolface::ingest
