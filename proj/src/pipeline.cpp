#include "poolface/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include <json.hpp>

#include "poolface/alignment.hpp"
#include "poolface/image_io.hpp"
#include "poolface/matching.hpp"
#include "poolface/parallel.hpp"

namespace poolface::ingest {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct MediaOutcome {
  std::optional<pooling::PreparedFace> face;
  MediaEstimate estimate;
  std::string reason;
};

MediaOutcome prepare_media(const Manifest& manifest, const TemplateEntry& t, const MediaEntry& e,
                           const pose::Model3D& model, const PipelineConfig& config) {
  MediaOutcome out;
  try {
    FaceMedia media;
    media.media_id = e.media_id;
    media.source_path = manifest.resolve(e.path);
    media.image = read_image(media.source_path);
    media.landmarks = e.landmarks;
    media.media_kind = e.media_kind;
    validate(media);

    const auto camera = config.focal_px
                            ? pose::CameraModel::for_image(media.image.width(), media.image.height(),
                                                           *config.focal_px)
                            : pose::CameraModel::for_image(media.image.width(), media.image.height());
    pose::HeadPose head;
    if (e.yaw_override_deg) {
      const auto eyes = pose::eye_geometry(media.landmarks);
      head.yaw_deg = *e.yaw_override_deg;
      head.roll_deg = eyes.angle_deg;
      head.rotation = pose::compose_rotation(head.yaw_deg, 0.0, head.roll_deg);
    } else {
      head = pose::solve_pnp(media.landmarks, model, camera);
    }

    const auto rolled = pose::roll_compensate(media, head);
    FaceMedia upright = media;
    upright.image = rolled.raster;
    upright.landmarks = rolled.landmarks;
    pose::CanonicalFrame frame;
    frame.size = config.crop_size;
    pose::AlignedFace aligned = pose::canonical_align(upright, head, frame);

    quality::QualityScore q;
    if (e.quality_override) {
      q.score = *e.quality_override;
      q.quality_bin = quality::quantize_quality(q.score, config.quality_thresholds);
    } else {
      q = quality::quality_score(aligned.raster, config.quality_thresholds);
    }
    const BinKey bin = pooling::assign_bin(aligned, q, config.yaw_bins);

    out.estimate = {t.template_id, e.media_id, head.yaw_deg, head.pitch_deg, head.roll_deg,
                    head.reproj_rmse, e.yaw_override_deg.has_value(), q.score, bin};
    out.face = pooling::PreparedFace{std::move(aligned), q, bin};
  } catch (const std::exception& ex) {
    out.reason = ex.what();
  }
  return out;
}

void check_referenced(const PreparedSet& prepared, const Protocol& protocol) {
  std::set<std::string> ids;
  for (const auto& v : protocol.verification) {
    ids.insert(v.a);
    ids.insert(v.b);
  }
  ids.insert(protocol.gallery.begin(), protocol.gallery.end());
  ids.insert(protocol.probe.begin(), protocol.probe.end());
  for (const auto& id : ids) {
    const auto* t = prepared.find(id);
    if (!t) throw Error(ErrorCode::ValidationError, "protocol references unknown template " + id);
    if (t->faces.empty()) {
      throw Error(ErrorCode::EmptyTemplate, "template " + id + ": every media item was skipped");
    }
  }
}

eval::SizeStats side_stats(const std::vector<PooledTemplate>& pooled, const std::set<std::string>& ids) {
  std::vector<double> sizes;
  for (const auto& t : pooled) {
    if (ids.count(t.template_id)) sizes.push_back(static_cast<double>(t.entries.size()));
  }
  if (sizes.empty()) return {};
  return eval::size_stats(sizes);
}

}  // namespace

const pooling::PreparedTemplate* PreparedSet::find(std::string_view template_id) const {
  for (const auto& t : templates) {
    if (t.template_id == template_id) return &t;
  }
  return nullptr;
}

PreparedSet prepare(const Manifest& manifest, const PipelineConfig& config) {
  const pose::Model3D model =
      config.model3d_path.empty() ? pose::generic_head_model() : pose::load_model3d(config.model3d_path);

  struct Job {
    std::size_t t, m;
  };
  std::vector<Job> jobs;
  for (std::size_t t = 0; t < manifest.templates.size(); ++t) {
    for (std::size_t m = 0; m < manifest.templates[t].media.size(); ++m) jobs.push_back({t, m});
  }
  std::vector<MediaOutcome> outcomes(jobs.size());
  parallel_for(jobs.size(), config.jobs, [&](std::size_t i) {
    const auto& t = manifest.templates[jobs[i].t];
    outcomes[i] = prepare_media(manifest, t, t.media[jobs[i].m], model, config);
  });

  PreparedSet set;
  set.total_media = jobs.size();
  for (const auto& t : manifest.templates) set.templates.push_back({t.template_id, t.subject_id, {}});
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& t = manifest.templates[jobs[i].t];
    if (outcomes[i].face) {
      set.templates[jobs[i].t].faces.push_back(std::move(*outcomes[i].face));
      set.estimates.push_back(std::move(outcomes[i].estimate));
    } else {
      set.skipped.push_back({t.template_id, t.media[jobs[i].m].media_id, outcomes[i].reason});
    }
  }
  return set;
}

embedding::Extractor make_extractor(const PipelineConfig& config) {
  if (config.extractor == "pixels") return embedding::Extractor::baseline_pixels();
  constexpr std::string_view prefix = "external:";
  if (config.extractor.starts_with(prefix)) {
    auto store = std::make_shared<const embedding::FeatureStore>(
        embedding::FeatureStore::load(config.extractor.substr(prefix.size())));
    return embedding::Extractor::external(std::move(store));
  }
  throw Error(ErrorCode::ValidationError,
              "extractor must be 'pixels' or 'external:PATH', got '" + config.extractor + "'");
}

std::vector<PooledTemplate> pool_all(const PreparedSet& prepared, const PipelineConfig& config) {
  std::vector<const pooling::PreparedTemplate*> todo;
  for (const auto& t : prepared.templates) {
    if (!t.faces.empty()) todo.push_back(&t);
  }
  std::vector<PooledTemplate> pooled(todo.size());
  const pooling::PoolOptions options{config.seed, config.pixel_statistic};
  parallel_for(todo.size(), config.jobs, [&](std::size_t i) {
    try {
      pooled[i] = pooling::pool_template(*todo[i], config.mode, options);
    } catch (const Error& e) {
      rethrow_with_context(e, "template " + todo[i]->template_id);
    }
  });
  return pooled;
}

Evaluation evaluate_scores(const std::vector<PairScore>& scores, const Protocol& protocol,
                           const std::map<std::string, std::string>& subject_of, const std::string& mode,
                           const eval::SizeStats& gallery_sizes, const eval::SizeStats& probe_sizes) {
  std::map<std::pair<std::string, std::string>, double> lookup;
  for (const auto& s : scores) lookup[{s.probe, s.gallery}] = s.similarity;
  auto score = [&](const std::string& a, const std::string& b) {
    const auto it = lookup.find({a, b});
    if (it == lookup.end()) {
      throw Error(ErrorCode::ValidationError, "no score for template pair " + a + " / " + b);
    }
    return it->second;
  };
  auto subject = [&](const std::string& id) {
    const auto it = subject_of.find(id);
    if (it == subject_of.end()) throw Error(ErrorCode::ValidationError, "unknown template " + id);
    return it->second;
  };

  Evaluation ev;
  ev.report.mode = mode;
  ev.report.avg_img_g = gallery_sizes;
  ev.report.avg_img_p = probe_sizes;
  if (!protocol.verification.empty()) {
    std::vector<double> genuine, impostor;
    for (const auto& v : protocol.verification) (v.genuine ? genuine : impostor).push_back(score(v.a, v.b));
    eval::add_verification(ev.report, genuine, impostor);
    ev.roc = eval::roc(genuine, impostor);
  }
  if (protocol.has_identification()) {
    ev.probe_ids = protocol.probe;
    ev.gallery_ids = protocol.gallery;
    std::vector<std::string> probe_subjects, gallery_subjects;
    for (const auto& p : protocol.probe) probe_subjects.push_back(subject(p));
    for (const auto& g : protocol.gallery) gallery_subjects.push_back(subject(g));
    for (const auto& p : protocol.probe) {
      for (const auto& g : protocol.gallery) ev.identification_scores.push_back(score(p, g));
    }
    eval::add_identification(ev.report, ev.identification_scores, probe_subjects, gallery_subjects);
    ev.cmc = eval::cmc(ev.identification_scores, probe_subjects, gallery_subjects);
  }
  return ev;
}

PipelineResult run_prepared(const PreparedSet& prepared, const Protocol& protocol,
                            const PipelineConfig& config) {
  check_referenced(prepared, protocol);
  PipelineResult result;
  result.total_media = prepared.total_media;
  result.skipped = prepared.skipped;
  result.pooled = pool_all(prepared, config);

  const embedding::Extractor extractor = make_extractor(config);
  parallel_for(result.pooled.size(), config.jobs,
               [&](std::size_t i) { embedding::embed_template(result.pooled[i], extractor); });

  std::map<std::string, std::size_t> index;
  std::map<std::string, std::string> subject_of;
  for (std::size_t i = 0; i < result.pooled.size(); ++i) {
    index[result.pooled[i].template_id] = i;
    subject_of[result.pooled[i].template_id] = result.pooled[i].subject_id;
  }

  std::set<std::pair<std::string, std::string>> needed;
  for (const auto& v : protocol.verification) needed.insert({v.a, v.b});
  for (const auto& p : protocol.probe) {
    for (const auto& g : protocol.gallery) needed.insert({p, g});
  }
  result.pair_scores.reserve(needed.size());
  for (const auto& [a, b] : needed) result.pair_scores.push_back({a, b, 0.0});
  const std::vector<double> betas = config.betas.empty() ? matching::default_beta_grid() : config.betas;
  parallel_for(result.pair_scores.size(), config.jobs, [&](std::size_t i) {
    auto& s = result.pair_scores[i];
    s.similarity =
        matching::template_similarity(result.pooled[index.at(s.probe)], result.pooled[index.at(s.gallery)], betas);
  });

  std::set<std::string> gallery_side, probe_side;
  if (protocol.has_identification()) {
    gallery_side.insert(protocol.gallery.begin(), protocol.gallery.end());
    probe_side.insert(protocol.probe.begin(), protocol.probe.end());
  } else {
    for (const auto& v : protocol.verification) {
      probe_side.insert(v.a);
      gallery_side.insert(v.b);
    }
  }
  result.evaluation = evaluate_scores(result.pair_scores, protocol, subject_of,
                                      std::string(to_string(config.mode)),
                                      side_stats(result.pooled, gallery_side),
                                      side_stats(result.pooled, probe_side));
  return result;
}

PipelineResult run_pipeline(const Manifest& manifest, const Protocol& protocol,
                            const PipelineConfig& config) {
  validate_protocol(protocol, manifest);
  return run_prepared(prepare(manifest, config), protocol, config);
}

std::string pose_report(const PreparedSet& prepared) {
  std::ostringstream out;
  for (const auto& e : prepared.estimates) {
    out << e.media_id << '\t' << format_double(e.yaw_deg) << '\t' << format_double(e.pitch_deg) << '\t'
        << format_double(e.roll_deg) << '\t' << format_double(e.reproj_rmse) << '\t' << e.bin.pose_bin
        << '\n';
  }
  return out.str();
}

std::string quality_report(const PreparedSet& prepared) {
  std::ostringstream out;
  for (const auto& e : prepared.estimates) {
    out << e.media_id << '\t' << format_double(e.quality) << '\t' << e.bin.quality_bin << '\n';
  }
  return out.str();
}

std::string skip_report(const std::vector<SkipRecord>& skipped) {
  std::ostringstream out;
  out << "template_id\tmedia_id\treason\n";
  for (const auto& s : skipped) out << s.template_id << '\t' << s.media_id << '\t' << s.reason << '\n';
  return out.str();
}

std::string pair_scores_to_tsv(const std::vector<PairScore>& scores) {
  std::string out;
  for (const auto& s : scores) out += s.probe + '\t' + s.gallery + '\t' + format_double(s.similarity) + '\n';
  return out;
}

std::vector<PairScore> pair_scores_from_tsv(const std::string& text) {
  std::vector<PairScore> scores;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw Error(ErrorCode::ParseError, "scores line " + std::to_string(line_no) + ": expected 3 fields");
    }
    PairScore s{line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), 0.0};
    const char* first = line.data() + t2 + 1;
    const char* last = line.data() + line.size();
    const auto r = std::from_chars(first, last, s.similarity);
    if (r.ec != std::errc() || r.ptr != last) {
      throw Error(ErrorCode::ParseError, "scores line " + std::to_string(line_no) + ": bad similarity");
    }
    scores.push_back(std::move(s));
  }
  return scores;
}

void write_score_matrix(const std::string& path, const ScoreMatrix& m) {
  embedding::Fpf1Matrix f;
  f.rows = static_cast<std::uint32_t>(m.rows.size());
  f.cols = static_cast<std::uint32_t>(m.cols.size());
  f.values.assign(m.scores.begin(), m.scores.end());
  embedding::write_fpf1(path, f);
  ordered_json side;
  side["rows"] = m.rows;
  side["cols"] = m.cols;
  side["row_subjects"] = m.row_subjects;
  side["col_subjects"] = m.col_subjects;
  write_text_file(embedding::sidecar_path(path), side.dump(1) + "\n");
}

ScoreMatrix read_score_matrix(const std::string& path) {
  const auto f = embedding::read_fpf1(path);
  json side;
  try {
    side = json::parse(read_text_file(embedding::sidecar_path(path)));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, "score matrix sidecar: " + std::string(e.what()));
  }
  ScoreMatrix m;
  m.rows = side.at("rows").get<std::vector<std::string>>();
  m.cols = side.at("cols").get<std::vector<std::string>>();
  m.row_subjects = side.value("row_subjects", std::vector<std::string>{});
  m.col_subjects = side.value("col_subjects", std::vector<std::string>{});
  if (m.rows.size() != f.rows || m.cols.size() != f.cols) {
    throw Error(ErrorCode::ShapeMismatch, "score matrix sidecar does not match " + path);
  }
  m.scores.assign(f.values.begin(), f.values.end());
  return m;
}

std::string template_sizes_to_json(const PipelineResult& result) {
  ordered_json j;
  j["mode"] = result.report().mode;
  j["avg_img_g"] = {{"mean", result.report().avg_img_g.mean}, {"sd", result.report().avg_img_g.sd}};
  j["avg_img_p"] = {{"mean", result.report().avg_img_p.mean}, {"sd", result.report().avg_img_p.sd}};
  ordered_json list = ordered_json::array();
  for (const auto& t : result.pooled) {
    list.push_back({{"template_id", t.template_id},
                    {"subject_id", t.subject_id},
                    {"entries", t.entries.size()},
                    {"source_count", t.source_count}});
  }
  j["templates"] = std::move(list);
  return j.dump(1) + "\n";
}

TemplateSizes template_sizes_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    TemplateSizes s;
    s.mode = j.at("mode").get<std::string>();
    s.gallery = {j.at("avg_img_g").at("mean").get<double>(), j.at("avg_img_g").at("sd").get<double>()};
    s.probe = {j.at("avg_img_p").at("mean").get<double>(), j.at("avg_img_p").at("sd").get<double>()};
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("template sizes: ") + e.what());
  }
}

void write_pooled_images(const std::vector<PooledTemplate>& pooled, const std::string& dir) {
  fs::create_directories(dir);
  ordered_json index = ordered_json::array();
  for (const auto& t : pooled) {
    for (const auto& e : t.entries) {
      if (e.image.empty()) continue;
      std::string name = t.template_id + "_" + e.key.code();
      if (t.mode == PoolMode::all_images || t.mode == PoolMode::random_per_bin) {
        name = t.template_id + "_" + e.key.code() + "_" + e.entry_id;
      }
      std::replace_if(name.begin(), name.end(), [](char c) { return c == '/' || c == '\\'; }, '_');
      name += ".png";
      write_png((fs::path(dir) / name).string(), e.image);
      index.push_back({{"file", name},
                       {"template_id", t.template_id},
                       {"entry_id", e.entry_id},
                       {"pose_bin", e.key.pose_bin},
                       {"quality_bin", e.key.quality_bin},
                       {"member_count", e.member_count},
                       {"member_ids", e.member_ids}});
    }
  }
  write_text_file((fs::path(dir) / "pool_index.json").string(), index.dump(1) + "\n");
}

void write_artifacts(const PipelineResult& result, const std::string& out_dir,
                     const ArtifactOptions& options) {
  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  const Evaluation& ev = result.evaluation;
  write_text_file((out / "report.json").string(), eval::report_to_json(ev.report));
  if (ev.roc) write_text_file((out / "roc.csv").string(), eval::roc_to_csv(*ev.roc));
  if (ev.cmc) write_text_file((out / "cmc.csv").string(), eval::cmc_to_csv(*ev.cmc));
  write_text_file((out / "scores.tsv").string(), pair_scores_to_tsv(result.pair_scores));
  if (!ev.probe_ids.empty()) {
    std::map<std::string, std::string> subject_of;
    for (const auto& t : result.pooled) subject_of[t.template_id] = t.subject_id;
    ScoreMatrix m;
    m.rows = ev.probe_ids;
    m.cols = ev.gallery_ids;
    for (const auto& p : m.rows) m.row_subjects.push_back(subject_of[p]);
    for (const auto& g : m.cols) m.col_subjects.push_back(subject_of[g]);
    m.scores = ev.identification_scores;
    write_score_matrix((out / "ident.fpf").string(), m);
  }
  write_text_file((out / "template_sizes.json").string(), template_sizes_to_json(result));
  write_text_file((out / "skipped.tsv").string(), skip_report(result.skipped));
  if (options.pooled_images) write_pooled_images(result.pooled, (out / "pooled").string());
}

}  // namespace poolface::ingest
