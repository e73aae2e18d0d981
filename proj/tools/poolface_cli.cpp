#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "poolface/error.hpp"
#include "poolface/manifest.hpp"
#include "poolface/pipeline.hpp"
#include "poolface/synth.hpp"

namespace fs = std::filesystem;
using namespace poolface;
using namespace poolface::ingest;

namespace {

struct SharedFlags {
  std::string manifest;
  std::string protocol;
  std::string config;
  std::string out;
  std::string mode;
  std::string extractor;
  std::string model3d;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
};

void add_shared(CLI::App* app, SharedFlags& f) {
  app->add_option("--manifest", f.manifest, "Dataset manifest (JSON)");
  app->add_option("--protocol", f.protocol, "Verification/identification protocol (JSON)");
  app->add_option("--config", f.config, "Pipeline configuration (JSON)");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--mode", f.mode, "Pooling mode")
      ->check(CLI::IsMember({"all_images", "single_image", "single_feature", "random_per_bin",
                             "feature_per_bin", "image_per_bin"}));
  app->add_option("--extractor", f.extractor, "pixels | external:PATH");
  app->add_option("--model3d", f.model3d, "3D landmark model (\"index x y z\" lines)");
  app->add_option("--seed", f.seed, "Seed for random_per_bin and synth");
  app->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
}

PipelineConfig resolve_config(const SharedFlags& f) {
  PipelineConfig c = f.config.empty() ? default_config() : load_config(f.config);
  if (!f.mode.empty()) c.mode = pool_mode_from_string(f.mode);
  if (!f.extractor.empty()) c.extractor = f.extractor;
  if (!f.model3d.empty()) c.model3d_path = f.model3d;
  if (f.seed) c.seed = *f.seed;
  if (f.jobs) c.jobs = *f.jobs;
  return c;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(ErrorCode::ValidationError, std::string(flag) + " is required");
}

Manifest manifest_of(const SharedFlags& f) {
  require(f.manifest, "--manifest");
  return load_manifest(f.manifest);
}

Protocol protocol_of(const SharedFlags& f, const Manifest& m) {
  require(f.protocol, "--protocol");
  Protocol p = load_protocol(f.protocol);
  validate_protocol(p, m);
  return p;
}

void write_out(const SharedFlags& f, const std::string& name, const std::string& text) {
  if (f.out.empty()) return;
  fs::create_directories(f.out);
  write_text_file((fs::path(f.out) / name).string(), text);
}

std::string skip_summary(const std::vector<SkipRecord>& skipped, std::size_t total) {
  return "processed " + std::to_string(total - skipped.size()) + " of " + std::to_string(total) +
         " media, skipped " + std::to_string(skipped.size()) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Template pooling and matching for set-based face recognition"};
  app.require_subcommand(1);
  SharedFlags f;

  auto* pose_cmd = app.add_subcommand("pose", "Estimate head pose per media item");
  auto* quality_cmd = app.add_subcommand("quality", "Score image quality per media item");
  auto* pool_cmd = app.add_subcommand("pool", "Pool templates and write pooled images");
  auto* match_cmd = app.add_subcommand("match", "Score every template pair the protocol needs");
  auto* eval_cmd = app.add_subcommand("eval", "Compute metrics from stored scores");
  auto* run_cmd = app.add_subcommand("run", "Full pipeline with all artifacts");
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic benchmark");
  for (auto* cmd : {pose_cmd, quality_cmd, pool_cmd, match_cmd, eval_cmd, run_cmd, synth_cmd}) add_shared(cmd, f);

  std::string scores_dir;
  eval_cmd->add_option("--scores", scores_dir, "Directory written by `match` or `run`")->required();
  bool pooled_images = false;
  run_cmd->add_flag("--pooled-images", pooled_images, "Also write pooled images");
  int subjects = 50;
  double media_per_template = 24.0;
  synth_cmd->add_option("--subjects", subjects, "Number of subjects")->check(CLI::Range(2, 100000));
  synth_cmd->add_option("--media-per-template", media_per_template, "Mean gallery template size")
      ->check(CLI::Range(1.0, 10000.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (synth_cmd->parsed()) {
      require(f.out, "--out");
      SynthOptions o;
      o.n_subjects = subjects;
      o.media_per_template = media_per_template;
      o.seed = f.seed.value_or(0);
      o.jobs = f.jobs.value_or(1);
      const auto bench = synth_benchmark(o, f.out);
      std::cout << "wrote " << bench.manifest.templates.size() << " templates, "
                << bench.manifest.media_count() << " media to " << f.out << "\n";
      return 0;
    }

    const PipelineConfig config = resolve_config(f);
    const Manifest manifest = manifest_of(f);

    if (pose_cmd->parsed() || quality_cmd->parsed()) {
      const PreparedSet prepared = prepare(manifest, config);
      const bool is_pose = pose_cmd->parsed();
      const std::string text = is_pose ? pose_report(prepared) : quality_report(prepared);
      std::cout << text;
      write_out(f, is_pose ? "pose.tsv" : "quality.tsv", text);
      write_out(f, "skipped.tsv", skip_report(prepared.skipped));
      std::cerr << skip_summary(prepared.skipped, prepared.total_media);
      return 0;
    }

    if (pool_cmd->parsed()) {
      require(f.out, "--out");
      const PreparedSet prepared = prepare(manifest, config);
      const auto pooled = pool_all(prepared, config);
      write_pooled_images(pooled, f.out);
      write_out(f, "skipped.tsv", skip_report(prepared.skipped));
      std::cerr << skip_summary(prepared.skipped, prepared.total_media);
      return 0;
    }

    const Protocol protocol = protocol_of(f, manifest);

    if (eval_cmd->parsed()) {
      const fs::path dir(scores_dir);
      const auto scores = pair_scores_from_tsv(read_text_file((dir / "scores.tsv").string()));
      const auto sizes = template_sizes_from_json(read_text_file((dir / "template_sizes.json").string()));
      std::map<std::string, std::string> subject_of;
      for (const auto& t : manifest.templates) subject_of[t.template_id] = t.subject_id;
      const Evaluation ev = evaluate_scores(scores, protocol, subject_of, sizes.mode, sizes.gallery, sizes.probe);
      const std::string text = eval::report_to_json(ev.report);
      std::cout << text;
      write_out(f, "report.json", text);
      if (ev.roc) write_out(f, "roc.csv", eval::roc_to_csv(*ev.roc));
      if (ev.cmc) write_out(f, "cmc.csv", eval::cmc_to_csv(*ev.cmc));
      return 0;
    }

    const PipelineResult result = run_pipeline(manifest, protocol, config);
    std::cerr << skip_summary(result.skipped, result.total_media);
    if (match_cmd->parsed()) {
      std::cout << pair_scores_to_tsv(result.pair_scores);
      if (!f.out.empty()) {
        fs::create_directories(f.out);
        write_artifacts(result, f.out);
      }
      return 0;
    }
    require(f.out, "--out");
    write_artifacts(result, f.out, {pooled_images});
    std::cout << eval::report_to_json(result.report());
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
