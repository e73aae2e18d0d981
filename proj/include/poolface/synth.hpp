#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "poolface/manifest.hpp"

namespace poolface::ingest {

struct SynthOptions {
  int n_subjects = 50;
  /// Mean gallery template size; probe templates average a third of it.
  double media_per_template = 24.0;
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// What was applied to one generated media item.
struct SynthTruth {
  std::string media_id;
  std::string template_id;
  std::string subject_id;
  MediaKind media_kind = MediaKind::still;
  double yaw_deg = 0.0;
  double roll_deg = 0.0;
  double inter_ocular_px = 0.0;
  /// Blur in canonical-crop pixels.
  double blur_level = 0.0;
  double noise_sd = 0.0;
};

struct SynthBenchmark {
  Manifest manifest;
  Protocol protocol;
  std::vector<SynthTruth> truth;
};

/// Generates a desk-scale benchmark under `out_dir`: images/*.png,
/// manifest.json, protocol.json and ground_truth.json. Each subject gets
/// one gallery template "<subject>_g" and one probe template "<subject>_p".
/// Media are renderings of a per-subject procedural face under a warp that
/// mimics yaw, in-plane rotation, scale, blur and noise. Landmarks follow
/// the same transforms; yaw labels are written as yaw_override_deg.
/// Output depends only on the options (not on `jobs`).
SynthBenchmark synth_benchmark(const SynthOptions& options, const std::string& out_dir);

std::string ground_truth_to_json(const std::vector<SynthTruth>& truth);

}  // namespace poolface::ingest
