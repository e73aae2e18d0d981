#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "poolface/alignment.hpp"
#include "poolface/core.hpp"
#include "poolface/pooling.hpp"
#include "poolface/pose.hpp"
#include "poolface/raster.hpp"
#include "poolface/rng.hpp"

namespace fixtures {

using namespace poolface;

inline Raster random_raster(SplitMix64& rng, int w, int h, int c) {
  Raster r(w, h, c);
  for (float& v : r.data()) v = static_cast<float>(rng.uniform());
  return r;
}

/// Smooth, textured test image: random blobs over a gradient plus edges and
/// grain. Stands in for natural images.
inline Raster natural_like(SplitMix64& rng, int w, int h) {
  Raster r(w, h, 1);
  struct Blob {
    double x, y, s, a;
  };
  std::vector<Blob> blobs;
  for (int k = 0; k < 25; ++k) {
    blobs.push_back({rng.uniform(0, w), rng.uniform(0, h), rng.uniform(2.0, 0.2 * w), rng.uniform(-0.3, 0.3)});
  }
  const double gx = rng.uniform(-0.3, 0.3), gy = rng.uniform(-0.3, 0.3);
  const double ex = rng.uniform(0.2 * w, 0.8 * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = 0.5 + gx * (x / double(w) - 0.5) + gy * (y / double(h) - 0.5);
      for (const auto& b : blobs) {
        const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
        v += b.a * std::exp(-d2 / (2 * b.s * b.s));
      }
      if (x > ex) v += 0.15;
      v += 0.06 * rng.normal();
      r.at(0, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
  }
  return r;
}

/// Frontal projection of the generic head: eye line level.
inline Landmarks frontal_landmarks(int w, int h, double z = 6.0) {
  const auto camera = pose::CameraModel::for_image(w, h);
  return pose::project_model(pose::generic_head_model(), Eigen::Matrix3d::Identity(),
                             Eigen::Vector3d(0, 0, z), camera);
}

inline pooling::PreparedFace prepared_face(const std::string& id, Raster raster, double yaw, double q,
                                           const pose::YawBinEdges& e = {}) {
  pose::AlignedFace f;
  f.raster = std::move(raster);
  f.media_id = id;
  f.pose.yaw_deg = yaw;
  quality::QualityScore s{q, quality::quantize_quality(q)};
  const BinKey bin = pooling::assign_bin(f, s, e);
  return {std::move(f), s, bin};
}

}  // namespace fixtures
