#include "poolface/alignment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace poolface::pose {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

Point2 midpoint(const Point2& a, const Point2& b) { return {(a.x + b.x) * 0.5, (a.y + b.y) * 0.5}; }

/// p' = scale * Rot(angle) * (p - from) + to
struct Similarity {
  double scale = 1.0;
  double cos_a = 1.0;
  double sin_a = 0.0;
  Point2 from;
  Point2 to;

  Point2 forward(const Point2& p) const {
    if (!p.valid()) return p;
    const double dx = p.x - from.x;
    const double dy = p.y - from.y;
    return {scale * (cos_a * dx - sin_a * dy) + to.x, scale * (sin_a * dx + cos_a * dy) + to.y};
  }

  Point2 inverse(double x, double y) const {
    const double dx = (x - to.x) / scale;
    const double dy = (y - to.y) / scale;
    return {cos_a * dx + sin_a * dy + from.x, -sin_a * dx + cos_a * dy + from.y};
  }
};

Raster warp(const Raster& src, const Similarity& sim, int out_w, int out_h) {
  const int sub = sim.scale < 1.0
                      ? std::min(8, static_cast<int>(std::ceil(1.0 / sim.scale - 1e-9)))
                      : 1;
  Raster out(out_w, out_h, src.channels());
  const double weight = 1.0 / (sub * sub);
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (int c = 0; c < src.channels(); ++c) {
        if (sub == 1) {
          const Point2 p = sim.inverse(x, y);
          out.at(c, y, x) = sample_bilinear(src, c, p.x, p.y);
          continue;
        }
        double acc = 0.0;
        for (int j = 0; j < sub; ++j) {
          for (int i = 0; i < sub; ++i) {
            const Point2 p = sim.inverse(x + (i + 0.5) / sub - 0.5, y + (j + 0.5) / sub - 0.5);
            acc += sample_bilinear(src, c, p.x, p.y);
          }
        }
        out.at(c, y, x) = static_cast<float>(acc * weight);
      }
    }
  }
  return out;
}

}  // namespace

EyeGeometry eye_geometry(const Landmarks& lm) {
  using namespace landmark;
  for (int i : {kLeftEyeOuter, kLeftEyeInner, kRightEyeInner, kRightEyeOuter}) {
    if (!lm[i].valid()) {
      throw Error(ErrorCode::MissingEyeLandmarks, "eye corner " + std::to_string(i) + " missing");
    }
  }
  EyeGeometry g;
  g.left_center = midpoint(lm[kLeftEyeOuter], lm[kLeftEyeInner]);
  g.right_center = midpoint(lm[kRightEyeInner], lm[kRightEyeOuter]);
  g.midpoint = midpoint(g.left_center, g.right_center);
  const double dx = g.right_center.x - g.left_center.x;
  const double dy = g.right_center.y - g.left_center.y;
  g.distance = std::hypot(dx, dy);
  g.angle_deg = std::atan2(dy, dx) * kDeg;
  return g;
}

RollCompensated roll_compensate(const FaceMedia& media, const HeadPose& /*pose*/) {
  const EyeGeometry eyes = eye_geometry(media.landmarks);
  RollCompensated out;
  out.rotation_deg = -eyes.angle_deg;
  if (eyes.angle_deg == 0.0) {
    out.raster = media.image;
    out.landmarks = media.landmarks;
    return out;
  }
  Similarity sim;
  sim.cos_a = std::cos(out.rotation_deg / kDeg);
  sim.sin_a = std::sin(out.rotation_deg / kDeg);
  sim.from = eyes.midpoint;
  sim.to = eyes.midpoint;
  out.raster = warp(media.image, sim, media.image.width(), media.image.height());
  for (int i = 0; i < kLandmarkCount; ++i) out.landmarks[i] = sim.forward(media.landmarks[i]);
  return out;
}

AlignedFace canonical_align(const FaceMedia& media, const HeadPose& pose,
                            const CanonicalFrame& frame) {
  const EyeGeometry eyes = eye_geometry(media.landmarks);
  if (eyes.distance < 2.0) {
    throw Error(ErrorCode::DegenerateScale, "media " + media.media_id + ": eyes closer than 2 px");
  }
  const double s = frame.size;
  Similarity sim;
  sim.scale = frame.eye_distance * s / eyes.distance;
  sim.cos_a = std::cos(-eyes.angle_deg / kDeg);
  sim.sin_a = std::sin(-eyes.angle_deg / kDeg);
  if (eyes.angle_deg == 0.0) {
    sim.cos_a = 1.0;
    sim.sin_a = 0.0;
  }
  sim.from = eyes.midpoint;
  sim.to = {frame.eye_mid_x * s, frame.eye_mid_y * s};

  AlignedFace out;
  out.raster = warp(media.image, sim, frame.size, frame.size);
  out.pose = pose;
  out.media_id = media.media_id;
  for (int i = 0; i < kLandmarkCount; ++i) out.landmarks[i] = sim.forward(media.landmarks[i]);
  return out;
}

}  // namespace poolface::pose
