#pragma once

#include <string>

#include "poolface/core.hpp"
#include "poolface/pose.hpp"

namespace poolface::pose {

struct EyeGeometry {
  Point2 left_center;   // image-left eye, midpoint of corners 36 and 39
  Point2 right_center;  // image-right eye, midpoint of corners 42 and 45
  Point2 midpoint;
  double distance = 0.0;
  /// Angle of the left-to-right eye line against the image x axis.
  double angle_deg = 0.0;
};

/// Throws MissingEyeLandmarks unless all four eye corners are valid.
EyeGeometry eye_geometry(const Landmarks& landmarks);

struct RollCompensated {
  Raster raster;
  Landmarks landmarks{};
  /// In-plane rotation that was applied, degrees.
  double rotation_deg = 0.0;
};

/// Rotates image and landmarks about the eye midpoint so the eye line is
/// horizontal. The rotation removes the roll measured on the landmark eye
/// line; `pose` is carried for reporting only. Pixels rotated in from
/// outside the image are black.
RollCompensated roll_compensate(const FaceMedia& media, const HeadPose& pose);

/// Canonical eye frame of the S x S output crop.
struct CanonicalFrame {
  int size = 128;
  double eye_mid_x = 0.5;   // fraction of S
  double eye_mid_y = 0.38;  // fraction of S
  double eye_distance = 0.32;  // fraction of S
};

struct AlignedFace {
  Raster raster;
  HeadPose pose;
  std::string media_id;
  /// Landmarks mapped into crop coordinates.
  Landmarks landmarks{};
};

/// Similarity warp placing the eye midpoint and inter-ocular distance at
/// the canonical frame. Downscaling integrates ceil(1/scale)^2 bilinear
/// subsamples per output pixel. Throws DegenerateScale when the eyes are
/// closer than 2 px.
AlignedFace canonical_align(const FaceMedia& media, const HeadPose& pose,
                            const CanonicalFrame& frame = {});

}  // namespace poolface::pose
