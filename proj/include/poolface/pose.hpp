#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "poolface/core.hpp"

namespace poolface::pose {

/// Pinhole intrinsics with square pixels and no skew.
struct CameraModel {
  double focal_px = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  /// Principal point at the image center, focal length W + H.
  static CameraModel for_image(int width, int height);
  /// Same, with an explicit focal length.
  static CameraModel for_image(int width, int height, double focal_px);
};

struct HeadPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  double roll_deg = 0.0;
  double reproj_rmse = 0.0;
};

/// Generic 3D head, index-aligned with the 68-point landmark scheme.
/// Model frame: x to image right, y down, z away from the camera.
struct Model3D {
  std::array<Eigen::Vector3d, kLandmarkCount> points;
};

/// Parses "index x y z" lines (indices 0..67, each exactly once), recenters
/// the points on their centroid and rejects coplanar point sets.
/// Blank lines and lines starting with '#' are ignored.
Model3D parse_model3d(std::string_view text);
Model3D load_model3d(const std::string& path);
std::string format_model3d(const Model3D& model);

/// The bundled generic head (data/generic_head_68.txt).
const Model3D& generic_head_model();

/// Pixel projection of every model point under (rotation, translation).
Landmarks project_model(const Model3D& model, const Eigen::Matrix3d& rotation,
                        const Eigen::Vector3d& translation, const CameraModel& camera);

struct PnpOptions {
  int max_iterations = 200;
  /// Relative cost decrease below which refinement has converged.
  double relative_tolerance = 1e-12;
};

struct PnpResult {
  HeadPose pose;
  /// RMSE after the linear initialization, then after every accepted step.
  std::vector<double> rmse_history;
  int iterations = 0;
};

/// Pose of `model` that reproduces `landmarks` under `camera`, in the least
/// squares sense. DLT initialization, then damped Gauss-Newton on the six
/// pose parameters. Missing landmarks (non-finite) are dropped.
PnpResult solve_pnp_detailed(const Landmarks& landmarks, const Model3D& model,
                             const CameraModel& camera, const PnpOptions& options = {});

HeadPose solve_pnp(const Landmarks& landmarks, const Model3D& model, const CameraModel& camera,
                   const PnpOptions& options = {});

struct EulerAngles {
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  double roll_deg = 0.0;
  /// |yaw| within 0.1 deg of 90; roll is then reported as 0.
  bool gimbal_lock = false;
};

/// Angles under R = Rz(roll) * Ry(yaw) * Rx(pitch).
EulerAngles decompose_rotation(const Eigen::Matrix3d& rotation);
Eigen::Matrix3d compose_rotation(double yaw_deg, double pitch_deg, double roll_deg);

/// Upper-open yaw interval edges; |yaw| < edge[0] is bin 0.
struct YawBinEdges {
  std::array<double, 3> edges{20.0, 40.0, 60.0};
};

int quantize_yaw(double yaw_deg, const YawBinEdges& bins = {});

}  // namespace poolface::pose
