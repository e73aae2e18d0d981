#include "poolface/pose.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace poolface::pose {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d exp_so3(const Eigen::Vector3d& w) {
  const double theta = w.norm();
  if (theta < 1e-12) return Eigen::Matrix3d::Identity() + skew(w);
  return Eigen::AngleAxisd(theta, w / theta).toRotationMatrix();
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  const Eigen::Matrix3d v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return u * v.transpose();
}

/// Throws DegenerateGeometry when the points are (nearly) coplanar.
void require_spread_in_3d(const std::vector<Eigen::Vector3d>& pts) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
  if (!(ev(2) > 0.0) || ev(0) <= 1e-9 * ev(2)) {
    throw Error(ErrorCode::DegenerateGeometry, "model points are coplanar or collinear");
  }
}

struct Correspondences {
  std::vector<Eigen::Vector3d> model;
  std::vector<Eigen::Vector2d> image;
};

double sum_squared_error(const Correspondences& c, const Eigen::Matrix3d& r,
                         const Eigen::Vector3d& t, const CameraModel& cam) {
  double sse = 0.0;
  for (std::size_t i = 0; i < c.model.size(); ++i) {
    const Eigen::Vector3d pc = r * c.model[i] + t;
    if (pc.z() <= 0.0) return std::numeric_limits<double>::infinity();
    const double u = cam.focal_px * pc.x() / pc.z() + cam.cx;
    const double v = cam.focal_px * pc.y() / pc.z() + cam.cy;
    sse += (u - c.image[i].x()) * (u - c.image[i].x()) + (v - c.image[i].y()) * (v - c.image[i].y());
  }
  return sse;
}

/// Direct linear transform on normalized image coordinates, then projection
/// of the left 3x3 block onto SO(3).
void linear_pose(const Correspondences& c, const CameraModel& cam, Eigen::Matrix3d& r,
                 Eigen::Vector3d& t) {
  const auto n = static_cast<Eigen::Index>(c.model.size());

  // Similarity normalization of both point sets for conditioning.
  Eigen::Vector3d m3 = Eigen::Vector3d::Zero();
  Eigen::Vector2d m2 = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> uv(c.image.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    uv[i] = Eigen::Vector2d((c.image[i].x() - cam.cx) / cam.focal_px,
                            (c.image[i].y() - cam.cy) / cam.focal_px);
    m3 += c.model[i];
    m2 += uv[i];
  }
  m3 /= static_cast<double>(n);
  m2 /= static_cast<double>(n);
  double d3 = 0.0, d2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    d3 += (c.model[i] - m3).norm();
    d2 += (uv[i] - m2).norm();
  }
  const double s3 = std::sqrt(3.0) * static_cast<double>(n) / d3;
  const double s2 = std::sqrt(2.0) * static_cast<double>(n) / std::max(d2, 1e-300);

  Eigen::MatrixXd a(2 * n, 12);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector3d x = s3 * (c.model[i] - m3);
    const Eigen::Vector2d p = s2 * (uv[i] - m2);
    Eigen::Matrix<double, 1, 4> xh;
    xh << x.x(), x.y(), x.z(), 1.0;
    a.row(2 * i) << -xh, Eigen::Matrix<double, 1, 4>::Zero(), p.x() * xh;
    a.row(2 * i + 1) << Eigen::Matrix<double, 1, 4>::Zero(), -xh, p.y() * xh;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> pn;
  pn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8), h(9), h(10), h(11);

  Eigen::Matrix3d t2inv = Eigen::Matrix3d::Identity();
  t2inv(0, 0) = t2inv(1, 1) = 1.0 / s2;
  t2inv(0, 2) = m2.x();
  t2inv(1, 2) = m2.y();
  Eigen::Matrix4d t3 = Eigen::Matrix4d::Identity();
  t3.topLeftCorner<3, 3>() *= s3;
  t3.topRightCorner<3, 1>() = -s3 * m3;
  Eigen::Matrix<double, 3, 4> p = t2inv * pn * t3;

  Eigen::Matrix3d m = p.leftCols<3>();
  if (m.determinant() < 0.0) {
    p = -p;
    m = -m;
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> msvd(m);
  const double scale = msvd.singularValues().mean();
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::DegenerateGeometry, "linear pose initialization failed");
  }
  r = nearest_rotation(m / scale);
  t = p.col(3) / scale;
}

}  // namespace

// ---------------------------------------------------------------------------

CameraModel CameraModel::for_image(int width, int height) {
  return for_image(width, height, static_cast<double>(width + height));
}

CameraModel CameraModel::for_image(int width, int height, double focal_px) {
  return CameraModel{focal_px, 0.5 * width, 0.5 * height};
}

Model3D parse_model3d(std::string_view text) {
  Model3D model;
  std::array<bool, kLandmarkCount> seen{};
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    int index = -1;
    double x, y, z;
    std::string rest;
    if (!(fields >> index >> x >> y >> z) || (fields >> rest)) {
      throw Error(ErrorCode::ParseError,
                  "model line " + std::to_string(line_no) + ": expected 'index x y z'");
    }
    if (index < 0 || index >= kLandmarkCount || seen[index]) {
      throw Error(ErrorCode::ValidationError,
                  "model line " + std::to_string(line_no) + ": bad or repeated index");
    }
    seen[index] = true;
    model.points[index] = Eigen::Vector3d(x, y, z);
  }
  for (int i = 0; i < kLandmarkCount; ++i) {
    if (!seen[i]) {
      throw Error(ErrorCode::ValidationError, "model is missing landmark " + std::to_string(i));
    }
  }
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : model.points) centroid += p;
  centroid /= kLandmarkCount;
  for (auto& p : model.points) p -= centroid;
  require_spread_in_3d({model.points.begin(), model.points.end()});
  return model;
}

Model3D load_model3d(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open model file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model3d(buffer.str());
}

std::string format_model3d(const Model3D& model) {
  std::ostringstream out;
  out << std::setprecision(17);
  for (int i = 0; i < kLandmarkCount; ++i) {
    const auto& p = model.points[i];
    out << i << ' ' << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  return out.str();
}

Landmarks project_model(const Model3D& model, const Eigen::Matrix3d& rotation,
                        const Eigen::Vector3d& translation, const CameraModel& camera) {
  Landmarks out;
  for (int i = 0; i < kLandmarkCount; ++i) {
    const Eigen::Vector3d pc = rotation * model.points[i] + translation;
    out[i] = {camera.focal_px * pc.x() / pc.z() + camera.cx,
              camera.focal_px * pc.y() / pc.z() + camera.cy};
  }
  return out;
}

PnpResult solve_pnp_detailed(const Landmarks& landmarks, const Model3D& model,
                             const CameraModel& camera, const PnpOptions& options) {
  if (!(camera.focal_px > 0.0)) {
    throw Error(ErrorCode::ValidationError, "camera focal length must be positive");
  }
  Correspondences c;
  for (int i = 0; i < kLandmarkCount; ++i) {
    if (!landmarks[i].valid()) continue;
    c.model.push_back(model.points[i]);
    c.image.emplace_back(landmarks[i].x, landmarks[i].y);
  }
  if (c.model.size() < 6) {
    throw Error(ErrorCode::DegenerateGeometry, "fewer than 6 valid correspondences");
  }
  require_spread_in_3d(c.model);

  Eigen::Matrix3d r;
  Eigen::Vector3d t;
  linear_pose(c, camera, r, t);

  const auto n = c.model.size();
  const auto rmse_of = [n](double sse) { return std::sqrt(sse / static_cast<double>(n)); };

  PnpResult result;
  double cost = sum_squared_error(c, r, t, camera);
  if (!std::isfinite(cost)) {
    throw Error(ErrorCode::DegenerateGeometry, "linear pose places points behind the camera");
  }
  result.rmse_history.push_back(rmse_of(cost));

  double lambda = 1e-3;
  bool converged = cost == 0.0;
  Eigen::VectorXd residual(2 * n);
  Eigen::MatrixXd jac(2 * n, 6);
  while (!converged && result.iterations < options.max_iterations) {
    ++result.iterations;
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector3d rx = r * c.model[i];
      const Eigen::Vector3d pc = rx + t;
      const double iz = 1.0 / pc.z();
      const double f = camera.focal_px;
      residual(2 * i) = f * pc.x() * iz + camera.cx - c.image[i].x();
      residual(2 * i + 1) = f * pc.y() * iz + camera.cy - c.image[i].y();
      Eigen::Matrix<double, 2, 3> dproj;
      dproj << f * iz, 0.0, -f * pc.x() * iz * iz, 0.0, f * iz, -f * pc.y() * iz * iz;
      // Left-multiplied rotation increment: d(pc)/d(w) = -[R X]x, d(pc)/dt = I.
      jac.block<2, 3>(2 * i, 0) = dproj * (-skew(rx));
      jac.block<2, 3>(2 * i, 3) = dproj;
    }
    const Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
    const Eigen::Matrix<double, 6, 1> jtr = jac.transpose() * residual;

    Eigen::Matrix<double, 6, 6> damped = jtj;
    damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
    const Eigen::Matrix<double, 6, 1> delta = damped.ldlt().solve(-jtr);

    const Eigen::Matrix3d r_new = exp_so3(delta.head<3>()) * r;
    const Eigen::Vector3d t_new = t + delta.tail<3>();
    const double cost_new = sum_squared_error(c, r_new, t_new, camera);

    if (cost_new < cost) {
      const double drop = cost - cost_new;
      r = r_new;
      t = t_new;
      cost = cost_new;
      result.rmse_history.push_back(rmse_of(cost));
      lambda = std::max(lambda * 0.1, 1e-12);
      if (drop <= options.relative_tolerance * (cost + drop) || delta.norm() < 1e-14 ||
          cost < 1e-24) {
        converged = true;
      }
    } else {
      lambda *= 10.0;
      // No descent direction left at this damping: a local minimum.
      if (lambda > 1e16 || delta.norm() < 1e-14) converged = true;
    }
  }
  if (!converged) {
    throw Error(ErrorCode::NoConvergence, "pose refinement hit the iteration cap");
  }

  result.pose.rotation = nearest_rotation(r);
  result.pose.translation = t;
  const EulerAngles angles = decompose_rotation(result.pose.rotation);
  result.pose.yaw_deg = angles.yaw_deg;
  result.pose.pitch_deg = angles.pitch_deg;
  result.pose.roll_deg = angles.roll_deg;
  result.pose.reproj_rmse = rmse_of(cost);
  return result;
}

HeadPose solve_pnp(const Landmarks& landmarks, const Model3D& model, const CameraModel& camera,
                   const PnpOptions& options) {
  return solve_pnp_detailed(landmarks, model, camera, options).pose;
}

// R = Rz(roll) Ry(yaw) Rx(pitch):
//   R(2,0) = -sin(yaw), R(1,0)/R(0,0) = tan(roll), R(2,1)/R(2,2) = tan(pitch)
EulerAngles decompose_rotation(const Eigen::Matrix3d& r) {
  EulerAngles out;
  const double cos_yaw = std::hypot(r(0, 0), r(1, 0));
  out.yaw_deg = std::atan2(-r(2, 0), cos_yaw) * kDeg;
  if (std::fabs(std::fabs(out.yaw_deg) - 90.0) < 0.1) {
    out.gimbal_lock = true;
    out.roll_deg = 0.0;
    out.pitch_deg = std::atan2(-r(1, 2), r(1, 1)) * kDeg;
  } else {
    out.roll_deg = std::atan2(r(1, 0), r(0, 0)) * kDeg;
    out.pitch_deg = std::atan2(r(2, 1), r(2, 2)) * kDeg;
  }
  return out;
}

Eigen::Matrix3d compose_rotation(double yaw_deg, double pitch_deg, double roll_deg) {
  const Eigen::Matrix3d rz = Eigen::AngleAxisd(roll_deg / kDeg, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Matrix3d ry = Eigen::AngleAxisd(yaw_deg / kDeg, Eigen::Vector3d::UnitY()).toRotationMatrix();
  const Eigen::Matrix3d rx = Eigen::AngleAxisd(pitch_deg / kDeg, Eigen::Vector3d::UnitX()).toRotationMatrix();
  return rz * ry * rx;
}

int quantize_yaw(double yaw_deg, const YawBinEdges& bins) {
  const double a = std::fabs(yaw_deg);
  int bin = 0;
  for (double edge : bins.edges) {
    if (a >= edge) ++bin;
  }
  return bin;
}

}  // namespace poolface::pose
