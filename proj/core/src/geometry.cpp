#include "autolabel/geometry.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "autolabel/error.hpp"

namespace autolabel {

bool CameraIntrinsics::IsValid() const {
  return fx > 0.0 && fy > 0.0 && width > 0 && height > 0 && cx >= 0.0 && cx < width &&
         cy >= 0.0 && cy < height;
}

Eigen::Matrix3d CameraIntrinsics::Matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

bool CameraIntrinsics::Contains(const Eigen::Vector2d& pixel) const {
  return pixel.x() >= 0.0 && pixel.y() >= 0.0 && pixel.x() <= width - 1.0 &&
         pixel.y() <= height - 1.0;
}

Pose::Pose(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation.normalized()), translation_(translation) {}

Pose Pose::LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                  const Eigen::Vector3d& up) {
  const Eigen::Vector3d z = (target - center).normalized();
  Eigen::Vector3d x = z.cross(up);
  if (x.norm() < 1e-9) {
    // Looking along `up`; fall back to world Y for the roll reference.
    x = z.cross(Eigen::Vector3d::UnitY());
  }
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Eigen::Matrix3d r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  return Pose(Eigen::Quaterniond(r), -r * center);
}

Pose Pose::operator*(const Pose& other) const {
  return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
}

Pose Pose::Inverse() const {
  const Eigen::Quaterniond inv = rotation_.conjugate();
  return Pose(inv, -(inv * translation_));
}

double RotationDistance(const Pose& a, const Pose& b) {
  return a.rotation().angularDistance(b.rotation());
}

const CameraModel* FindCamera(std::span<const CameraModel> rig, int id) {
  for (const auto& camera : rig) {
    if (camera.id == id) return &camera;
  }
  return nullptr;
}

Eigen::Vector2d GroundGrid::CellCenter(int m, int n) const {
  return {origin_x_mm + (m + 0.5) * cell_mm, origin_y_mm + (n + 0.5) * cell_mm};
}

Eigen::Vector2d GroundGrid::WorldToCell(const Eigen::Vector2d& xy) const {
  return {(xy.x() - origin_x_mm) / cell_mm, (xy.y() - origin_y_mm) / cell_mm};
}

std::optional<Eigen::Vector2d> TryProjectPoint(const CameraModel& camera,
                                               const Eigen::Vector3d& world_point) {
  const Eigen::Vector3d p = camera.pose.Apply(world_point);
  if (!(p.z() > 0.0)) return std::nullopt;
  const auto& k = camera.intrinsics;
  return Eigen::Vector2d(k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy);
}

Eigen::Vector2d ProjectPoint(const CameraModel& camera, const Eigen::Vector3d& world_point) {
  auto pixel = TryProjectPoint(camera, world_point);
  if (!pixel) {
    throw Error(ErrorCode::kNonPositiveDepth,
                "point is not in front of camera " + std::to_string(camera.id));
  }
  return *pixel;
}

Eigen::Vector3d BackprojectPixel(const CameraModel& camera, const Eigen::Vector2d& pixel,
                                 double depth_mm) {
  if (!(depth_mm > 0.0)) {
    throw Error(ErrorCode::kInvalidDepth, "depth must be positive, got " + std::to_string(depth_mm));
  }
  const auto& k = camera.intrinsics;
  const Eigen::Vector3d p_cam((pixel.x() - k.cx) / k.fx * depth_mm,
                              (pixel.y() - k.cy) / k.fy * depth_mm, depth_mm);
  return camera.pose.rotation().conjugate() * (p_cam - camera.pose.translation());
}

Eigen::Matrix3d GroundPlaneHomography(const CameraModel& camera, const GroundGrid& grid,
                                      double max_condition) {
  const Eigen::Matrix3d r = camera.pose.RotationMatrix();
  const Eigen::Vector3d& t = camera.pose.translation();
  const double scale = t.norm();
  if (scale < 1e-9) {
    throw Error(ErrorCode::kDegenerateView, "camera center lies on the ground plane");
  }

  // Unit-free plane basis: its conditioning reflects the viewing geometry only.
  Eigen::Matrix3d plane;
  plane.col(0) = r.col(0);
  plane.col(1) = r.col(1);
  plane.col(2) = t / scale;
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(plane);
  const auto& sv = svd.singularValues();
  const double condition = sv(2) > 0.0 ? sv(0) / sv(2) : std::numeric_limits<double>::infinity();
  if (!(condition <= max_condition)) {
    throw Error(ErrorCode::kDegenerateView, "ground homography condition number " +
                                                std::to_string(condition) + " exceeds bound for camera " +
                                                std::to_string(camera.id));
  }

  // world (x, y, 1) -> image: K [r1 r2 t]
  Eigen::Matrix3d world_to_image;
  world_to_image.col(0) = r.col(0);
  world_to_image.col(1) = r.col(1);
  world_to_image.col(2) = t;
  world_to_image = camera.intrinsics.Matrix() * world_to_image;

  Eigen::Matrix3d world_to_cell;
  world_to_cell << 1.0 / grid.cell_mm, 0.0, -grid.origin_x_mm / grid.cell_mm, 0.0,
      1.0 / grid.cell_mm, -grid.origin_y_mm / grid.cell_mm, 0.0, 0.0, 1.0;
  return world_to_cell * world_to_image.inverse();
}

}  // namespace autolabel
