#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace autolabel {

// World space is millimeters with X,Y spanning the ground plane and Z up.
// Pixel coordinates are (column, row); the center of pixel (i, j) sits at the
// integer coordinate (i, j), so the principal point maps to the optical axis.

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  bool IsValid() const;
  Eigen::Matrix3d Matrix() const;
  bool Contains(const Eigen::Vector2d& pixel) const;
};

// Rigid transform mapping world coordinates to camera coordinates
// (x right, y down, z along the optical axis).
class Pose {
 public:
  Pose() = default;
  Pose(const Eigen::Quaterniond& rotation, const Eigen::Vector3d& translation);

  static Pose Identity() { return Pose(); }
  // Camera at `center` looking at `target`; `up` resolves the roll.
  static Pose LookAt(const Eigen::Vector3d& center, const Eigen::Vector3d& target,
                     const Eigen::Vector3d& up = Eigen::Vector3d::UnitZ());

  const Eigen::Quaterniond& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix3d RotationMatrix() const { return rotation_.toRotationMatrix(); }

  Eigen::Vector3d Apply(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }
  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const { return Apply(p); }
  // (a * b)(p) == a(b(p))
  Pose operator*(const Pose& other) const;
  Pose Inverse() const;

  // Camera center in the source frame.
  Eigen::Vector3d Center() const { return -(rotation_.conjugate() * translation_); }

 private:
  Eigen::Quaterniond rotation_ = Eigen::Quaterniond::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

// Angle of the relative rotation between two poses, radians.
double RotationDistance(const Pose& a, const Pose& b);

struct CameraModel {
  int id = 0;
  CameraIntrinsics intrinsics;
  Pose pose;
};

using Rig = std::vector<CameraModel>;

const CameraModel* FindCamera(std::span<const CameraModel> rig, int id);

// Ground-plane raster on z = 0. Cell (m, n) covers
// [origin_x + m*cell, origin_x + (m+1)*cell) x [origin_y + n*cell, ...).
struct GroundGrid {
  double origin_x_mm = 0.0;
  double origin_y_mm = 0.0;
  double cell_mm = 20.0;
  int nx = 0;
  int ny = 0;

  Eigen::Vector2d CellCenter(int m, int n) const;
  // Continuous cell coordinates; floor() gives the cell index.
  Eigen::Vector2d WorldToCell(const Eigen::Vector2d& xy) const;
  bool operator==(const GroundGrid&) const = default;
};

Eigen::Vector2d ProjectPoint(const CameraModel& camera, const Eigen::Vector3d& world_point);
Eigen::Vector3d BackprojectPixel(const CameraModel& camera, const Eigen::Vector2d& pixel,
                                 double depth_mm);

// Same as ProjectPoint but returns nullopt instead of throwing for points at or
// behind the camera.
std::optional<Eigen::Vector2d> TryProjectPoint(const CameraModel& camera,
                                               const Eigen::Vector3d& world_point);

inline constexpr double kDefaultMaxHomographyCondition = 1e6;

// Maps homogeneous image coordinates to homogeneous continuous cell
// coordinates of `grid` on the z = 0 plane. The inverse of the returned matrix
// keeps the camera depth as its homogeneous coordinate (positive in front).
Eigen::Matrix3d GroundPlaneHomography(const CameraModel& camera, const GroundGrid& grid,
                                      double max_condition = kDefaultMaxHomographyCondition);

}  // namespace autolabel
