#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "autolabel/calibration.hpp"
#include "autolabel/fusion.hpp"
#include "autolabel/geometry.hpp"
#include "autolabel/track.hpp"

namespace autolabel {

struct ActorSpec {
  double radius_mm = 160.0;
  double height_mm = 1700.0;
  Rgb color{200, 40, 40};
  std::vector<Eigen::Vector2d> waypoints;  // looped; one waypoint = standing still
  double speed_mm_s = 1000.0;
};

// Square fiducial lying on z = 0, rotated by yaw about +z.
struct MarkerSpec {
  int id = 0;
  double side_mm = kDefaultMarkerSideMm;
  double x_mm = 0.0;
  double y_mm = 0.0;
  double yaw_rad = 0.0;

  MarkerCorners Corners() const;
};

// Axis-aligned static obstacle.
struct BoxSpec {
  Eigen::Vector3d min_mm = Eigen::Vector3d::Zero();
  Eigen::Vector3d max_mm = Eigen::Vector3d::Zero();
  Rgb color{90, 90, 160};
};

struct SceneBounds {
  double x_min_mm = -5000.0;
  double x_max_mm = 5000.0;
  double y_min_mm = -5000.0;
  double y_max_mm = 5000.0;

  bool Contains(const Eigen::Vector2d& xy) const {
    return xy.x() >= x_min_mm && xy.x() <= x_max_mm && xy.y() >= y_min_mm && xy.y() <= y_max_mm;
  }
};

inline constexpr double kMaxActorSpeedMmS = 1500.0;
inline constexpr double kMinActorHeightMm = 1500.0;
inline constexpr double kMaxActorHeightMm = 1900.0;
inline const Rgb kFloorColor{128, 128, 128};

struct SceneSpec {
  double duration_s = 10.0;
  double fps = 15.0;
  std::vector<ActorSpec> actors;
  Rig cameras;
  std::vector<MarkerSpec> markers;
  std::vector<BoxSpec> boxes;
  SceneBounds bounds;
  std::uint64_t seed = 0;

  int num_frames() const;
  // Throws InvalidSpec listing every offending field.
  void Validate() const;
};

struct ActorPose {
  Eigen::Vector2d xy = Eigen::Vector2d::Zero();
  double height_mm = 0.0;
};

struct Scene {
  SceneSpec spec;
  std::vector<std::vector<ActorPose>> poses;  // [frame][actor]
  TrackSet ground_truth;                      // actor k has id k + 1

  int num_frames() const { return static_cast<int>(poses.size()); }
};

Scene GenerateScene(const SceneSpec& spec);

// Position after travelling `distance_mm` along the looped waypoint path.
Eigen::Vector2d PositionAlongPath(const std::vector<Eigen::Vector2d>& waypoints, double distance_mm);

struct RenderOptions {
  double noise_sigma_mm = 0.0;
  bool ground_plane = true;
  bool color = true;
};

// Ray casts capsules, boxes and the floor. Depth is the optical-axis distance
// of the nearest hit in whole mm; misses are 0.
DepthFrame RenderDepthFrame(const Scene& scene, const CameraModel& camera, int frame,
                            const RenderOptions& options = {});

// Nearest optical-axis depth along the ray through pixel (u, v), or nullopt.
std::optional<double> CastPixelRay(const Scene& scene, const CameraModel& camera, int frame,
                                   const Eigen::Vector2d& pixel, bool ground_plane,
                                   Rgb* color = nullptr);

// Corners of every marker fully visible from a camera it faces.
std::vector<MarkerObservation> SynthMarkerObservations(const Scene& scene, double noise_px,
                                                       std::uint64_t seed);

// Calibration graph with the scene's intrinsics, marker sides and observations.
CalibrationGraph MakeCalibrationGraph(const Scene& scene, std::span<const MarkerObservation> observations);

// Four cameras at the corners of a square, looking at the center.
Rig CornerRig(double half_side_mm, double height_mm, const Eigen::Vector3d& target,
              const CameraIntrinsics& intrinsics);
CameraIntrinsics TrackingIntrinsics();     // 320x240
CameraIntrinsics CalibrationIntrinsics();  // 640x576

// Distinct colors for up to 8 actors, then cycling.
Rgb ActorColor(int index);

// Desk-scale tracking scene: four ceiling-corner cameras, up to four actors
// walking a shared square loop a quarter-lap apart and a fifth pacing the
// center. Actors never come within 1 m of each other.
SceneSpec DeskSceneSpec(int num_actors = 5, double duration_s = 60.0, std::uint64_t seed = 0);

// Calibration scene: four wide cameras over six 300 mm floor markers.
SceneSpec CalibrationSceneSpec(std::uint64_t seed = 0);

}  // namespace autolabel
