#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "autolabel/fusion.hpp"
#include "autolabel/geometry.hpp"
#include "autolabel/track.hpp"

namespace autolabel {

// Half-open cell range [m_begin, m_end) x [n_begin, n_end) of a heightmap.
struct TopDownRegion {
  int m_begin = 0;
  int n_begin = 0;
  int m_end = 0;
  int n_end = 0;

  bool empty() const { return m_end <= m_begin || n_end <= n_begin; }
};

// Cells whose centers lie within half_extent_mm (Chebyshev) of `xy`, clamped
// to the map.
TopDownRegion RegionAround(const TopDownMap& map, const Eigen::Vector2d& xy, double half_extent_mm);

// cell_mm * (largest heightmap value in the region). Throws EmptyRegion when
// the region is empty or holds only zeros.
double EstimateHeight(const TopDownMap& map, const TopDownRegion& region);

inline constexpr double kPersonFootprintMm = 1000.0;

using PersonCubeCorners = std::array<Eigen::Vector3d, 8>;

// Axis-aligned box with a footprint_mm square base centered at ground_xy,
// spanning z in [0, h]. Corner i has x sign bit 0, y bit 1, top bit 2.
PersonCubeCorners PersonCube(const Eigen::Vector2d& ground_xy, double height_mm,
                             double footprint_mm = kPersonFootprintMm);

struct BoundingBox2D {
  int camera_id = 0;
  int frame_index = 0;
  int track_id = 0;
  double left = 0.0;
  double top = 0.0;
  double width = 0.0;
  double height = 0.0;
  bool clipped = false;
};

// Tightest axis-aligned rectangle around the projections of the corners in
// front of the camera, clipped to [0, width] x [0, height]. nullopt when no
// corner is in front or the clipped rectangle has no area.
std::optional<BoundingBox2D> ProjectPersonBox(const PersonCubeCorners& cube,
                                              const CameraModel& camera);

struct LabelRecord {
  int frame = 0;
  int camera = 0;
  int track_id = 0;
  BoundingBox2D box;
  double confidence = 1.0;
};

// Every state of every confirmed tracklet projected into every camera, sorted
// by (frame, camera, track_id).
std::vector<LabelRecord> GenerateLabelRecords(const TrackSet& tracks, std::span<const CameraModel> rig,
                                              double footprint_mm = kPersonFootprintMm);

}  // namespace autolabel
