#include "autolabel/project.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "autolabel/error.hpp"

namespace autolabel {

TopDownRegion RegionAround(const TopDownMap& map, const Eigen::Vector2d& xy, double half_extent_mm) {
  const Eigen::Vector2d lo = map.grid.WorldToCell(xy - Eigen::Vector2d::Constant(half_extent_mm));
  const Eigen::Vector2d hi = map.grid.WorldToCell(xy + Eigen::Vector2d::Constant(half_extent_mm));
  // Cell m is included when its center m + 0.5 lies in [lo, hi].
  TopDownRegion region;
  region.m_begin = std::max(0, static_cast<int>(std::ceil(lo.x() - 0.5)));
  region.n_begin = std::max(0, static_cast<int>(std::ceil(lo.y() - 0.5)));
  region.m_end = std::min(map.nx(), static_cast<int>(std::floor(hi.x() - 0.5)) + 1);
  region.n_end = std::min(map.ny(), static_cast<int>(std::floor(hi.y() - 0.5)) + 1);
  return region;
}

double EstimateHeight(const TopDownMap& map, const TopDownRegion& region) {
  std::uint16_t peak = 0;
  if (!region.empty()) {
    const int m0 = std::max(region.m_begin, 0);
    const int n0 = std::max(region.n_begin, 0);
    const int m1 = std::min(region.m_end, map.nx());
    const int n1 = std::min(region.n_end, map.ny());
    for (int m = m0; m < m1; ++m) {
      for (int n = n0; n < n1; ++n) peak = std::max(peak, map.at(m, n));
    }
  }
  if (peak == 0) throw Error(ErrorCode::kEmptyRegion, "no occupied cells in the region");
  return peak * map.cell_mm();
}

PersonCubeCorners PersonCube(const Eigen::Vector2d& ground_xy, double height_mm, double footprint_mm) {
  if (!(height_mm > 0.0)) {
    throw Error(ErrorCode::kNonPositiveHeight, "person height must be positive, got " +
                                                   std::to_string(height_mm));
  }
  const double h = 0.5 * footprint_mm;
  PersonCubeCorners corners;
  for (int i = 0; i < 8; ++i) {
    corners[i] = Eigen::Vector3d(ground_xy.x() + ((i & 1) ? h : -h),
                                 ground_xy.y() + ((i & 2) ? h : -h), (i & 4) ? height_mm : 0.0);
  }
  return corners;
}

std::optional<BoundingBox2D> ProjectPersonBox(const PersonCubeCorners& cube,
                                              const CameraModel& camera) {
  double min_u = std::numeric_limits<double>::infinity();
  double min_v = min_u;
  double max_u = -min_u;
  double max_v = -min_u;
  bool any = false;
  for (const auto& corner : cube) {
    const auto pixel = TryProjectPoint(camera, corner);
    if (!pixel) continue;
    any = true;
    min_u = std::min(min_u, pixel->x());
    min_v = std::min(min_v, pixel->y());
    max_u = std::max(max_u, pixel->x());
    max_v = std::max(max_v, pixel->y());
  }
  if (!any) return std::nullopt;

  const double w = camera.intrinsics.width;
  const double h = camera.intrinsics.height;
  const double left = std::clamp(min_u, 0.0, w);
  const double right = std::clamp(max_u, 0.0, w);
  const double top = std::clamp(min_v, 0.0, h);
  const double bottom = std::clamp(max_v, 0.0, h);
  if (!(right > left) || !(bottom > top)) return std::nullopt;

  BoundingBox2D box;
  box.camera_id = camera.id;
  box.left = left;
  box.top = top;
  box.width = right - left;
  box.height = bottom - top;
  box.clipped = left != min_u || right != max_u || top != min_v || bottom != max_v;
  return box;
}

std::vector<LabelRecord> GenerateLabelRecords(const TrackSet& tracks, std::span<const CameraModel> rig,
                                              double footprint_mm) {
  std::vector<LabelRecord> records;
  for (const Tracklet* t : ConfirmedTracklets(tracks)) {
    for (const auto& state : t->states) {
      if (!(state.height_mm > 0.0)) continue;
      const PersonCubeCorners cube = PersonCube(state.world_xy, state.height_mm, footprint_mm);
      for (const auto& camera : rig) {
        auto box = ProjectPersonBox(cube, camera);
        if (!box) continue;
        box->frame_index = state.frame_index;
        box->track_id = t->id;
        records.push_back({state.frame_index, camera.id, t->id, *box, state.score});
      }
    }
  }
  std::sort(records.begin(), records.end(), [](const LabelRecord& a, const LabelRecord& b) {
    return std::tie(a.frame, a.camera, a.track_id) < std::tie(b.frame, b.camera, b.track_id);
  });
  return records;
}

}  // namespace autolabel
