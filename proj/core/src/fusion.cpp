#include "autolabel/fusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "autolabel/error.hpp"

namespace autolabel {

PointCloud ReconstructPointCloud(std::span<const DepthFrame> frames,
                                 std::span<const CameraModel> rig, const FusionOptions& options) {
  PointCloud cloud;
  if (frames.empty()) return cloud;

  const int frame_index = frames.front().frame_index;
  const bool with_color =
      std::all_of(frames.begin(), frames.end(), [](const DepthFrame& f) { return f.has_color(); });
  std::size_t valid = 0;
  for (const auto& frame : frames) {
    if (frame.frame_index != frame_index) {
      throw Error(ErrorCode::kMismatchedFrameIndex,
                  "camera " + std::to_string(frame.camera_id) + " delivered frame " +
                      std::to_string(frame.frame_index) + ", expected " + std::to_string(frame_index));
    }
    if (frame.depth.size() != static_cast<std::size_t>(frame.width) * frame.height) {
      throw Error(ErrorCode::kData, "depth buffer size mismatch for camera " +
                                        std::to_string(frame.camera_id));
    }
    if (FindCamera(rig, frame.camera_id) == nullptr) {
      throw Error(ErrorCode::kUnknownCamera, "camera " + std::to_string(frame.camera_id) +
                                                 " is not in the rig");
    }
    valid += static_cast<std::size_t>(
        std::count_if(frame.depth.begin(), frame.depth.end(), [](auto d) { return d != 0; }));
  }
  cloud.points.reserve(valid);
  if (with_color) cloud.colors.reserve(valid);

  for (const auto& frame : frames) {
    const CameraModel& camera = *FindCamera(rig, frame.camera_id);
    const auto& k = camera.intrinsics;
    const Eigen::Matrix3d r_inv = camera.pose.RotationMatrix().transpose();
    const Eigen::Vector3d center = camera.pose.Center();
    for (int j = 0; j < frame.height; ++j) {
      const double y_ray = (j - k.cy) / k.fy;
      for (int i = 0; i < frame.width; ++i) {
        const std::size_t idx = static_cast<std::size_t>(j) * frame.width + i;
        const double d = frame.depth[idx];
        if (d <= 0.0 || d > options.max_depth_mm) continue;
        const Eigen::Vector3d p_cam((i - k.cx) / k.fx * d, y_ray * d, d);
        cloud.points.push_back(r_inv * p_cam + center);
        if (with_color) cloud.colors.push_back(frame.rgb[idx]);
      }
    }
  }
  return cloud;
}

VoxelGridSpec DeriveGridSpec(std::span<const CameraModel> rig, double margin_mm, double top_mm,
                             double cell_mm) {
  if (rig.empty()) throw Error(ErrorCode::kEmptyGrid, "cannot derive a grid from an empty rig");
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const auto& camera : rig) {
    const Eigen::Vector3d c = camera.pose.Center();
    min_x = std::min(min_x, c.x());
    min_y = std::min(min_y, c.y());
    max_x = std::max(max_x, c.x());
    max_y = std::max(max_y, c.y());
  }
  VoxelGridSpec spec;
  spec.cell_mm = cell_mm;
  spec.origin = Eigen::Vector3d(std::floor((min_x - margin_mm) / cell_mm) * cell_mm,
                                std::floor((min_y - margin_mm) / cell_mm) * cell_mm, 0.0);
  spec.nx = static_cast<int>(std::ceil((max_x + margin_mm - spec.origin.x()) / cell_mm));
  spec.ny = static_cast<int>(std::ceil((max_y + margin_mm - spec.origin.y()) / cell_mm));
  spec.nz = static_cast<int>(std::ceil(top_mm / cell_mm));
  return spec;
}

VoxelGrid::VoxelGrid(const VoxelGridSpec& spec) : spec_(spec) {
  if (spec.nx <= 0 || spec.ny <= 0 || spec.nz <= 0) {
    throw Error(ErrorCode::kEmptyGrid, "voxel grid dimensions must be positive");
  }
  if (!(spec.cell_mm > 0.0)) throw Error(ErrorCode::kEmptyGrid, "cell size must be positive");
  words_per_column_ = (spec.nz + 63) / 64;
  bits_.assign(static_cast<std::size_t>(spec.nx) * spec.ny * words_per_column_, 0);
}

bool VoxelGrid::Get(int m, int n, int k) const {
  const std::uint64_t word = bits_[ColumnIndex(m, n) * words_per_column_ + k / 64];
  return (word >> (k % 64)) & 1u;
}

void VoxelGrid::Set(int m, int n, int k) {
  bits_[ColumnIndex(m, n) * words_per_column_ + k / 64] |= std::uint64_t{1} << (k % 64);
}

void VoxelGrid::Clear() {
  std::fill(bits_.begin(), bits_.end(), 0);
  dropped_ = 0;
}

int VoxelGrid::TopIndex(int m, int n) const {
  const std::size_t base = ColumnIndex(m, n) * words_per_column_;
  for (int w = words_per_column_ - 1; w >= 0; --w) {
    const std::uint64_t word = bits_[base + w];
    if (word != 0) return w * 64 + 63 - std::countl_zero(word);
  }
  return -1;
}

std::size_t VoxelGrid::CountOccupied() const {
  std::size_t count = 0;
  for (auto word : bits_) count += static_cast<std::size_t>(std::popcount(word));
  return count;
}

bool VoxelGrid::Insert(const Eigen::Vector3d& point) {
  const Eigen::Vector3d rel = (point - spec_.origin) / spec_.cell_mm;
  const double fm = std::floor(rel.x());
  const double fn = std::floor(rel.y());
  const double fk = std::floor(rel.z());
  if (fm < 0.0 || fn < 0.0 || fk < 0.0 || fm >= spec_.nx || fn >= spec_.ny || fk >= spec_.nz) {
    ++dropped_;
    return false;
  }
  Set(static_cast<int>(fm), static_cast<int>(fn), static_cast<int>(fk));
  return true;
}

bool VoxelGrid::operator==(const VoxelGrid& other) const {
  return spec_.nx == other.spec_.nx && spec_.ny == other.spec_.ny && spec_.nz == other.spec_.nz &&
         spec_.origin == other.spec_.origin && spec_.cell_mm == other.spec_.cell_mm &&
         bits_ == other.bits_;
}

VoxelGrid Voxelize(const PointCloud& cloud, const VoxelGridSpec& spec) {
  VoxelGrid grid(spec);
  for (const auto& p : cloud.points) grid.Insert(p);
  return grid;
}

TopDownMap TopdownHeightmap(const VoxelGrid& grid) {
  const auto& spec = grid.spec();
  TopDownMap map(spec.Ground());
  for (int m = 0; m < spec.nx; ++m) {
    for (int n = 0; n < spec.ny; ++n) {
      map.at(m, n) = static_cast<std::uint16_t>(grid.TopIndex(m, n) + 1);
    }
  }
  return map;
}

TopDownMap FuseToHeightmap(std::span<const DepthFrame> frames, std::span<const CameraModel> rig,
                           const VoxelGridSpec& spec, const FusionOptions& options) {
  return TopdownHeightmap(Voxelize(ReconstructPointCloud(frames, rig, options), spec));
}

}  // namespace autolabel
