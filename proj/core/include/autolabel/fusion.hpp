#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "autolabel/geometry.hpp"

namespace autolabel {

using Rgb = std::array<std::uint8_t, 3>;

// Registered depth image in millimeters; 0 marks a missing measurement.
// Pixel (i, j) is stored at depth[j * width + i].
struct DepthFrame {
  int camera_id = 0;
  int frame_index = 0;
  double timestamp_ms = 0.0;
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> depth;
  // Optional color registered to the depth pixels; empty when absent.
  std::vector<Rgb> rgb;

  std::uint16_t at(int i, int j) const { return depth[static_cast<std::size_t>(j) * width + i]; }
  bool has_color() const { return !rgb.empty(); }
};

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  // Empty, or parallel to `points`.
  std::vector<Rgb> colors;

  bool has_color() const { return !colors.empty() && colors.size() == points.size(); }
  std::size_t size() const { return points.size(); }
};

struct FusionOptions {
  // Measurements beyond this range are treated as outliers.
  double max_depth_mm = 6000.0;
};

// Union over cameras and valid pixels of the back-projected world points.
// Colors are attached only when every frame carries registered RGB.
PointCloud ReconstructPointCloud(std::span<const DepthFrame> frames,
                                 std::span<const CameraModel> rig,
                                 const FusionOptions& options = {});

inline constexpr double kDefaultCellMm = 20.0;
inline constexpr double kDefaultGridTopMm = 2600.0;

struct VoxelGridSpec {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  int nx = 0;
  int ny = 0;
  int nz = 0;
  double cell_mm = kDefaultCellMm;

  GroundGrid Ground() const { return {origin.x(), origin.y(), cell_mm, nx, ny}; }
  std::size_t num_cells() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
  }
};

// Ground extent covering every camera center plus `margin_mm`, from z = 0 up
// to `top_mm`.
VoxelGridSpec DeriveGridSpec(std::span<const CameraModel> rig, double margin_mm = 1000.0,
                             double top_mm = kDefaultGridTopMm, double cell_mm = kDefaultCellMm);

// Binary occupancy, bit-packed so each (m, n) column is contiguous in z.
class VoxelGrid {
 public:
  explicit VoxelGrid(const VoxelGridSpec& spec);

  const VoxelGridSpec& spec() const { return spec_; }
  bool Get(int m, int n, int k) const;
  void Set(int m, int n, int k);
  void Clear();
  // Highest occupied z index in the column, or -1 when empty.
  int TopIndex(int m, int n) const;
  std::size_t CountOccupied() const;
  // Points that fell outside the grid during Insert.
  std::size_t dropped() const { return dropped_; }

  // Sets the cell whose half-open cube contains the point; false when outside.
  bool Insert(const Eigen::Vector3d& point);

  bool operator==(const VoxelGrid& other) const;

 private:
  std::size_t ColumnIndex(int m, int n) const { return static_cast<std::size_t>(m) * spec_.ny + n; }

  VoxelGridSpec spec_;
  int words_per_column_ = 0;
  std::vector<std::uint64_t> bits_;
  std::size_t dropped_ = 0;
};

VoxelGrid Voxelize(const PointCloud& cloud, const VoxelGridSpec& spec);

// Top-down heightmap: value(m, n) = 1 + highest occupied z index of the
// column, 0 for an empty column. A value v therefore spans v voxel layers and
// the surface height above the grid floor is v * cell_mm.
struct TopDownMap {
  GroundGrid grid;
  std::vector<std::uint16_t> values;  // values[m * ny + n]

  TopDownMap() = default;
  explicit TopDownMap(const GroundGrid& g)
      : grid(g), values(static_cast<std::size_t>(g.nx) * g.ny, 0) {}

  int nx() const { return grid.nx; }
  int ny() const { return grid.ny; }
  double cell_mm() const { return grid.cell_mm; }
  bool InBounds(int m, int n) const { return m >= 0 && n >= 0 && m < grid.nx && n < grid.ny; }
  std::uint16_t at(int m, int n) const { return values[static_cast<std::size_t>(m) * grid.ny + n]; }
  std::uint16_t& at(int m, int n) { return values[static_cast<std::size_t>(m) * grid.ny + n]; }
  bool operator==(const TopDownMap&) const = default;
};

TopDownMap TopdownHeightmap(const VoxelGrid& grid);

// Convenience: the full depth -> cloud -> voxels -> heightmap chain.
TopDownMap FuseToHeightmap(std::span<const DepthFrame> frames, std::span<const CameraModel> rig,
                           const VoxelGridSpec& spec, const FusionOptions& options = {});

}  // namespace autolabel
