#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "autolabel/fusion.hpp"
#include "autolabel/geometry.hpp"

namespace autolabel {

inline constexpr int kCropSide = 20;

struct Proposal {
  int m = 0;
  int n = 0;
  std::uint16_t peak_value = 0;
  // kCropSide x kCropSide heightmap patch, cells (m - 10 .. m + 9, n - 10 .. n + 9),
  // stored crop[dm * kCropSide + dn]; cells outside the map read as 0.
  std::vector<std::uint16_t> crop;
  double cell_mm = kDefaultCellMm;
};

struct ProposalParams {
  std::uint16_t min_height_cells = 5;
  int window = 5;  // odd, >= 3
  double nms_radius_cells = 10.0;
};

// Local maxima of the heightmap followed by greedy non-maximum suppression.
// A maximum is a connected set of equal-valued cells that is at least as high
// as everything within the window and strictly higher than some of it; it is
// represented by its cell nearest the set's centroid. Flat regions and
// shoulders of higher ground therefore yield nothing. Output is ordered by
// value (descending), then m, then n.
std::vector<Proposal> ExtractProposals(const TopDownMap& map, const ProposalParams& params = {});

class CropClassifier {
 public:
  virtual ~CropClassifier() = default;
  // Person likelihood in [0, 1]. Implementations must be safe to call
  // concurrently.
  virtual double Score(const Proposal& proposal) const = 0;
};

// Default classifier: a person-height peak over a minimally filled crop.
class HeightBandClassifier final : public CropClassifier {
 public:
  struct Params {
    double min_height_mm = 1000.0;
    double max_height_mm = 2200.0;
    int min_nonzero_cells = 30;
  };

  HeightBandClassifier() = default;
  explicit HeightBandClassifier(const Params& params) : params_(params) {}

  double Score(const Proposal& proposal) const override;

 private:
  Params params_;
};

// Validates the crop shape, then defers to the classifier.
double ClassifyCrop(const Proposal& proposal, const CropClassifier& classifier);

struct Detection {
  int m = 0;
  int n = 0;
  Eigen::Vector2d world_xy = Eigen::Vector2d::Zero();
  double score = 0.0;
  std::uint16_t peak_value = 0;
  double height_mm = 0.0;
};

struct DetectorParams {
  ProposalParams proposals;
  double keep_threshold = 0.5;
};

std::vector<Detection> DetectPeople(const TopDownMap& map, const CropClassifier& classifier,
                                    const DetectorParams& params = {});

// Dense non-negative map. For camera views (col, row) are pixel coordinates;
// for the fused ground map col = m and row = n of the ground grid.
struct Heatmap {
  static constexpr int kGround = -1;

  int camera_id = kGround;
  int cols = 0;
  int rows = 0;
  std::vector<float> values;  // values[row * cols + col]

  Heatmap() = default;
  Heatmap(int camera, int c, int r)
      : camera_id(camera), cols(c), rows(r), values(static_cast<std::size_t>(c) * r, 0.0f) {}

  float at(int col, int row) const { return values[static_cast<std::size_t>(row) * cols + col]; }
  float& at(int col, int row) { return values[static_cast<std::size_t>(row) * cols + col]; }
};

struct ViewHeatmap {
  Heatmap heatmap;
  // Image -> ground cell homography, as returned by GroundPlaneHomography.
  Eigen::Matrix3d image_to_ground = Eigen::Matrix3d::Identity();
};

struct GroundFusionParams {
  double blur_sigma_cells = 2.0;
  int window = 5;
  double nms_radius_cells = 10.0;
  double score_threshold = 0.1;
  bool bilinear = false;
};

struct GroundFusionResult {
  Heatmap ground;  // blurred fused map
  std::vector<Detection> detections;
};

// Warps each view onto the ground grid (inverse mapping), keeps the per-cell
// maximum over views, blurs, and extracts local maxima.
GroundFusionResult FuseGroundHeatmaps(std::span<const ViewHeatmap> views, const GroundGrid& grid,
                                      const GroundFusionParams& params = {});

// Inverse-map warp of one view onto the ground grid (no blur).
Heatmap WarpToGround(const ViewHeatmap& view, const GroundGrid& grid, bool bilinear = false);

Heatmap GaussianBlur(const Heatmap& input, double sigma);

}  // namespace autolabel
