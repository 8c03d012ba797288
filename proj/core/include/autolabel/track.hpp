#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "autolabel/assignment.hpp"
#include "autolabel/detect.hpp"
#include "autolabel/fusion.hpp"

namespace autolabel {

inline constexpr int kHistogramBins = 64;
// RGB quantized 4 x 4 x 4, bin = 16 * (r / 64) + 4 * (g / 64) + b / 64.
using Histogram = std::array<double, kHistogramBins>;

int HistogramBin(const Rgb& color);

// Vertical column over the ground plane: a square footprint of side
// 2 * half_extent_mm around `center`, restricted to z >= z_min_mm so floor
// points do not dilute the appearance.
struct TopDownBox {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double half_extent_mm = 200.0;
  double z_min_mm = 200.0;

  bool Contains(const Eigen::Vector3d& p) const {
    return p.z() >= z_min_mm && std::abs(p.x() - center.x()) <= half_extent_mm &&
           std::abs(p.y() - center.y()) <= half_extent_mm;
  }
};

// L1-normalized color histogram of the points inside the column; nullopt when
// the column holds no points. Throws NoColor when the cloud has no colors.
std::optional<Histogram> AppearanceHistogram(const PointCloud& cloud, const TopDownBox& column);

// One pass over the cloud for many columns (a point may count for several).
std::vector<std::optional<Histogram>> AppearanceHistograms(const PointCloud& cloud,
                                                           std::span<const TopDownBox> columns);

// sqrt(1 - sum_i sqrt(p_i q_i)), in [0, 1].
double BhattacharyyaDistance(const Histogram& p, const Histogram& q);

struct TrackState {
  int frame_index = 0;
  Eigen::Vector2d world_xy = Eigen::Vector2d::Zero();
  double height_mm = 0.0;
  double score = 1.0;
  std::optional<Histogram> histogram;
  bool matched = true;
};

enum class TrackStatus { kCandidate, kConfirmed, kTerminated };

struct Tracklet {
  int id = 0;
  std::vector<TrackState> states;  // strictly increasing frame_index
  TrackStatus status = TrackStatus::kCandidate;
  int misses = 0;  // consecutive unmatched frames
  int hits = 0;    // consecutive matched frames

  const TrackState& last() const { return states.back(); }
  int first_frame() const { return states.front().frame_index; }
  int last_frame() const { return states.back().frame_index; }
  // Most recent state carrying a histogram.
  const Histogram* Appearance() const;
};

struct TrackSet {
  std::map<int, Tracklet> tracklets;  // keyed by id
  int next_id = 1;
  std::optional<int> frame_cursor;  // last processed frame

  std::size_t StateCount() const;
  // Throws Error(kData) describing the first violated invariant.
  void Validate() const;
  bool operator==(const TrackSet& other) const;
};

struct CostWeights {
  double spatial = 0.7;
  double appearance = 0.3;
  double gate_mm = 1000.0;
};

struct CostMatrix {
  Eigen::MatrixXd cost;
  FeasibilityMask feasible;
};

// cost(t, d) = w_s * min(dist / gate, 1) + w_a * bhattacharyya(hist_t, hist_d);
// pairs farther than the gate are infeasible. When either histogram is
// missing the pair is scored on the spatial term alone.
CostMatrix BuildCostMatrix(std::span<const Tracklet* const> tracklets,
                           std::span<const Detection> detections,
                           std::span<const std::optional<Histogram>> detection_histograms,
                           const CostWeights& weights);

struct TrackerParams {
  CostWeights weights;
  double init_threshold = 0.5;
  int confirm_hits = 3;
  int max_misses = 15;
  // Column used for detection appearance.
  double footprint_half_mm = 200.0;
  double column_z_min_mm = 200.0;
};

// One frame of tracking-by-detection. `cloud` supplies colors for the
// appearance term; pass nullptr (or a colorless cloud) to track on geometry
// only. Candidates that miss a frame are dropped; confirmed tracklets are
// terminated after max_misses consecutive misses. Ids are never reused.
TrackSet TrackerStep(TrackSet set, int frame_index, std::span<const Detection> detections,
                     const PointCloud* cloud, const TrackerParams& params = {});

// Tracklets that were ever confirmed (status confirmed or terminated).
std::vector<const Tracklet*> ConfirmedTracklets(const TrackSet& set);

}  // namespace autolabel
