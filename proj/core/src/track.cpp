#include "autolabel/track.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "autolabel/error.hpp"

namespace autolabel {

int HistogramBin(const Rgb& color) {
  return 16 * (color[0] >> 6) + 4 * (color[1] >> 6) + (color[2] >> 6);
}

std::vector<std::optional<Histogram>> AppearanceHistograms(const PointCloud& cloud,
                                                           std::span<const TopDownBox> columns) {
  if (!cloud.has_color()) throw Error(ErrorCode::kNoColor, "point cloud carries no colors");
  std::vector<Histogram> counts(columns.size());
  for (auto& h : counts) h.fill(0.0);
  std::vector<double> totals(columns.size(), 0.0);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const auto& p = cloud.points[i];
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (!columns[c].Contains(p)) continue;
      counts[c][HistogramBin(cloud.colors[i])] += 1.0;
      totals[c] += 1.0;
    }
  }
  std::vector<std::optional<Histogram>> out(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (totals[c] == 0.0) continue;
    for (auto& bin : counts[c]) bin /= totals[c];
    out[c] = counts[c];
  }
  return out;
}

std::optional<Histogram> AppearanceHistogram(const PointCloud& cloud, const TopDownBox& column) {
  return AppearanceHistograms(cloud, std::span<const TopDownBox>(&column, 1)).front();
}

double BhattacharyyaDistance(const Histogram& p, const Histogram& q) {
  double coefficient = 0.0;
  for (int i = 0; i < kHistogramBins; ++i) coefficient += std::sqrt(p[i] * q[i]);
  return std::sqrt(std::max(0.0, 1.0 - coefficient));
}

const Histogram* Tracklet::Appearance() const {
  for (auto it = states.rbegin(); it != states.rend(); ++it) {
    if (it->histogram) return &*it->histogram;
  }
  return nullptr;
}

std::size_t TrackSet::StateCount() const {
  std::size_t count = 0;
  for (const auto& [_, t] : tracklets) count += t.states.size();
  return count;
}

void TrackSet::Validate() const {
  for (const auto& [id, t] : tracklets) {
    if (id != t.id || id <= 0) {
      throw Error(ErrorCode::kData, "tracklet keyed " + std::to_string(id) + " has id " +
                                        std::to_string(t.id));
    }
    if (id >= next_id) {
      throw Error(ErrorCode::kData, "tracklet id " + std::to_string(id) + " not below next_id");
    }
    if (t.states.empty()) throw Error(ErrorCode::kData, "tracklet " + std::to_string(id) + " is empty");
    for (std::size_t i = 1; i < t.states.size(); ++i) {
      if (t.states[i].frame_index <= t.states[i - 1].frame_index) {
        throw Error(ErrorCode::kData, "tracklet " + std::to_string(id) +
                                          " has non-increasing frames at " +
                                          std::to_string(t.states[i].frame_index));
      }
    }
  }
}

bool TrackSet::operator==(const TrackSet& other) const {
  if (next_id != other.next_id || frame_cursor != other.frame_cursor ||
      tracklets.size() != other.tracklets.size()) {
    return false;
  }
  for (const auto& [id, t] : tracklets) {
    auto it = other.tracklets.find(id);
    if (it == other.tracklets.end()) return false;
    const Tracklet& o = it->second;
    if (t.status != o.status || t.misses != o.misses || t.hits != o.hits ||
        t.states.size() != o.states.size()) {
      return false;
    }
    for (std::size_t i = 0; i < t.states.size(); ++i) {
      const auto& a = t.states[i];
      const auto& b = o.states[i];
      if (a.frame_index != b.frame_index || a.world_xy != b.world_xy || a.height_mm != b.height_mm ||
          a.score != b.score || a.matched != b.matched || a.histogram != b.histogram) {
        return false;
      }
    }
  }
  return true;
}

CostMatrix BuildCostMatrix(std::span<const Tracklet* const> tracklets,
                           std::span<const Detection> detections,
                           std::span<const std::optional<Histogram>> detection_histograms,
                           const CostWeights& weights) {
  if (weights.spatial < 0.0 || weights.appearance < 0.0 ||
      std::abs(weights.spatial + weights.appearance - 1.0) > 1e-9 || !(weights.gate_mm > 0.0)) {
    throw Error(ErrorCode::kConfig, "cost weights must be non-negative and sum to 1, gate > 0");
  }
  if (!detection_histograms.empty() && detection_histograms.size() != detections.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one histogram slot per detection expected");
  }
  const auto rows = static_cast<Eigen::Index>(tracklets.size());
  const auto cols = static_cast<Eigen::Index>(detections.size());
  CostMatrix out{Eigen::MatrixXd::Zero(rows, cols), FeasibilityMask::Constant(rows, cols, false)};
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Tracklet& t = *tracklets[r];
    const Histogram* track_hist = weights.appearance > 0.0 ? t.Appearance() : nullptr;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double distance = (t.last().world_xy - detections[c].world_xy).norm();
      const double spatial = std::min(distance / weights.gate_mm, 1.0);
      const std::optional<Histogram>* det_hist =
          detection_histograms.empty() ? nullptr : &detection_histograms[c];
      if (track_hist != nullptr && det_hist != nullptr && det_hist->has_value()) {
        out.cost(r, c) = weights.spatial * spatial +
                         weights.appearance * BhattacharyyaDistance(*track_hist, **det_hist);
      } else {
        out.cost(r, c) = spatial;
      }
      out.feasible(r, c) = distance <= weights.gate_mm;
    }
  }
  return out;
}

TrackSet TrackerStep(TrackSet set, int frame_index, std::span<const Detection> detections,
                     const PointCloud* cloud, const TrackerParams& params) {
  if (set.frame_cursor && frame_index != *set.frame_cursor + 1) {
    throw Error(ErrorCode::kFrameOrderViolation,
                "expected frame " + std::to_string(*set.frame_cursor + 1) + ", got " +
                    std::to_string(frame_index));
  }

  std::vector<std::optional<Histogram>> histograms(detections.size());
  if (cloud != nullptr && cloud->has_color() && params.weights.appearance > 0.0 &&
      !detections.empty()) {
    std::vector<TopDownBox> columns;
    columns.reserve(detections.size());
    for (const auto& d : detections) {
      columns.push_back({d.world_xy, params.footprint_half_mm, params.column_z_min_mm});
    }
    histograms = AppearanceHistograms(*cloud, columns);
  }

  std::vector<Tracklet*> active;
  for (auto& [_, t] : set.tracklets) {
    if (t.status != TrackStatus::kTerminated) active.push_back(&t);
  }
  std::vector<const Tracklet*> active_view(active.begin(), active.end());
  const CostMatrix matrix = BuildCostMatrix(active_view, detections, histograms, params.weights);
  const Assignment assignment = HungarianAssign(matrix.cost, matrix.feasible);

  const auto make_state = [&](std::size_t d) {
    TrackState s;
    s.frame_index = frame_index;
    s.world_xy = detections[d].world_xy;
    s.height_mm = detections[d].height_mm;
    s.score = detections[d].score;
    s.histogram = histograms[d];
    return s;
  };

  for (const auto& [row, col] : assignment.pairs) {
    Tracklet& t = *active[row];
    t.states.push_back(make_state(col));
    t.misses = 0;
    ++t.hits;
    if (t.status == TrackStatus::kCandidate && t.hits >= params.confirm_hits) {
      t.status = TrackStatus::kConfirmed;
    }
  }
  for (int row : assignment.unmatched_rows) {
    Tracklet& t = *active[row];
    if (t.status == TrackStatus::kCandidate) {
      const int id = t.id;
      set.tracklets.erase(id);
      continue;
    }
    t.hits = 0;
    if (++t.misses >= params.max_misses) t.status = TrackStatus::kTerminated;
  }
  for (int col : assignment.unmatched_cols) {
    if (detections[col].score < params.init_threshold) continue;
    Tracklet t;
    t.id = set.next_id++;
    t.states.push_back(make_state(col));
    t.hits = 1;
    t.status = t.hits >= params.confirm_hits ? TrackStatus::kConfirmed : TrackStatus::kCandidate;
    set.tracklets.emplace(t.id, std::move(t));
  }
  set.frame_cursor = frame_index;
  return set;
}

std::vector<const Tracklet*> ConfirmedTracklets(const TrackSet& set) {
  std::vector<const Tracklet*> out;
  for (const auto& [_, t] : set.tracklets) {
    if (t.status != TrackStatus::kCandidate) out.push_back(&t);
  }
  return out;
}

}  // namespace autolabel
