#pragma once

#include <map>
#include <vector>

#include <Eigen/Core>

#include "autolabel/track.hpp"

namespace autolabel {

// Ground-plane objects of one frame: (identity, position in mm).
struct FramePoint {
  int id = 0;
  Eigen::Vector2d xy = Eigen::Vector2d::Zero();
};

using FramePoints = std::map<int, std::vector<FramePoint>>;  // frame -> objects

// Confirmed tracklets only; candidates are not reported.
FramePoints ToFramePoints(const TrackSet& tracks);

inline constexpr double kDefaultMatchRadiusMm = 1000.0;

struct MotReport {
  double idf1 = 0.0;  // percent
  double idp = 0.0;   // percent
  double idr = 0.0;   // percent
  double mota = 0.0;  // percent
  long fp = 0;
  long fn = 0;
  long ids = 0;
  long gt_total = 0;
  long pred_total = 0;
  long matches = 0;
  long idtp = 0;
};

// CLEAR-MOT on ground points. Per frame, correspondences from earlier frames
// are kept while still within the threshold; the remaining objects are
// matched by Hungarian assignment on distance. An identity switch is counted
// for each ground-truth object whose matched prediction differs from its most
// recent match. Fills fp, fn, ids, matches, gt_total, pred_total and mota.
MotReport ClearMotEvaluate(const FramePoints& gt, const FramePoints& pred,
                           double threshold_mm = kDefaultMatchRadiusMm);

struct IdScores {
  double idf1 = 0.0;
  double idp = 0.0;
  double idr = 0.0;
  long idtp = 0;
  long idfp = 0;
  long idfn = 0;
};

// Identity scores from the trajectory-level matching that maximizes the number
// of frames in which matched trajectories lie within the threshold.
IdScores Idf1Evaluate(const FramePoints& gt, const FramePoints& pred,
                      double threshold_mm = kDefaultMatchRadiusMm);

// Both of the above in one report.
MotReport Evaluate(const FramePoints& gt, const FramePoints& pred,
                   double threshold_mm = kDefaultMatchRadiusMm);

}  // namespace autolabel
