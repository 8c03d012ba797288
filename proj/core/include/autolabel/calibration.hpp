#pragma once

#include <array>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "autolabel/geometry.hpp"

namespace autolabel {

// One detected marker corner. Corners are numbered 0..3 in the usual fiducial
// order: top-left, top-right, bottom-right, bottom-left of the printed square.
struct MarkerObservation {
  int camera_id = 0;
  int marker_id = 0;
  int corner_index = 0;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

using MarkerCorners = std::array<Eigen::Vector3d, 4>;

inline constexpr double kDefaultMarkerSideMm = 150.0;

// Corners of a square marker of the given side in its own frame (z = 0,
// normal +z), ordered as MarkerObservation::corner_index.
MarkerCorners CanonicalMarkerCorners(double side_mm);

// Bipartite camera/marker visibility graph. Edges are implied by observations.
struct CalibrationGraph {
  std::map<int, CameraIntrinsics> cameras;
  std::map<int, double> marker_side_mm;
  std::vector<MarkerObservation> observations;

  struct Component {
    std::vector<int> cameras;
    std::vector<int> markers;
  };

  // Rejects observations with a bad corner index, unknown camera/marker, or a
  // pixel outside the observing camera's image.
  void Validate() const;
  std::vector<Component> ConnectedComponents() const;
};

struct CalibrationEstimate {
  int anchor_marker = 0;
  std::map<int, Pose> poses;  // camera id -> world-to-camera
  std::map<int, MarkerCorners> marker_corners;
};

// Places every camera and marker by a breadth-first walk from the anchor
// marker, alternating planar PnP (camera from a placed marker) and marker
// placement (marker from a placed camera). The anchor defines the world frame.
// A few consensus rounds then re-pick each placement among the planar
// ambiguity branches implied by all placed neighbours.
CalibrationEstimate InitializePoses(const CalibrationGraph& graph, int anchor_marker);

// Pose of a planar square marker in the camera frame from its four corner
// pixels (homography decomposition, then orthonormalization).
Pose SolvePlanarMarkerPose(const CameraIntrinsics& intrinsics, double side_mm,
                           const std::array<Eigen::Vector2d, 4>& pixels);

struct SolverOptions {
  int max_iterations = 200;
  double relative_tolerance = 1e-10;
  // Cost below which the problem is considered exactly solved (px^2).
  double absolute_cost_tolerance = 1e-18;
  double initial_lambda = 1e-4;
  double max_lambda = 1e12;
  // Robust loss threshold in pixels; plain least squares when unset.
  std::optional<double> huber_px;
};

struct CalibrationResult {
  int anchor_marker = 0;
  std::map<int, Pose> poses;
  std::map<int, MarkerCorners> marker_corners;
  double rms_px = 0.0;
  int iterations = 0;
  // Cost after initialization followed by the cost of every accepted step.
  std::vector<double> cost_history;

  CalibrationEstimate AsEstimate() const { return {anchor_marker, poses, marker_corners}; }
};

// Squared reprojection error over cameras and non-anchor marker corners.
// Parameters are ordered cameras (by id, 6 each: rotation increment then
// translation) followed by non-anchor markers (by id, 12 each: corners 0..3).
class ReprojectionProblem {
 public:
  ReprojectionProblem(const CalibrationGraph& graph, int anchor_marker);

  int num_parameters() const { return num_parameters_; }
  int num_residuals() const { return static_cast<int>(2 * observations_.size()); }

  // Residuals are projected minus observed pixel, two per observation.
  // Returns nullopt when a point falls behind its camera.
  std::optional<Eigen::VectorXd> Residuals(const CalibrationEstimate& state) const;
  // Jacobian with respect to the local parameterization used by Retract.
  Eigen::SparseMatrix<double> Jacobian(const CalibrationEstimate& state) const;
  // Rotation increments act on the left: R <- exp(delta) * R.
  CalibrationEstimate Retract(const CalibrationEstimate& state, const Eigen::VectorXd& delta) const;

  int CameraOffset(int camera_id) const { return camera_offset_.at(camera_id); }
  // -1 for the anchor marker.
  int MarkerOffset(int marker_id) const;

 private:
  const CalibrationGraph& graph_;
  int anchor_marker_;
  std::vector<MarkerObservation> observations_;
  std::map<int, int> camera_offset_;
  std::map<int, int> marker_offset_;
  int num_parameters_ = 0;
};

// Levenberg-Marquardt over all camera poses and non-anchor marker corners with
// the anchor marker pinned to its canonical square.
CalibrationResult SolveExtrinsics(const CalibrationGraph& graph, const CalibrationEstimate& init,
                                  const SolverOptions& options = {});

struct ResidualStats {
  // Root mean square over scalar residual components (u and v separately).
  double rms_px = 0.0;
  // Largest per-corner Euclidean residual.
  double max_px = 0.0;
  std::map<int, double> per_camera_rms_px;
  std::size_t count = 0;
};

ResidualStats ReprojectionRms(const CalibrationEstimate& result, const CalibrationGraph& graph);
ResidualStats ReprojectionRms(const CalibrationResult& result, const CalibrationGraph& graph);

}  // namespace autolabel
