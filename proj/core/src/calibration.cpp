#include "autolabel/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <span>
#include <sstream>
#include <string>

#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include "autolabel/error.hpp"

namespace autolabel {
namespace {

using EdgeKey = std::pair<int, int>;  // (camera, marker)

Eigen::Matrix3d Skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Eigen::Quaterniond ExpMap(const Eigen::Vector3d& omega) {
  const double angle = omega.norm();
  if (angle < 1e-12) {
    return Eigen::Quaterniond(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z()).normalized();
  }
  return Eigen::Quaterniond(Eigen::AngleAxisd(angle, omega / angle));
}

std::string Join(const std::vector<int>& ids) {
  std::ostringstream out;
  for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? "," : "") << ids[i];
  return out.str();
}

// Full corner sets per (camera, marker) edge; partial edges are left out.
std::map<EdgeKey, std::array<Eigen::Vector2d, 4>> FullEdges(const CalibrationGraph& graph) {
  std::map<EdgeKey, std::array<std::optional<Eigen::Vector2d>, 4>> partial;
  for (const auto& obs : graph.observations) {
    partial[{obs.camera_id, obs.marker_id}][obs.corner_index] = obs.pixel;
  }
  std::map<EdgeKey, std::array<Eigen::Vector2d, 4>> full;
  for (const auto& [key, corners] : partial) {
    if (std::all_of(corners.begin(), corners.end(), [](const auto& c) { return c.has_value(); })) {
      full[key] = {*corners[0], *corners[1], *corners[2], *corners[3]};
    }
  }
  return full;
}

struct PoseFit {
  Pose pose;
  double cost = std::numeric_limits<double>::infinity();
};

// One pixel explained by intrinsics * (left * X * point) for a free pose X.
struct PoseView {
  const CameraIntrinsics* k = nullptr;
  Pose left = Pose::Identity();
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();
};

double PoseCost(std::span<const PoseView> views, const Pose& x, Eigen::VectorXd* residual = nullptr) {
  if (residual) residual->resize(2 * static_cast<Eigen::Index>(views.size()));
  double cost = 0.0;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& v = views[i];
    const Eigen::Vector3d c = v.left.Apply(x.Apply(v.point));
    if (c.z() <= 1e-9) return std::numeric_limits<double>::infinity();
    const Eigen::Vector2d r(v.k->fx * c.x() / c.z() + v.k->cx - v.pixel.x(),
                            v.k->fy * c.y() / c.z() + v.k->cy - v.pixel.y());
    if (residual) residual->segment<2>(2 * static_cast<Eigen::Index>(i)) = r;
    cost += r.squaredNorm();
  }
  return cost;
}

// Small damped Gauss-Newton on a single pose.
PoseFit RefinePose(std::span<const PoseView> views, Pose pose) {
  Eigen::VectorXd r;
  double cost = PoseCost(views, pose, &r);
  if (!std::isfinite(cost)) return {pose, cost};
  double lambda = 1e-3;
  const auto n = static_cast<Eigen::Index>(r.size());
  auto moved = [&](const Eigen::Matrix<double, 6, 1>& delta) {
    return Pose(ExpMap(delta.head<3>()) * pose.rotation(),
                ExpMap(delta.head<3>()) * pose.translation() + delta.tail<3>());
  };
  for (int iter = 0; iter < 50; ++iter) {
    Eigen::MatrixXd jac(n, 6);
    for (int d = 0; d < 6; ++d) {
      const double step = d < 3 ? 1e-7 : 1e-4;
      Eigen::Matrix<double, 6, 1> delta = Eigen::Matrix<double, 6, 1>::Zero();
      delta(d) = step;
      Eigen::VectorXd rd;
      if (!std::isfinite(PoseCost(views, moved(delta), &rd))) return {pose, cost};
      jac.col(d) = (rd - r) / step;
    }
    const Eigen::Matrix<double, 6, 6> jtj = jac.transpose() * jac;
    const Eigen::Matrix<double, 6, 1> g = jac.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 10 && !improved; ++tries) {
      Eigen::Matrix<double, 6, 6> a = jtj;
      a.diagonal() *= 1.0 + lambda;
      const Pose next = moved(-a.ldlt().solve(g));
      Eigen::VectorXd rn;
      const double c = PoseCost(views, next, &rn);
      if (c < cost) {
        const bool converged = cost - c < 1e-12 * (1.0 + cost);
        pose = next;
        r = rn;
        cost = c;
        lambda = std::max(lambda * 0.1, 1e-9);
        improved = true;
        if (converged) return {pose, cost};
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return {pose, cost};
}

// Both planar-ambiguity branches of camera_from_marker, refined on the four
// corners and sorted best first.
std::array<PoseFit, 2> PlanarPoseCandidates(const CameraIntrinsics& intrinsics, double side_mm,
                                            const std::array<Eigen::Vector2d, 4>& pixels);

MarkerCorners TransformCorners(const Pose& marker_to_world, const MarkerCorners& local) {
  MarkerCorners out;
  for (int i = 0; i < 4; ++i) out[i] = marker_to_world.Apply(local[i]);
  return out;
}

}  // namespace

MarkerCorners CanonicalMarkerCorners(double side_mm) {
  const double h = 0.5 * side_mm;
  return {Eigen::Vector3d(-h, h, 0.0), Eigen::Vector3d(h, h, 0.0), Eigen::Vector3d(h, -h, 0.0),
          Eigen::Vector3d(-h, -h, 0.0)};
}

void CalibrationGraph::Validate() const {
  for (const auto& obs : observations) {
    if (obs.corner_index < 0 || obs.corner_index > 3) {
      throw Error(ErrorCode::kData, "corner index " + std::to_string(obs.corner_index) +
                                        " out of range for marker " + std::to_string(obs.marker_id));
    }
    auto cam = cameras.find(obs.camera_id);
    if (cam == cameras.end()) {
      throw Error(ErrorCode::kMissingEntity, "observation references unknown camera " +
                                                 std::to_string(obs.camera_id));
    }
    if (!marker_side_mm.contains(obs.marker_id)) {
      throw Error(ErrorCode::kMissingEntity, "observation references unknown marker " +
                                                 std::to_string(obs.marker_id));
    }
    const auto& k = cam->second;
    if (obs.pixel.x() < 0.0 || obs.pixel.y() < 0.0 || obs.pixel.x() > k.width ||
        obs.pixel.y() > k.height) {
      throw Error(ErrorCode::kData, "observation outside image of camera " +
                                        std::to_string(obs.camera_id));
    }
  }
}

std::vector<CalibrationGraph::Component> CalibrationGraph::ConnectedComponents() const {
  // Vertices: cameras as (0, id), markers as (1, id).
  using Vertex = std::pair<int, int>;
  std::map<Vertex, std::set<Vertex>> adjacency;
  for (const auto& [id, _] : cameras) adjacency[{0, id}];
  for (const auto& [id, _] : marker_side_mm) adjacency[{1, id}];
  for (const auto& obs : observations) {
    adjacency[{0, obs.camera_id}].insert({1, obs.marker_id});
    adjacency[{1, obs.marker_id}].insert({0, obs.camera_id});
  }
  std::set<Vertex> seen;
  std::vector<Component> components;
  for (const auto& [start, _] : adjacency) {
    if (seen.contains(start)) continue;
    Component component;
    std::deque<Vertex> queue{start};
    seen.insert(start);
    while (!queue.empty()) {
      const Vertex v = queue.front();
      queue.pop_front();
      (v.first == 0 ? component.cameras : component.markers).push_back(v.second);
      for (const auto& next : adjacency[v]) {
        if (seen.insert(next).second) queue.push_back(next);
      }
    }
    std::sort(component.cameras.begin(), component.cameras.end());
    std::sort(component.markers.begin(), component.markers.end());
    components.push_back(std::move(component));
  }
  return components;
}

namespace {

std::array<PoseFit, 2> PlanarPoseCandidates(const CameraIntrinsics& intrinsics, double side_mm,
                                            const std::array<Eigen::Vector2d, 4>& pixels) {
  const MarkerCorners object = CanonicalMarkerCorners(side_mm);
  const Eigen::Matrix3d k_inv = intrinsics.Matrix().inverse();

  // DLT for the plane-to-normalized-image homography.
  Eigen::Matrix<double, 8, 9> a;
  for (int i = 0; i < 4; ++i) {
    const double x = object[i].x();
    const double y = object[i].y();
    const Eigen::Vector3d n = k_inv * pixels[i].homogeneous();
    const double u = n.x() / n.z();
    const double v = n.y() / n.z();
    a.row(2 * i) << x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, -u;
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, -v;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Eigen::Matrix3d hom;
  hom << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);

  const double norm = 0.5 * (hom.col(0).norm() + hom.col(1).norm());
  if (norm < 1e-15) {
    throw Error(ErrorCode::kInsufficientCorners, "degenerate marker corner configuration");
  }
  hom /= norm;
  if (hom(2, 2) < 0.0) hom = -hom;  // marker in front of the camera

  Eigen::Matrix3d r;
  r.col(0) = hom.col(0);
  r.col(1) = hom.col(1);
  r.col(2) = hom.col(0).cross(hom.col(1));
  const Eigen::JacobiSVD<Eigen::Matrix3d> polar(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d rotation = polar.matrixU() * polar.matrixV().transpose();
  if (rotation.determinant() < 0.0) {
    Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
    fix(2, 2) = -1.0;
    rotation = polar.matrixU() * fix * polar.matrixV().transpose();
  }
  const Pose direct(Eigen::Quaterniond(rotation), hom.col(2));

  // Planar pose ambiguity: the marker normal mirrored about the line of sight
  // explains the corners almost as well. Refine both and keep the better one.
  const Eigen::Vector3d normal = rotation.col(2);
  const Eigen::Vector3d sight = -direct.translation().normalized();
  Pose mirrored = direct;
  const Eigen::Vector3d axis = normal.cross(sight);
  if (axis.norm() > 1e-9) {
    const double angle = 2.0 * std::atan2(axis.norm(), normal.dot(sight));
    const Eigen::Matrix3d flip = Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
    mirrored = Pose(Eigen::Quaterniond(flip * rotation), direct.translation());
  }
  std::array<PoseView, 4> views;
  for (int i = 0; i < 4; ++i) views[i] = {&intrinsics, Pose::Identity(), object[i], pixels[i]};
  std::array<PoseFit, 2> fits{RefinePose(views, direct), RefinePose(views, mirrored)};
  if (!std::isfinite(fits[0].cost) && !std::isfinite(fits[1].cost)) fits[0] = {direct, fits[0].cost};
  if (fits[1].cost < fits[0].cost) std::swap(fits[0], fits[1]);
  return fits;
}

}  // namespace

Pose SolvePlanarMarkerPose(const CameraIntrinsics& intrinsics, double side_mm,
                           const std::array<Eigen::Vector2d, 4>& pixels) {
  return PlanarPoseCandidates(intrinsics, side_mm, pixels)[0].pose;
}

CalibrationEstimate InitializePoses(const CalibrationGraph& graph, int anchor_marker) {
  graph.Validate();
  if (!graph.marker_side_mm.contains(anchor_marker)) {
    throw Error(ErrorCode::kMissingEntity, "anchor marker " + std::to_string(anchor_marker) +
                                               " is not part of the graph");
  }
  const auto components = graph.ConnectedComponents();
  if (components.size() > 1) {
    std::ostringstream msg;
    msg << components.size() << " components:";
    for (const auto& c : components) {
      msg << " {cameras [" << Join(c.cameras) << "] markers [" << Join(c.markers) << "]}";
    }
    throw Error(ErrorCode::kDisconnectedGraph, msg.str());
  }

  const auto edges = FullEdges(graph);
  std::map<int, std::vector<int>> markers_of_camera;
  std::map<int, std::vector<int>> cameras_of_marker;
  for (const auto& [key, _] : edges) {
    markers_of_camera[key.first].push_back(key.second);
    cameras_of_marker[key.second].push_back(key.first);
  }

  CalibrationEstimate estimate;
  estimate.anchor_marker = anchor_marker;
  std::map<int, Pose> marker_to_world;
  marker_to_world[anchor_marker] = Pose::Identity();

  // Breadth-first over the full-corner edges; each entity is placed once.
  std::deque<std::pair<bool, int>> queue{{false, anchor_marker}};  // (is_camera, id)
  while (!queue.empty()) {
    const auto [is_camera, id] = queue.front();
    queue.pop_front();
    if (!is_camera) {
      for (int camera_id : cameras_of_marker[id]) {
        if (estimate.poses.contains(camera_id)) continue;
        const Pose camera_from_marker =
            SolvePlanarMarkerPose(graph.cameras.at(camera_id), graph.marker_side_mm.at(id),
                                  edges.at({camera_id, id}));
        estimate.poses[camera_id] = camera_from_marker * marker_to_world.at(id).Inverse();
        queue.push_back({true, camera_id});
      }
    } else {
      for (int marker_id : markers_of_camera[id]) {
        if (marker_to_world.contains(marker_id)) continue;
        const Pose camera_from_marker =
            SolvePlanarMarkerPose(graph.cameras.at(id), graph.marker_side_mm.at(marker_id),
                                  edges.at({id, marker_id}));
        marker_to_world[marker_id] = estimate.poses.at(id).Inverse() * camera_from_marker;
        queue.push_back({false, marker_id});
      }
    }
  }

  std::vector<int> missing_cameras;
  for (const auto& [id, _] : graph.cameras) {
    if (!estimate.poses.contains(id)) missing_cameras.push_back(id);
  }
  std::vector<int> missing_markers;
  for (const auto& [id, _] : graph.marker_side_mm) {
    if (!marker_to_world.contains(id)) missing_markers.push_back(id);
  }
  if (!missing_cameras.empty() || !missing_markers.empty()) {
    throw Error(ErrorCode::kInsufficientCorners,
                "no fully observed placed marker reaches cameras [" + Join(missing_cameras) +
                    "] / markers [" + Join(missing_markers) + "]");
  }

  // Consensus rounds: each camera and non-anchor marker is re-picked from every
  // placement its placed neighbours imply (both planar branches), scored on all
  // of its corners, then refined.
  std::map<EdgeKey, std::array<PoseFit, 2>> branches;
  for (const auto& [key, pixels] : edges) {
    branches[key] = PlanarPoseCandidates(graph.cameras.at(key.first),
                                         graph.marker_side_mm.at(key.second), pixels);
  }
  auto keep_best = [](std::span<const PoseView> views, Pose& current,
                      const std::vector<Pose>& candidates) {
    PoseFit best{current, PoseCost(views, current)};
    for (const auto& c : candidates) {
      const double cost = PoseCost(views, c);
      if (cost < best.cost) best = {c, cost};
    }
    const PoseFit refined = RefinePose(views, best.pose);
    current = refined.cost <= best.cost ? refined.pose : best.pose;
  };
  // The anchor pins the world frame but is one small square; re-pick the
  // rig-to-anchor transform from every camera's anchor branches by total
  // anchor reprojection cost.
  auto align_to_anchor = [&]() {
    const auto local = CanonicalMarkerCorners(graph.marker_side_mm.at(anchor_marker));
    std::vector<Pose> candidates{Pose::Identity()};
    for (int camera_id : cameras_of_marker[anchor_marker]) {
      for (const auto& b : branches.at({camera_id, anchor_marker})) {
        candidates.push_back(estimate.poses.at(camera_id).Inverse() * b.pose);
      }
    }
    double best_cost = std::numeric_limits<double>::infinity();
    Pose best = Pose::Identity();
    for (const auto& h : candidates) {
      double cost = 0.0;
      for (int camera_id : cameras_of_marker[anchor_marker]) {
        std::array<PoseView, 4> views;
        const auto& pixels = edges.at({camera_id, anchor_marker});
        for (int i = 0; i < 4; ++i) views[i] = {&graph.cameras.at(camera_id), Pose::Identity(), local[i], pixels[i]};
        cost += PoseCost(views, estimate.poses.at(camera_id) * h);
      }
      if (cost < best_cost) {
        best_cost = cost;
        best = h;
      }
    }
    for (auto& [_, pose] : estimate.poses) pose = pose * best;
    const Pose inverse = best.Inverse();
    for (auto& [marker_id, placed] : marker_to_world) {
      if (marker_id != anchor_marker) placed = inverse * placed;
    }
  };
  for (int round = 0; round < 3; ++round) {
    if (round > 0) align_to_anchor();
    for (auto& [camera_id, pose] : estimate.poses) {
      const auto& k = graph.cameras.at(camera_id);
      std::vector<PoseView> views;
      std::vector<Pose> candidates;
      for (int marker_id : markers_of_camera[camera_id]) {
        const Pose& placed = marker_to_world.at(marker_id);
        const auto local = CanonicalMarkerCorners(graph.marker_side_mm.at(marker_id));
        const auto& pixels = edges.at({camera_id, marker_id});
        for (int i = 0; i < 4; ++i) views.push_back({&k, Pose::Identity(), placed.Apply(local[i]), pixels[i]});
        for (const auto& b : branches.at({camera_id, marker_id})) candidates.push_back(b.pose * placed.Inverse());
      }
      keep_best(views, pose, candidates);
    }
    for (auto& [marker_id, placed] : marker_to_world) {
      if (marker_id == anchor_marker) continue;
      const auto local = CanonicalMarkerCorners(graph.marker_side_mm.at(marker_id));
      std::vector<PoseView> views;
      std::vector<Pose> candidates;
      for (int camera_id : cameras_of_marker[marker_id]) {
        const Pose& camera = estimate.poses.at(camera_id);
        const auto& pixels = edges.at({camera_id, marker_id});
        for (int i = 0; i < 4; ++i) views.push_back({&graph.cameras.at(camera_id), camera, local[i], pixels[i]});
        for (const auto& b : branches.at({camera_id, marker_id})) candidates.push_back(camera.Inverse() * b.pose);
      }
      keep_best(views, placed, candidates);
    }
  }

  for (const auto& [id, pose] : marker_to_world) {
    estimate.marker_corners[id] =
        TransformCorners(pose, CanonicalMarkerCorners(graph.marker_side_mm.at(id)));
  }
  return estimate;
}

ReprojectionProblem::ReprojectionProblem(const CalibrationGraph& graph, int anchor_marker)
    : graph_(graph), anchor_marker_(anchor_marker), observations_(graph.observations) {
  // Canonical ordering makes the solve independent of input order.
  std::sort(observations_.begin(), observations_.end(), [](const auto& a, const auto& b) {
    return std::tie(a.camera_id, a.marker_id, a.corner_index) <
           std::tie(b.camera_id, b.marker_id, b.corner_index);
  });
  int offset = 0;
  for (const auto& [id, _] : graph.cameras) {
    camera_offset_[id] = offset;
    offset += 6;
  }
  for (const auto& [id, _] : graph.marker_side_mm) {
    if (id == anchor_marker) continue;
    marker_offset_[id] = offset;
    offset += 12;
  }
  num_parameters_ = offset;
}

int ReprojectionProblem::MarkerOffset(int marker_id) const {
  auto it = marker_offset_.find(marker_id);
  return it == marker_offset_.end() ? -1 : it->second;
}

std::optional<Eigen::VectorXd> ReprojectionProblem::Residuals(
    const CalibrationEstimate& state) const {
  Eigen::VectorXd r(num_residuals());
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const auto& obs = observations_[i];
    const Pose& pose = state.poses.at(obs.camera_id);
    const Eigen::Vector3d p = pose.Apply(state.marker_corners.at(obs.marker_id)[obs.corner_index]);
    if (!(p.z() > 1e-6)) return std::nullopt;
    const auto& k = graph_.cameras.at(obs.camera_id);
    r(2 * i) = k.fx * p.x() / p.z() + k.cx - obs.pixel.x();
    r(2 * i + 1) = k.fy * p.y() / p.z() + k.cy - obs.pixel.y();
  }
  return r;
}

Eigen::SparseMatrix<double> ReprojectionProblem::Jacobian(const CalibrationEstimate& state) const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(observations_.size() * 2 * 9);
  for (std::size_t i = 0; i < observations_.size(); ++i) {
    const auto& obs = observations_[i];
    const Pose& pose = state.poses.at(obs.camera_id);
    const Eigen::Vector3d& world = state.marker_corners.at(obs.marker_id)[obs.corner_index];
    const Eigen::Vector3d rotated = pose.rotation() * world;
    const Eigen::Vector3d p = rotated + pose.translation();
    const auto& k = graph_.cameras.at(obs.camera_id);
    const double iz = 1.0 / p.z();
    Eigen::Matrix<double, 2, 3> d_proj;
    d_proj << k.fx * iz, 0.0, -k.fx * p.x() * iz * iz, 0.0, k.fy * iz, -k.fy * p.y() * iz * iz;

    Eigen::Matrix<double, 2, 6> d_pose;
    d_pose.leftCols<3>() = -d_proj * Skew(rotated);
    d_pose.rightCols<3>() = d_proj;
    const int row = static_cast<int>(2 * i);
    const int cam = camera_offset_.at(obs.camera_id);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 6; ++c) triplets.emplace_back(row + r, cam + c, d_pose(r, c));
    }
    const int marker = MarkerOffset(obs.marker_id);
    if (marker >= 0) {
      const Eigen::Matrix<double, 2, 3> d_point = d_proj * pose.RotationMatrix();
      const int col = marker + 3 * obs.corner_index;
      for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 3; ++c) triplets.emplace_back(row + r, col + c, d_point(r, c));
      }
    }
  }
  Eigen::SparseMatrix<double> jac(num_residuals(), num_parameters_);
  jac.setFromTriplets(triplets.begin(), triplets.end());
  return jac;
}

CalibrationEstimate ReprojectionProblem::Retract(const CalibrationEstimate& state,
                                                 const Eigen::VectorXd& delta) const {
  CalibrationEstimate out = state;
  for (const auto& [id, offset] : camera_offset_) {
    const Pose& pose = state.poses.at(id);
    // p' = exp(w) R X + t + dt
    const Eigen::Quaterniond dq = ExpMap(delta.segment<3>(offset));
    out.poses[id] = Pose(dq * pose.rotation(), pose.translation() + delta.segment<3>(offset + 3));
  }
  for (const auto& [id, offset] : marker_offset_) {
    auto& corners = out.marker_corners.at(id);
    for (int c = 0; c < 4; ++c) corners[c] += delta.segment<3>(offset + 3 * c);
  }
  return out;
}

namespace {

// Per-observation robust weights (IRLS) and the matching cost.
struct Weighted {
  Eigen::VectorXd sqrt_weights;  // one per scalar residual
  double cost = 0.0;
};

Weighted Weigh(const Eigen::VectorXd& r, const std::optional<double>& huber) {
  Weighted w;
  w.sqrt_weights = Eigen::VectorXd::Ones(r.size());
  for (Eigen::Index i = 0; i < r.size(); i += 2) {
    const double e = std::hypot(r(i), r(i + 1));
    if (huber && e > *huber) {
      const double s = std::sqrt(*huber / e);
      w.sqrt_weights(i) = s;
      w.sqrt_weights(i + 1) = s;
      w.cost += 2.0 * *huber * e - *huber * *huber;
    } else {
      w.cost += e * e;
    }
  }
  return w;
}

double Cost(const ReprojectionProblem& problem, const CalibrationEstimate& state,
            const std::optional<double>& huber) {
  const auto r = problem.Residuals(state);
  if (!r) return std::numeric_limits<double>::infinity();
  return Weigh(*r, huber).cost;
}

void CheckObservability(const CalibrationGraph& graph, int anchor_marker) {
  std::map<std::pair<int, int>, std::set<int>> viewers;  // (marker, corner) -> cameras
  std::map<int, int> per_camera;
  for (const auto& obs : graph.observations) {
    viewers[{obs.marker_id, obs.corner_index}].insert(obs.camera_id);
    ++per_camera[obs.camera_id];
  }
  for (const auto& [id, _] : graph.cameras) {
    if (per_camera[id] < 3) {
      throw Error(ErrorCode::kSingularNormalEquations,
                  "camera " + std::to_string(id) + " has fewer than 3 corner observations");
    }
  }
  for (const auto& [id, _] : graph.marker_side_mm) {
    if (id == anchor_marker) continue;
    for (int c = 0; c < 4; ++c) {
      if (viewers[{id, c}].size() < 2) {
        throw Error(ErrorCode::kSingularNormalEquations,
                    "corner " + std::to_string(c) + " of marker " + std::to_string(id) +
                        " is seen by fewer than two cameras; its depth is unobservable");
      }
    }
  }
}

}  // namespace

CalibrationResult SolveExtrinsics(const CalibrationGraph& graph, const CalibrationEstimate& init,
                                  const SolverOptions& options) {
  graph.Validate();
  CheckObservability(graph, init.anchor_marker);
  for (const auto& [id, _] : graph.cameras) {
    if (!init.poses.contains(id)) {
      throw Error(ErrorCode::kMissingEntity, "no initial pose for camera " + std::to_string(id));
    }
  }
  for (const auto& [id, _] : graph.marker_side_mm) {
    if (!init.marker_corners.contains(id)) {
      throw Error(ErrorCode::kMissingEntity, "no initial corners for marker " + std::to_string(id));
    }
  }

  const ReprojectionProblem problem(graph, init.anchor_marker);
  CalibrationEstimate state = init;
  state.marker_corners[init.anchor_marker] =
      CanonicalMarkerCorners(graph.marker_side_mm.at(init.anchor_marker));

  CalibrationResult result;
  result.anchor_marker = init.anchor_marker;
  double cost = Cost(problem, state, options.huber_px);
  if (!std::isfinite(cost)) {
    throw Error(ErrorCode::kDivergedSolve, "initial estimate places points behind a camera");
  }
  result.cost_history.push_back(cost);

  double lambda = options.initial_lambda;
  int iteration = 0;
  bool converged = cost <= options.absolute_cost_tolerance;
  while (!converged && iteration < options.max_iterations) {
    ++iteration;
    const Eigen::VectorXd residuals = *problem.Residuals(state);
    const Weighted weighted = Weigh(residuals, options.huber_px);
    Eigen::SparseMatrix<double> jac = problem.Jacobian(state);
    jac = weighted.sqrt_weights.asDiagonal() * jac;
    const Eigen::VectorXd r = weighted.sqrt_weights.cwiseProduct(residuals);

    const Eigen::SparseMatrix<double> normal = (jac.transpose() * jac).pruned();
    const Eigen::VectorXd gradient = jac.transpose() * r;
    const Eigen::VectorXd diagonal = normal.diagonal();
    if ((diagonal.array() <= 0.0).any()) {
      throw Error(ErrorCode::kSingularNormalEquations, "a parameter has no observations");
    }
    if (gradient.lpNorm<Eigen::Infinity>() <= 1e-12 * (1.0 + cost)) {
      converged = true;
      break;
    }

    bool accepted = false;
    while (!accepted) {
      Eigen::SparseMatrix<double> damped = normal;
      for (Eigen::Index i = 0; i < damped.rows(); ++i) {
        damped.coeffRef(i, i) += lambda * diagonal(i);
      }
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(damped);
      if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::kSingularNormalEquations, "normal equations could not be factored");
      }
      const Eigen::VectorXd step = solver.solve(-gradient);
      if (solver.info() != Eigen::Success || !step.allFinite()) {
        throw Error(ErrorCode::kSingularNormalEquations, "normal equations are singular");
      }
      CalibrationEstimate candidate = problem.Retract(state, step);
      const double candidate_cost = Cost(problem, candidate, options.huber_px);
      if (candidate_cost < cost) {
        const double relative = (cost - candidate_cost) / cost;
        state = std::move(candidate);
        cost = candidate_cost;
        result.cost_history.push_back(cost);
        lambda = std::max(lambda * 0.1, 1e-15);
        accepted = true;
        if (relative < options.relative_tolerance || cost <= options.absolute_cost_tolerance) {
          converged = true;
        }
      } else {
        lambda *= 10.0;
        if (lambda > options.max_lambda) {
          // No descent left: either at a stationary point or genuinely stuck.
          if (gradient.lpNorm<Eigen::Infinity>() <= 1e-6 * (1.0 + cost)) {
            converged = true;
            break;
          }
          throw Error(ErrorCode::kDivergedSolve,
                      "damping exceeded its cap without reducing the cost (cost " +
                          std::to_string(cost) + ")");
        }
      }
    }
  }

  result.poses = state.poses;
  result.marker_corners = state.marker_corners;
  result.iterations = iteration;
  result.rms_px = ReprojectionRms(state, graph).rms_px;
  return result;
}

ResidualStats ReprojectionRms(const CalibrationEstimate& result, const CalibrationGraph& graph) {
  if (graph.observations.empty()) {
    throw Error(ErrorCode::kMissingEntity, "no observations to evaluate");
  }
  ResidualStats stats;
  std::map<int, std::pair<double, int>> per_camera;
  double total = 0.0;
  for (const auto& obs : graph.observations) {
    auto pose = result.poses.find(obs.camera_id);
    auto corners = result.marker_corners.find(obs.marker_id);
    auto intrinsics = graph.cameras.find(obs.camera_id);
    if (pose == result.poses.end() || corners == result.marker_corners.end() ||
        intrinsics == graph.cameras.end()) {
      throw Error(ErrorCode::kMissingEntity,
                  "observation of marker " + std::to_string(obs.marker_id) + " by camera " +
                      std::to_string(obs.camera_id) + " has no solved counterpart");
    }
    const CameraModel camera{obs.camera_id, intrinsics->second, pose->second};
    const Eigen::Vector2d error =
        ProjectPoint(camera, corners->second[obs.corner_index]) - obs.pixel;
    const double sq = error.squaredNorm();
    total += sq;
    stats.max_px = std::max(stats.max_px, std::sqrt(sq));
    auto& [sum, count] = per_camera[obs.camera_id];
    sum += sq;
    ++count;
  }
  stats.count = graph.observations.size();
  stats.rms_px = std::sqrt(total / (2.0 * static_cast<double>(stats.count)));
  for (const auto& [id, acc] : per_camera) {
    stats.per_camera_rms_px[id] = std::sqrt(acc.first / (2.0 * acc.second));
  }
  return stats;
}

ResidualStats ReprojectionRms(const CalibrationResult& result, const CalibrationGraph& graph) {
  return ReprojectionRms(result.AsEstimate(), graph);
}

}  // namespace autolabel
