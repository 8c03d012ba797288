#include "autolabel/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "autolabel/error.hpp"

namespace autolabel {
namespace {

constexpr double kHitEpsilon = 1e-6;

std::mt19937_64 MakeRng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

double PathLength(const std::vector<Eigen::Vector2d>& w) {
  if (w.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) total += (w[(i + 1) % w.size()] - w[i]).norm();
  return total;
}

// Smallest t > eps with origin + t * dir on the surface; updates `best`.
bool NearerRoot(double a, double b, double c, double best, double* t_out,
                const Eigen::Vector3d& o, const Eigen::Vector3d& d, double z_lo, double z_hi) {
  const double disc = b * b - 4.0 * a * c;
  if (a <= 0.0 || disc < 0.0) return false;
  const double s = std::sqrt(disc);
  bool found = false;
  for (double t : {(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)}) {
    if (t <= kHitEpsilon || t >= best) continue;
    const double z = o.z() + t * d.z();
    if (z < z_lo || z > z_hi) continue;
    best = t;
    *t_out = t;
    found = true;
  }
  return found;
}

std::optional<double> IntersectCapsule(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                       const Eigen::Vector2d& center, double radius, double height) {
  const double top = std::max(height - radius, 0.0);
  double best = std::numeric_limits<double>::infinity();
  double t = 0.0;
  // Vertical cylinder side, z in [0, top].
  const Eigen::Vector2d oc(o.x() - center.x(), o.y() - center.y());
  const double a = d.x() * d.x() + d.y() * d.y();
  const double b = 2.0 * (oc.x() * d.x() + oc.y() * d.y());
  const double c = oc.squaredNorm() - radius * radius;
  if (NearerRoot(a, b, c, best, &t, o, d, 0.0, top)) best = t;
  // Hemispherical cap centered on the cylinder top.
  const Eigen::Vector3d os = o - Eigen::Vector3d(center.x(), center.y(), top);
  if (NearerRoot(d.squaredNorm(), 2.0 * os.dot(d), os.squaredNorm() - radius * radius, best, &t, o,
                 d, top, std::numeric_limits<double>::infinity())) {
    best = t;
  }
  if (std::isinf(best)) return std::nullopt;
  return best;
}

std::optional<double> IntersectBox(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                                   const BoxSpec& box) {
  double t0 = kHitEpsilon;
  double t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (o[k] < box.min_mm[k] || o[k] > box.max_mm[k]) return std::nullopt;
      continue;
    }
    double a = (box.min_mm[k] - o[k]) / d[k];
    double b = (box.max_mm[k] - o[k]) / d[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return std::nullopt;
  }
  return t0;
}

}  // namespace

MarkerCorners MarkerSpec::Corners() const {
  const Eigen::Matrix3d r = Eigen::AngleAxisd(yaw_rad, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  MarkerCorners out = CanonicalMarkerCorners(side_mm);
  for (auto& c : out) c = r * c + Eigen::Vector3d(x_mm, y_mm, 0.0);
  return out;
}

int SceneSpec::num_frames() const {
  return std::max(0, static_cast<int>(std::lround(duration_s * fps)));
}

void SceneSpec::Validate() const {
  std::ostringstream problems;
  if (!(fps > 0.0)) problems << " fps must be > 0;";
  if (!(duration_s >= 0.0)) problems << " duration_s must be >= 0;";
  if (!(bounds.x_max_mm > bounds.x_min_mm) || !(bounds.y_max_mm > bounds.y_min_mm)) {
    problems << " bounds are empty;";
  }
  for (std::size_t k = 0; k < actors.size(); ++k) {
    const ActorSpec& a = actors[k];
    const std::string name = " actors[" + std::to_string(k) + "]";
    if (!(a.height_mm > 0.0)) problems << name << ".height_mm must be positive;";
    if (a.height_mm < kMinActorHeightMm || a.height_mm > kMaxActorHeightMm) {
      problems << name << ".height_mm outside [1500, 1900];";
    }
    if (!(a.radius_mm > 0.0) || a.radius_mm * 2.0 > a.height_mm) {
      problems << name << ".radius_mm must be in (0, height/2];";
    }
    if (!(a.speed_mm_s >= 0.0) || a.speed_mm_s > kMaxActorSpeedMmS) {
      problems << name << ".speed_mm_s outside [0, 1500];";
    }
    if (a.waypoints.empty()) problems << name << ".waypoints is empty;";
    for (std::size_t w = 0; w < a.waypoints.size(); ++w) {
      if (!bounds.Contains(a.waypoints[w])) {
        problems << name << ".waypoints[" << w << "] outside bounds;";
      }
    }
  }
  for (const auto& c : cameras) {
    if (!c.intrinsics.IsValid()) problems << " camera " << c.id << " has invalid intrinsics;";
  }
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    for (std::size_t j = i + 1; j < cameras.size(); ++j) {
      if (cameras[i].id == cameras[j].id) problems << " duplicate camera id " << cameras[i].id << ";";
    }
  }
  for (std::size_t i = 0; i < markers.size(); ++i) {
    if (!(markers[i].side_mm > 0.0)) problems << " marker " << markers[i].id << " side must be > 0;";
    for (std::size_t j = i + 1; j < markers.size(); ++j) {
      if (markers[i].id == markers[j].id) problems << " duplicate marker id " << markers[i].id << ";";
    }
  }
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    if ((boxes[b].max_mm.array() <= boxes[b].min_mm.array()).any()) {
      problems << " boxes[" << b << "] is empty;";
    }
  }
  const std::string text = problems.str();
  if (!text.empty()) throw Error(ErrorCode::kInvalidSpec, text.substr(1));
}

Eigen::Vector2d PositionAlongPath(const std::vector<Eigen::Vector2d>& waypoints, double distance_mm) {
  if (waypoints.empty()) return Eigen::Vector2d::Zero();
  const double total = PathLength(waypoints);
  if (total <= 0.0) return waypoints.front();
  double s = std::fmod(distance_mm, total);
  if (s < 0.0) s += total;
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    const Eigen::Vector2d& a = waypoints[i];
    const Eigen::Vector2d& b = waypoints[(i + 1) % waypoints.size()];
    const double len = (b - a).norm();
    if (s <= len) return len > 0.0 ? Eigen::Vector2d(a + (b - a) * (s / len)) : a;
    s -= len;
  }
  return waypoints.front();
}

Scene GenerateScene(const SceneSpec& spec) {
  spec.Validate();
  Scene scene;
  scene.spec = spec;
  const int frames = spec.num_frames();
  scene.poses.resize(frames);
  for (int f = 0; f < frames; ++f) {
    const double t = f / spec.fps;
    for (const auto& actor : spec.actors) {
      scene.poses[f].push_back({PositionAlongPath(actor.waypoints, actor.speed_mm_s * t), actor.height_mm});
    }
  }
  TrackSet& gt = scene.ground_truth;
  for (std::size_t k = 0; k < spec.actors.size(); ++k) {
    Tracklet t;
    t.id = static_cast<int>(k) + 1;
    t.status = TrackStatus::kConfirmed;
    t.hits = frames;
    for (int f = 0; f < frames; ++f) {
      TrackState s;
      s.frame_index = f;
      s.world_xy = scene.poses[f][k].xy;
      s.height_mm = scene.poses[f][k].height_mm;
      s.score = 1.0;
      t.states.push_back(s);
    }
    if (!t.states.empty()) gt.tracklets.emplace(t.id, std::move(t));
  }
  gt.next_id = static_cast<int>(spec.actors.size()) + 1;
  if (frames > 0) gt.frame_cursor = frames - 1;
  return scene;
}

std::optional<double> CastPixelRay(const Scene& scene, const CameraModel& camera, int frame,
                                   const Eigen::Vector2d& pixel, bool ground_plane, Rgb* color) {
  const CameraIntrinsics& k = camera.intrinsics;
  const Eigen::Vector3d dir_cam((pixel.x() - k.cx) / k.fx, (pixel.y() - k.cy) / k.fy, 1.0);
  // With a unit optical-axis component, the ray parameter equals z-depth.
  const Eigen::Vector3d d = camera.pose.rotation().conjugate() * dir_cam;
  const Eigen::Vector3d o = camera.pose.Center();

  double best = std::numeric_limits<double>::infinity();
  Rgb hit_color = kFloorColor;
  if (frame >= 0 && frame < scene.num_frames()) {
    const auto& poses = scene.poses[frame];
    for (std::size_t a = 0; a < poses.size(); ++a) {
      const double r = scene.spec.actors[a].radius_mm;
      auto t = IntersectCapsule(o, d, poses[a].xy, r, poses[a].height_mm);
      if (t && *t < best) {
        best = *t;
        hit_color = scene.spec.actors[a].color;
      }
    }
  }
  for (const auto& box : scene.spec.boxes) {
    auto t = IntersectBox(o, d, box);
    if (t && *t < best) {
      best = *t;
      hit_color = box.color;
    }
  }
  if (ground_plane && d.z() < 0.0 && o.z() > 0.0) {
    const double t = -o.z() / d.z();
    if (t < best) {
      best = t;
      hit_color = kFloorColor;
    }
  }
  if (std::isinf(best)) return std::nullopt;
  if (color != nullptr) *color = hit_color;
  return best;
}

DepthFrame RenderDepthFrame(const Scene& scene, const CameraModel& camera, int frame,
                            const RenderOptions& options) {
  const CameraIntrinsics& k = camera.intrinsics;
  DepthFrame out;
  out.camera_id = camera.id;
  out.frame_index = frame;
  out.timestamp_ms = frame * 1000.0 / scene.spec.fps;
  out.width = k.width;
  out.height = k.height;
  out.depth.assign(static_cast<std::size_t>(k.width) * k.height, 0);
  if (options.color) out.rgb.assign(out.depth.size(), Rgb{0, 0, 0});

  std::mt19937_64 rng = MakeRng(scene.spec.seed, static_cast<std::uint64_t>(camera.id),
                                static_cast<std::uint64_t>(frame));
  std::normal_distribution<double> noise(0.0, options.noise_sigma_mm > 0.0 ? options.noise_sigma_mm : 1.0);
  for (int j = 0; j < k.height; ++j) {
    for (int i = 0; i < k.width; ++i) {
      Rgb color{0, 0, 0};
      const auto t = CastPixelRay(scene, camera, frame, Eigen::Vector2d(i, j), options.ground_plane, &color);
      if (!t) continue;
      double depth = *t;
      if (options.noise_sigma_mm > 0.0) depth += noise(rng);
      depth = std::round(depth);
      if (depth > 65535.0) continue;
      const std::size_t idx = static_cast<std::size_t>(j) * k.width + i;
      out.depth[idx] = static_cast<std::uint16_t>(std::max(depth, 1.0));
      if (options.color) out.rgb[idx] = color;
    }
  }
  return out;
}

std::vector<MarkerObservation> SynthMarkerObservations(const Scene& scene, double noise_px,
                                                       std::uint64_t seed) {
  std::vector<MarkerObservation> out;
  std::mt19937_64 rng = MakeRng(seed, 0x6d61726bULL, 0);
  std::normal_distribution<double> noise(0.0, noise_px > 0.0 ? noise_px : 1.0);
  for (const auto& camera : scene.spec.cameras) {
    const Eigen::Vector3d center = camera.pose.Center();
    for (const auto& marker : scene.spec.markers) {
      const MarkerCorners corners = marker.Corners();
      if (center.z() <= 0.0) continue;  // facing: normal is +z
      std::array<Eigen::Vector2d, 4> pixels;
      bool visible = true;
      for (int c = 0; c < 4 && visible; ++c) {
        const auto p = TryProjectPoint(camera, corners[c]);
        visible = p && camera.intrinsics.Contains(*p);
        if (visible) pixels[c] = *p;
      }
      if (!visible) continue;
      for (int c = 0; c < 4; ++c) {
        Eigen::Vector2d p = pixels[c];
        if (noise_px > 0.0) {
          p.x() += noise(rng);
          p.y() += noise(rng);
        }
        out.push_back({camera.id, marker.id, c, p});
      }
    }
  }
  return out;
}

CalibrationGraph MakeCalibrationGraph(const Scene& scene, std::span<const MarkerObservation> observations) {
  CalibrationGraph graph;
  for (const auto& c : scene.spec.cameras) graph.cameras[c.id] = c.intrinsics;
  for (const auto& m : scene.spec.markers) graph.marker_side_mm[m.id] = m.side_mm;
  for (const auto& o : observations) {
    // Noise can push a corner just outside the image; such detections are lost.
    const CameraIntrinsics& k = graph.cameras.at(o.camera_id);
    if (k.Contains(o.pixel)) graph.observations.push_back(o);
  }
  return graph;
}

Rig CornerRig(double half_side_mm, double height_mm, const Eigen::Vector3d& target,
              const CameraIntrinsics& intrinsics) {
  const double s = half_side_mm;
  const Eigen::Vector3d centers[4] = {{s, s, height_mm}, {-s, s, height_mm}, {-s, -s, height_mm},
                                      {s, -s, height_mm}};
  Rig rig;
  for (int c = 0; c < 4; ++c) {
    rig.push_back({c + 1, intrinsics, Pose::LookAt(centers[c], target)});
  }
  return rig;
}

CameraIntrinsics TrackingIntrinsics() { return {200.0, 200.0, 159.5, 119.5, 320, 240}; }

CameraIntrinsics CalibrationIntrinsics() { return {504.0, 504.0, 319.5, 287.5, 640, 576}; }

Rgb ActorColor(int index) {
  static const Rgb kPalette[] = {{220, 30, 30},  {30, 200, 40},  {40, 60, 220},  {230, 220, 30},
                                 {30, 210, 220}, {210, 40, 210}, {240, 140, 20}, {20, 20, 20}};
  return kPalette[static_cast<std::size_t>(index) % std::size(kPalette)];
}

SceneSpec DeskSceneSpec(int num_actors, double duration_s, std::uint64_t seed) {
  SceneSpec spec;
  spec.duration_s = duration_s;
  spec.seed = seed;
  spec.bounds = {-3000.0, 3000.0, -3000.0, 3000.0};
  spec.cameras = CornerRig(3000.0, 2800.0, Eigen::Vector3d(0.0, 0.0, 600.0), TrackingIntrinsics());
  const double s = 1700.0;
  const std::vector<Eigen::Vector2d> loop = {{s, s}, {-s, s}, {-s, -s}, {s, -s}};
  const double heights[] = {1700.0, 1600.0, 1800.0, 1650.0, 1750.0};
  for (int k = 0; k < num_actors; ++k) {
    ActorSpec a;
    a.height_mm = heights[k % 5];
    a.color = ActorColor(k);
    if (k < 4) {
      for (int w = 0; w < 4; ++w) a.waypoints.push_back(loop[(w + k) % 4]);
      a.speed_mm_s = 900.0;
    } else {
      a.waypoints = {{-500.0, 0.0}, {500.0, 0.0}};
      a.speed_mm_s = 400.0;
    }
    spec.actors.push_back(a);
  }
  return spec;
}

SceneSpec CalibrationSceneSpec(std::uint64_t seed) {
  SceneSpec spec;
  spec.duration_s = 0.0;
  spec.seed = seed;
  spec.cameras = CornerRig(2500.0, 2600.0, Eigen::Vector3d(0.0, 0.0, 0.0), CalibrationIntrinsics());
  const double xs[] = {-600.0, 0.0, 600.0};
  int id = 0;
  for (double y : {-400.0, 400.0}) {
    for (double x : xs) {
      spec.markers.push_back({id, 300.0, x, y, 0.35 * id});
      ++id;
    }
  }
  return spec;
}

}  // namespace autolabel
