// Acceptance runner: one PASS/FAIL line per primary criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "autolabel/annotate.hpp"
#include "autolabel/assignment.hpp"
#include "autolabel/calibration.hpp"
#include "autolabel/fusion.hpp"
#include "autolabel/geometry.hpp"
#include "autolabel/metrics.hpp"
#include "autolabel/pipeline.hpp"
#include "autolabel/project.hpp"
#include "autolabel/simulate.hpp"

namespace {

using namespace autolabel;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

// ---- calibration -------------------------------------------------------------

Outcome CalibrationFidelity() {
  const auto start = Clock::now();
  auto solve = [](double noise, std::uint64_t seed, SceneSpec* spec_out) {
    const SceneSpec spec = CalibrationSceneSpec(seed);
    const Scene scene = GenerateScene(spec);
    const CalibrationGraph graph = MakeCalibrationGraph(scene, SynthMarkerObservations(scene, noise, seed));
    const int anchor = graph.marker_side_mm.begin()->first;
    if (spec_out) *spec_out = spec;
    return std::make_pair(SolveExtrinsics(graph, InitializePoses(graph, anchor)), graph);
  };

  SceneSpec spec;
  const auto [clean, clean_graph] = solve(0.0, 0, &spec);
  const auto anchor = std::find_if(spec.markers.begin(), spec.markers.end(),
                                   [&](const MarkerSpec& m) { return m.id == clean.anchor_marker; });
  const Pose marker_to_world(Eigen::Quaterniond(Eigen::AngleAxisd(anchor->yaw_rad, Eigen::Vector3d::UnitZ())),
                             Eigen::Vector3d(anchor->x_mm, anchor->y_mm, 0.0));
  double rot = 0.0, trans = 0.0;
  for (const auto& c : spec.cameras) {
    const Pose expected = c.pose * marker_to_world;
    rot = std::max(rot, RotationDistance(expected, clean.poses.at(c.id)));
    trans = std::max(trans, (expected.translation() - clean.poses.at(c.id).translation()).norm());
  }
  const double clean_rms = ReprojectionRms(clean, clean_graph).rms_px;

  double worst_noisy = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto [noisy, graph] = solve(0.5, seed, nullptr);
    worst_noisy = std::max(worst_noisy, ReprojectionRms(noisy, graph).rms_px);
  }
  const double secs = Seconds(start);
  const bool pass = rot <= 1e-4 && trans <= 0.1 && clean_rms <= 1e-6 && worst_noisy <= 0.6 && secs <= 10.0;
  return {pass, fmt::format("rot {:.2e} rad, trans {:.2e} mm, clean rms {:.2e} px, worst noisy rms {:.3f} px "
                            "over 20 seeds, {:.2f} s",
                            rot, trans, clean_rms, worst_noisy, secs)};
}

// ---- tracking ----------------------------------------------------------------

Outcome DeskScaleMirror() {
  const auto start = Clock::now();
  const Scene scene = GenerateScene(DeskSceneSpec(5, 60.0, 0));
  const SceneFrameSource source(scene);
  const PipelineResult result = RunAutoannotation(source, scene.spec.cameras, PipelineConfig{});
  const double secs = Seconds(start);
  const MotReport r = Evaluate(ToFramePoints(scene.ground_truth), ToFramePoints(result.tracks));
  const bool pass = scene.num_frames() == 900 && r.idf1 == 100.0 && r.mota >= 99.9 && r.ids == 0 &&
                    r.fn * 1000 <= r.gt_total && secs <= 120.0;
  return {pass, fmt::format("{} frames: IDF1 {:.2f}, MOTA {:.2f}, IDs {}, FP {}, FN {} of {}, {:.1f} s",
                            scene.num_frames(), r.idf1, r.mota, r.ids, r.fp, r.fn, r.gt_total, secs)};
}

// Two actors whose paths cross with a closest approach of `gap_mm`.
SceneSpec CrossingSpec(std::uint64_t seed, double gap_mm, double angle_rad) {
  SceneSpec spec = DeskSceneSpec(2, 6.0, seed);
  const double speed = 1000.0;
  const double t_meet = 2.5;
  const Eigen::Vector2d u(1.0, 0.0);
  const Eigen::Vector2d v(std::cos(angle_rad), std::sin(angle_rad));
  const Eigen::Vector2d w = (v - u).normalized();
  const Eigen::Vector2d c = gap_mm * Eigen::Vector2d(-w.y(), w.x());
  spec.actors[0].waypoints = {-speed * t_meet * u, speed * t_meet * u};
  spec.actors[1].waypoints = {Eigen::Vector2d(c - speed * t_meet * v), Eigen::Vector2d(c + speed * t_meet * v)};
  for (auto& a : spec.actors) a.speed_mm_s = speed;
  spec.actors[0].height_mm = 1700;
  spec.actors[1].height_mm = 1800;
  return spec;
}

Outcome OcclusionStress() {
  std::vector<std::string> per_seed;
  bool pass = true;
  double worst_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const double gap = std::uniform_real_distribution<double>(350.0, 500.0)(rng);
    const double angle = std::uniform_real_distribution<double>(M_PI / 3, 2 * M_PI / 3)(rng);
    const Scene scene = GenerateScene(CrossingSpec(seed, gap, angle));
    double closest = 1e18;
    for (const auto& p : scene.poses) closest = std::min(closest, (p[0].xy - p[1].xy).norm());
    worst_gap = std::max(worst_gap, closest);
    RenderOptions noisy;
    noisy.noise_sigma_mm = 10.0;
    const SceneFrameSource source(scene, noisy);
    const PipelineResult result = RunAutoannotation(source, scene.spec.cameras, PipelineConfig{});
    const MotReport r = Evaluate(ToFramePoints(scene.ground_truth), ToFramePoints(result.tracks));
    pass = pass && r.ids <= 1 && closest <= 500.0;
    per_seed.push_back(std::to_string(r.ids));
  }
  return {pass, fmt::format("IDs per seed [{}], closest approach <= {:.0f} mm, sigma 10 mm",
                            fmt::join(per_seed, " "), worst_gap)};
}

// ---- metrics -----------------------------------------------------------------

FramePoints Lines(int tracks, int frames, double spacing) {
  FramePoints out;
  for (int f = 0; f < frames; ++f)
    for (int k = 0; k < tracks; ++k) out[f].push_back({k + 1, {spacing * k, 100.0 * f}});
  return out;
}

Assignment BruteForce(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows()), cols = static_cast<int>(cost.cols());
  const bool transpose = rows > cols;
  const int small = std::min(rows, cols), large = std::max(rows, cols);
  std::vector<int> perm(large);
  std::iota(perm.begin(), perm.end(), 0);
  Assignment best;
  best.total_cost = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (int i = 0; i < small; ++i) total += transpose ? cost(perm[i], i) : cost(i, perm[i]);
    if (total < best.total_cost - 1e-12) best.total_cost = total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Outcome MetricsOracles() {
  std::vector<std::string> failures;
  const auto perfect_gt = Lines(3, 20, 3000.0);
  const MotReport perfect = Evaluate(perfect_gt, perfect_gt);
  if (!(perfect.mota == 100.0 && perfect.fp == 0 && perfect.fn == 0 && perfect.ids == 0)) failures.push_back("perfect");

  const auto swap_gt = Lines(2, 10, 1500.0);
  auto swap_pred = swap_gt;
  for (int f = 6; f < 10; ++f) std::swap(swap_pred[f][0].xy, swap_pred[f][1].xy);
  const MotReport swap = ClearMotEvaluate(swap_gt, swap_pred);
  if (!(swap.ids == 2 && swap.fp == 0 && swap.fn == 0)) failures.push_back("swap");

  const auto half_gt = Lines(1, 10, 0.0);
  FramePoints half_pred;
  for (int f = 0; f < 5; ++f) half_pred[f] = half_gt.at(f);
  const double half = Idf1Evaluate(half_gt, half_pred).idf1;
  if (std::abs(half - 66.7) > 0.05) failures.push_back("half coverage");

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  long checked = 0;
  for (int r = 1; r <= 6; ++r) {
    for (int c = 1; c <= 6; ++c) {
      for (int trial = 0; trial < 100; ++trial) {
        Eigen::MatrixXd cost(r, c);
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < c; ++j) cost(i, j) = trial % 10 == 0 ? std::floor(u(rng) / 25) : u(rng);
        const Assignment got = HungarianAssign(cost);
        const Assignment want = BruteForce(cost);
        ++checked;
        if (static_cast<int>(got.pairs.size()) != std::min(r, c) || std::abs(got.total_cost - want.total_cost) > 1e-9) {
          failures.push_back(fmt::format("hungarian {}x{}", r, c));
        }
      }
    }
  }
  return {failures.empty(),
          fmt::format("perfect MOTA {:.1f}; swap IDs {}; half-coverage IDF1 {:.2f}; {} Hungarian cases vs brute "
                      "force{}",
                      perfect.mota, swap.ids, half, checked,
                      failures.empty() ? "" : "; failed: " + fmt::format("{}", fmt::join(failures, ", ")))};
}

// ---- geometry / fusion ----------------------------------------------------------

Pose RandomPose(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> t(-3000, 3000);
  Eigen::Quaterniond q(std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng),
                       std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng));
  return Pose(q.normalized(), Eigen::Vector3d(t(rng), t(rng), t(rng)));
}

Outcome GeometryFusionProperties() {
  std::mt19937_64 rng(3);
  std::vector<std::string> failures;

  // Round trip.
  double worst_rel = 0.0;
  const CameraIntrinsics k{500, 510, 320, 240, 640, 480};
  for (int i = 0; i < 10000; ++i) {
    const CameraModel cam{0, k, RandomPose(rng)};
    const Eigen::Vector2d px(std::uniform_real_distribution<double>(0, 639)(rng),
                             std::uniform_real_distribution<double>(0, 479)(rng));
    const double depth = std::uniform_real_distribution<double>(100, 8000)(rng);
    const Eigen::Vector3d world = BackprojectPixel(cam, px, depth);
    worst_rel = std::max(worst_rel, (ProjectPoint(cam, world) - px).norm() / px.norm());
  }
  if (worst_rel > 1e-6) failures.push_back("round trip");

  // Heightmap against the column maximum.
  int grids = 0;
  for (int trial = 0; trial < 40; ++trial) {
    std::uniform_int_distribution<int> dim(1, 64);
    VoxelGridSpec spec;
    spec.nx = dim(rng);
    spec.ny = dim(rng);
    spec.nz = dim(rng);
    VoxelGrid grid(spec);
    const double density = std::uniform_real_distribution<double>(0.0, 0.05)(rng);
    std::bernoulli_distribution on(density);
    std::vector<int> top(static_cast<std::size_t>(spec.nx) * spec.ny, 0);
    for (int m = 0; m < spec.nx; ++m)
      for (int n = 0; n < spec.ny; ++n)
        for (int z = 0; z < spec.nz; ++z)
          if (on(rng)) {
            grid.Set(m, n, z);
            top[static_cast<std::size_t>(m) * spec.ny + n] = z + 1;
          }
    const TopDownMap map = TopdownHeightmap(grid);
    for (int m = 0; m < spec.nx; ++m)
      for (int n = 0; n < spec.ny; ++n)
        if (map.at(m, n) != top[static_cast<std::size_t>(m) * spec.ny + n]) {
          failures.push_back("heightmap");
          m = spec.nx;
          break;
        }
    ++grids;
  }

  // Camera order invariance of the fused cloud.
  const Scene desk = GenerateScene(DeskSceneSpec(3, 1.0, 0));
  std::vector<DepthFrame> frames;
  for (const auto& cam : desk.spec.cameras) frames.push_back(RenderDepthFrame(desk, cam, 4));
  auto sorted_points = [](PointCloud cloud) {
    std::vector<std::tuple<double, double, double>> pts;
    for (const auto& p : cloud.points) pts.emplace_back(p.x(), p.y(), p.z());
    std::sort(pts.begin(), pts.end());
    return pts;
  };
  const auto forward = sorted_points(ReconstructPointCloud(frames, desk.spec.cameras));
  std::vector<DepthFrame> rev_frames(frames.rbegin(), frames.rend());
  Rig rev_rig(desk.spec.cameras.rbegin(), desk.spec.cameras.rend());
  if (sorted_points(ReconstructPointCloud(rev_frames, rev_rig)) != forward) failures.push_back("cloud order");
  const auto spec = DeriveGridSpec(desk.spec.cameras);
  if (!(FuseToHeightmap(frames, desk.spec.cameras, spec) == FuseToHeightmap(rev_frames, rev_rig, spec))) {
    failures.push_back("heightmap order");
  }

  // Box against the corner envelope.
  int boxes = 0;
  std::uniform_real_distribution<double> xy(-2000, 2000), h(1200, 2000), cxy(-4000, 4000), cz(2000, 4000);
  while (boxes < 1000) {
    const CameraModel cam{0, k, Pose::LookAt({cxy(rng), cxy(rng), cz(rng)}, {0, 0, 800})};
    const auto cube = PersonCube({xy(rng), xy(rng)}, h(rng));
    double lo_u = 1e18, lo_v = 1e18, hi_u = -1e18, hi_v = -1e18;
    bool all_front = true;
    for (const auto& c : cube) {
      const auto p = TryProjectPoint(cam, c);
      if (!p) {
        all_front = false;
        break;
      }
      lo_u = std::min(lo_u, p->x());
      hi_u = std::max(hi_u, p->x());
      lo_v = std::min(lo_v, p->y());
      hi_v = std::max(hi_v, p->y());
    }
    if (!all_front) continue;
    const double l = std::clamp(lo_u, 0.0, 640.0), r = std::clamp(hi_u, 0.0, 640.0);
    const double t = std::clamp(lo_v, 0.0, 480.0), b = std::clamp(hi_v, 0.0, 480.0);
    const auto box = ProjectPersonBox(cube, cam);
    ++boxes;
    if (!(r > l && b > t)) {
      if (box) failures.push_back("box exists");
      continue;
    }
    if (!box || std::abs(box->left - l) > 1e-9 || std::abs(box->top - t) > 1e-9 ||
        std::abs(box->left + box->width - r) > 1e-9 || std::abs(box->top + box->height - b) > 1e-9) {
      failures.push_back("box envelope");
    }
  }
  return {failures.empty(),
          fmt::format("round trip worst {:.1e} rel; {} heightmap grids; cloud order invariant; {} boxes{}", worst_rel,
                      grids, boxes, failures.empty() ? "" : fmt::format("; failed: {}", fmt::join(failures, ", ")))};
}

// ---- edit closure ------------------------------------------------------------

Outcome EditClosure() {
  const Scene scene = GenerateScene(DeskSceneSpec(5, 20.0, 0));
  const FramePoints gt = ToFramePoints(scene.ground_truth);
  bool pass = true;
  long worst_ids_before = 0, worst_fp_before = 0, worst_ids_after = 0, worst_fp_after = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CorruptionOptions options;
    options.swaps = 2;
    options.false_tracklets = 2;
    const Corruption c = CorruptTrackSet(scene.ground_truth, seed, options);
    const MotReport before = Evaluate(gt, ToFramePoints(c.corrupted));
    const TrackSet fixed = ReplayEditLog(c.corrupted, c.fix);
    const TrackSet again = ReplayEditLog(c.corrupted, c.fix);
    const MotReport after = Evaluate(gt, ToFramePoints(fixed));
    worst_ids_before = std::max(worst_ids_before, before.ids);
    worst_fp_before = std::max(worst_fp_before, before.fp);
    worst_ids_after = std::max(worst_ids_after, after.ids);
    worst_fp_after = std::max(worst_fp_after, after.fp);
    pass = pass && before.ids > 0 && before.fp > 0 && after.ids == 0 && after.fp == 0 && Digest(fixed) == Digest(again);

    // A failing op anywhere in the log leaves the base untouched.
    EditLog broken = c.fix;
    broken.ops.insert(broken.ops.begin() + static_cast<long>(broken.ops.size() / 2), EditOp{DeleteOp{1 << 20}, "x", 0});
    const std::string base_digest = Digest(c.corrupted);
    try {
      ReplayEditLog(c.corrupted, broken);
      pass = false;
    } catch (const ReplayError& e) {
      pass = pass && e.index() == broken.ops.size() / 2 && Digest(c.corrupted) == base_digest;
    }
  }
  return {pass, fmt::format("10 seeds: corrupted IDs <= {} / FP <= {}; after replay IDs <= {} / FP <= {}; replay "
                            "deterministic and atomic",
                            worst_ids_before, worst_fp_before, worst_ids_after, worst_fp_after)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"calibration fidelity", CalibrationFidelity},
      {"desk-scale tracking mirror", DeskScaleMirror},
      {"occlusion stress", OcclusionStress},
      {"metrics oracle suite", MetricsOracles},
      {"geometry/fusion property suite", GeometryFusionProperties},
      {"edit-correction closure", EditClosure},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    fmt::print("{} {}: {}\n", o.pass ? "PASS" : "FAIL", name, o.detail);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
