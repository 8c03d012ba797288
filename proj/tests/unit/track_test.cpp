#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "autolabel/metrics.hpp"
#include "autolabel/simulate.hpp"
#include "autolabel/track.hpp"
#include "test_support.hpp"

namespace autolabel {
namespace {

Detection At(double x, double y, double score = 0.9) {
  Detection d;
  d.world_xy = {x, y};
  d.score = score;
  d.height_mm = 1700;
  return d;
}

PointCloud ColoredColumn(const Eigen::Vector2d& xy, const Rgb& color, int points = 200) {
  PointCloud cloud;
  for (int i = 0; i < points; ++i) {
    cloud.points.push_back({xy.x() + (i % 10) * 10 - 45, xy.y() + (i / 10 % 10) * 10 - 45, 300.0 + i});
    cloud.colors.push_back(color);
  }
  return cloud;
}

Histogram Single(int bin) {
  Histogram h{};
  h[bin] = 1.0;
  return h;
}

TEST(Histogram, PureRedSingleBin) {
  const auto h = AppearanceHistogram(ColoredColumn({0, 0}, Rgb{255, 0, 0}), TopDownBox{{0, 0}});
  ASSERT_TRUE(h.has_value());
  EXPECT_DOUBLE_EQ((*h)[HistogramBin({255, 0, 0})], 1.0);
  EXPECT_EQ(HistogramBin({255, 0, 0}), 48);
  EXPECT_DOUBLE_EQ(std::accumulate(h->begin(), h->end(), 0.0), 1.0);
}

TEST(Histogram, UniformColorsWithinThreeSigma) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> c(0, 255);
  std::uniform_real_distribution<double> xy(-150, 150), z(300, 1500);
  PointCloud cloud;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    cloud.points.push_back({xy(rng), xy(rng), z(rng)});
    cloud.colors.push_back({static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng)),
                            static_cast<std::uint8_t>(c(rng))});
  }
  const auto h = AppearanceHistogram(cloud, TopDownBox{{0, 0}});
  ASSERT_TRUE(h.has_value());
  const double p = 1.0 / 64.0;
  const double sigma = std::sqrt(p * (1 - p) / n);
  for (double bin : *h) EXPECT_NEAR(bin, p, 3 * sigma + 1e-12);
}

TEST(Histogram, EmptyColumnAndNoColor) {
  const auto cloud = ColoredColumn({0, 0}, Rgb{0, 0, 255});
  EXPECT_FALSE(AppearanceHistogram(cloud, TopDownBox{{5000, 0}}).has_value());
  TopDownBox high{{0, 0}};
  high.z_min_mm = 5000;
  EXPECT_FALSE(AppearanceHistogram(cloud, high).has_value());
  PointCloud plain;
  plain.points = cloud.points;
  EXPECT_ERROR_CODE(AppearanceHistogram(plain, TopDownBox{}), ErrorCode::kNoColor);
}

TEST(Histogram, BhattacharyyaBounds) {
  const auto cloud = ColoredColumn({0, 0}, Rgb{10, 200, 30});
  const auto h = *AppearanceHistogram(cloud, TopDownBox{{0, 0}});
  EXPECT_NEAR(BhattacharyyaDistance(h, h), 0.0, 1e-7);
  EXPECT_NEAR(BhattacharyyaDistance(Single(0), Single(5)), 1.0, 1e-12);
}

TEST(Cost, ZeroAtSamePlaceAndLook) {
  Tracklet t;
  t.id = 1;
  TrackState s;
  s.world_xy = {100, 200};
  s.histogram = Single(7);
  t.states.push_back(s);
  const std::vector<const Tracklet*> tracks{&t};
  const std::vector<Detection> dets{At(100, 200), At(2100, 200)};
  const std::vector<std::optional<Histogram>> hists{Single(7), Single(7)};
  const auto m = BuildCostMatrix(tracks, dets, hists, CostWeights{});
  EXPECT_DOUBLE_EQ(m.cost(0, 0), 0.0);
  EXPECT_TRUE(m.feasible(0, 0));
  EXPECT_FALSE(m.feasible(0, 1));
}

TEST(Cost, MatchesIndependentComputationOnSimulatedColumns) {
  const SceneSpec spec = DeskSceneSpec(3, 1.0, 0);
  const Scene scene = GenerateScene(spec);
  std::vector<DepthFrame> frames;
  for (const auto& cam : spec.cameras) frames.push_back(RenderDepthFrame(scene, cam, 0));
  const PointCloud cloud = ReconstructPointCloud(frames, spec.cameras);

  std::vector<Tracklet> tracks(3);
  std::vector<Detection> dets;
  std::vector<std::optional<Histogram>> hists;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector2d xy = scene.poses[0][i].xy;
    tracks[i].id = i + 1;
    TrackState s;
    s.world_xy = xy + Eigen::Vector2d(30.0 * i, -50.0);
    s.histogram = AppearanceHistogram(cloud, TopDownBox{s.world_xy});
    tracks[i].states.push_back(s);
    dets.push_back(At(xy.x(), xy.y()));
    hists.push_back(AppearanceHistogram(cloud, TopDownBox{xy}));
  }
  std::vector<const Tracklet*> view{&tracks[0], &tracks[1], &tracks[2]};
  const auto m = BuildCostMatrix(view, dets, hists, CostWeights{});
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      const double dx = tracks[r].states[0].world_xy.x() - dets[c].world_xy.x();
      const double dy = tracks[r].states[0].world_xy.y() - dets[c].world_xy.y();
      const double dist = std::sqrt(dx * dx + dy * dy);
      const auto& p = *tracks[r].states[0].histogram;
      const auto& q = *hists[c];
      double bc = 0.0;
      for (int b = 0; b < 64; ++b) bc += std::sqrt(p[b] * q[b]);
      const double expected = 0.7 * std::min(dist / 1000.0, 1.0) + 0.3 * std::sqrt(std::max(0.0, 1.0 - bc));
      EXPECT_NEAR(m.cost(r, c), expected, 1e-12);
      EXPECT_EQ(m.feasible(r, c), dist <= 1000.0);
    }
}

TEST(Cost, RejectsBadWeights) {
  const std::vector<const Tracklet*> none;
  CostWeights w;
  w.spatial = 0.8;
  EXPECT_ERROR_CODE(BuildCostMatrix(none, {}, {}, w), ErrorCode::kConfig);
}

TEST(Tracker, InitializesCandidateAboveThreshold) {
  const std::vector<Detection> strong{At(0, 0, 0.9)};
  const auto set = TrackerStep(TrackSet{}, 0, strong, nullptr);
  ASSERT_EQ(set.tracklets.size(), 1u);
  EXPECT_EQ(set.tracklets.begin()->second.status, TrackStatus::kCandidate);
  const std::vector<Detection> weak{At(0, 0, 0.3)};
  EXPECT_TRUE(TrackerStep(TrackSet{}, 0, weak, nullptr).tracklets.empty());
}

TEST(Tracker, LifecycleConfirmAndTerminate) {
  TrackSet set;
  int frame = 0;
  for (; frame < 3; ++frame) set = TrackerStep(set, frame, std::vector<Detection>{At(10.0 * frame, 0)}, nullptr);
  ASSERT_EQ(set.tracklets.size(), 1u);
  const int id = set.tracklets.begin()->first;
  EXPECT_EQ(set.tracklets.at(id).status, TrackStatus::kConfirmed);
  for (int miss = 1; miss <= 15; ++miss, ++frame) {
    set = TrackerStep(set, frame, {}, nullptr);
    EXPECT_EQ(set.tracklets.at(id).misses, miss);
    EXPECT_EQ(set.tracklets.at(id).status, miss < 15 ? TrackStatus::kConfirmed : TrackStatus::kTerminated);
  }
  // A terminated tracklet never revives; a new id is issued instead.
  set = TrackerStep(set, frame, std::vector<Detection>{At(20, 0)}, nullptr);
  EXPECT_EQ(set.tracklets.at(id).status, TrackStatus::kTerminated);
  EXPECT_EQ(set.tracklets.at(id).states.size(), 3u);
  EXPECT_EQ(set.tracklets.size(), 2u);
  EXPECT_GT(set.tracklets.rbegin()->first, id);
  set.Validate();
}

TEST(Tracker, CandidateDroppedOnMissAndIdsNotReused) {
  TrackSet set = TrackerStep(TrackSet{}, 0, std::vector<Detection>{At(0, 0)}, nullptr);
  set = TrackerStep(set, 1, {}, nullptr);
  EXPECT_TRUE(set.tracklets.empty());
  set = TrackerStep(set, 2, std::vector<Detection>{At(0, 0)}, nullptr);
  EXPECT_EQ(set.tracklets.begin()->first, 2);
}

TEST(Tracker, FrameOrderEnforced) {
  TrackSet set = TrackerStep(TrackSet{}, 4, {}, nullptr);
  EXPECT_ERROR_CODE(TrackerStep(set, 6, {}, nullptr), ErrorCode::kFrameOrderViolation);
  EXPECT_ERROR_CODE(TrackerStep(set, 4, {}, nullptr), ErrorCode::kFrameOrderViolation);
}

std::vector<std::vector<Detection>> RandomStream(std::uint64_t seed, int frames) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 40.0);
  std::bernoulli_distribution drop(0.1), clutter(0.05);
  std::uniform_real_distribution<double> anywhere(-3000, 3000);
  std::vector<std::vector<Detection>> out(frames);
  for (int f = 0; f < frames; ++f) {
    for (int k = 0; k < 4; ++k) {
      if (drop(rng)) continue;
      const double phase = 0.02 * f + k * 1.57;
      out[f].push_back(At(2000 * std::cos(phase) + jitter(rng), 2000 * std::sin(phase) + jitter(rng)));
    }
    if (clutter(rng)) out[f].push_back(At(anywhere(rng), anywhere(rng), 0.6));
  }
  return out;
}

TEST(TrackerProperty, DeterministicAndWellFormed) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto stream = RandomStream(seed, 200);
    TrackSet a, b;
    for (int f = 0; f < 200; ++f) {
      a = TrackerStep(a, f, stream[f], nullptr);
      b = TrackerStep(b, f, stream[f], nullptr);
      a.Validate();
      // Terminated tracklets keep their last state; confirmed misses equal the gap.
      for (const auto& [id, t] : a.tracklets) {
        if (t.status == TrackStatus::kConfirmed) EXPECT_EQ(t.misses, f - t.last_frame());
        for (std::size_t i = 1; i < t.states.size(); ++i) {
          EXPECT_LT(t.states[i - 1].frame_index, t.states[i].frame_index);
        }
        EXPECT_LT(id, a.next_id);
      }
    }
    EXPECT_TRUE(a == b);
  }
}

TEST(TrackerProperty, RecoloringIrrelevantWithoutAppearanceWeight) {
  TrackerParams params;
  params.weights.spatial = 1.0;
  params.weights.appearance = 0.0;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> c(0, 255);
  const auto stream = RandomStream(9, 120);
  TrackSet a, b;
  for (int f = 0; f < 120; ++f) {
    PointCloud red, noise;
    for (const auto& d : stream[f]) {
      const auto col = ColoredColumn(d.world_xy, Rgb{255, 0, 0}, 50);
      red.points.insert(red.points.end(), col.points.begin(), col.points.end());
      red.colors.insert(red.colors.end(), col.colors.begin(), col.colors.end());
    }
    noise = red;
    for (auto& color : noise.colors) color = {static_cast<std::uint8_t>(c(rng)), static_cast<std::uint8_t>(c(rng)), 0};
    a = TrackerStep(a, f, stream[f], &red, params);
    b = TrackerStep(b, f, stream[f], &noise, params);
  }
  EXPECT_EQ(a.tracklets.size(), b.tracklets.size());
  for (const auto& [id, t] : a.tracklets) {
    ASSERT_TRUE(b.tracklets.contains(id));
    ASSERT_EQ(t.states.size(), b.tracklets.at(id).states.size());
    for (std::size_t i = 0; i < t.states.size(); ++i) {
      EXPECT_EQ(t.states[i].world_xy, b.tracklets.at(id).states[i].world_xy);
    }
  }
}

TEST(Tracker, AppearanceResolvesAmbiguousAssociation) {
  // Two confirmed tracklets equidistant from two detections; only color can tell them apart.
  TrackSet set;
  set.next_id = 3;
  set.frame_cursor = 0;
  for (int id : {1, 2}) {
    Tracklet t;
    t.id = id;
    t.status = TrackStatus::kConfirmed;
    TrackState s;
    s.world_xy = {id == 1 ? -100.0 : 100.0, 0.0};
    s.histogram = Single(id == 1 ? HistogramBin({255, 0, 0}) : HistogramBin({0, 0, 255}));
    t.states.push_back(s);
    set.tracklets[id] = t;
  }
  PointCloud cloud = ColoredColumn({-100, 0}, Rgb{0, 0, 255});
  const auto red = ColoredColumn({100, 0}, Rgb{255, 0, 0});
  cloud.points.insert(cloud.points.end(), red.points.begin(), red.points.end());
  cloud.colors.insert(cloud.colors.end(), red.colors.begin(), red.colors.end());
  TrackerParams params;
  params.footprint_half_mm = 60;
  const std::vector<Detection> dets{At(-100, 0), At(100, 0)};
  set = TrackerStep(set, 1, dets, &cloud, params);
  EXPECT_DOUBLE_EQ(set.tracklets.at(1).last().world_xy.x(), 100.0);
  EXPECT_DOUBLE_EQ(set.tracklets.at(2).last().world_xy.x(), -100.0);
}

TEST(Tracker, CrossingActorsKeepIdentities) {
  SceneSpec spec = DeskSceneSpec(2, 10.0, 0);
  spec.actors[0].waypoints = {{-2000, 0}, {2000, 0}};
  spec.actors[0].speed_mm_s = 1000;
  spec.actors[0].height_mm = 1700;
  spec.actors[0].color = {220, 30, 30};
  spec.actors[1].waypoints = {{0, -2500}, {0, 2500}};
  spec.actors[1].speed_mm_s = 1000;
  spec.actors[1].height_mm = 1800;
  spec.actors[1].color = {30, 30, 220};
  const Scene scene = GenerateScene(spec);
  ASSERT_EQ(scene.num_frames(), 150);
  const auto grid = DeriveGridSpec(spec.cameras);
  TrackSet set;
  for (int f = 0; f < scene.num_frames(); ++f) {
    std::vector<DepthFrame> frames;
    for (const auto& cam : spec.cameras) frames.push_back(RenderDepthFrame(scene, cam, f));
    const PointCloud cloud = ReconstructPointCloud(frames, spec.cameras);
    const auto map = TopdownHeightmap(Voxelize(cloud, grid));
    set = TrackerStep(set, f, DetectPeople(map, HeightBandClassifier{}), &cloud);
  }
  const auto report = Evaluate(ToFramePoints(scene.ground_truth), ToFramePoints(set));
  EXPECT_EQ(report.ids, 0);
  EXPECT_GE(report.idf1, 95.0);
}

}  // namespace
}  // namespace autolabel
