#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "autolabel/assignment.hpp"
#include "autolabel/metrics.hpp"
#include "test_support.hpp"

namespace autolabel {
namespace {

FramePoints Lines(int tracks, int frames, double spacing = 3000.0) {
  FramePoints out;
  for (int f = 0; f < frames; ++f)
    for (int k = 0; k < tracks; ++k) out[f].push_back({k + 1, {spacing * k, 100.0 * f}});
  return out;
}

void ExpectMotaIdentity(const MotReport& r) {
  EXPECT_NEAR(r.mota, 100.0 * (1.0 - double(r.fp + r.fn + r.ids) / r.gt_total), 1e-9);
}

TEST(ClearMot, PerfectPrediction) {
  const auto gt = Lines(3, 20);
  const auto r = Evaluate(gt, gt);
  EXPECT_DOUBLE_EQ(r.mota, 100.0);
  EXPECT_DOUBLE_EQ(r.idf1, 100.0);
  EXPECT_EQ(r.fp, 0);
  EXPECT_EQ(r.fn, 0);
  EXPECT_EQ(r.ids, 0);
  EXPECT_EQ(r.gt_total, 60);
  EXPECT_EQ(r.matches, 60);
}

TEST(ClearMot, SwapCountsOnePerTrack) {
  const auto gt = Lines(2, 10, 1500.0);
  auto pred = gt;
  for (int f = 6; f < 10; ++f) {
    pred[f][0].xy = gt.at(f)[1].xy;
    pred[f][1].xy = gt.at(f)[0].xy;
  }
  const auto r = ClearMotEvaluate(gt, pred);
  EXPECT_EQ(r.ids, 2);
  EXPECT_EQ(r.fp, 0);
  EXPECT_EQ(r.fn, 0);
  ExpectMotaIdentity(r);
}

TEST(ClearMot, TableFourStyleReport) {
  // 4 missed GT points out of 4000 -> MOTA 99.9.
  const auto gt = Lines(4, 1000);
  auto pred = gt;
  for (int f : {10, 200, 201, 640}) pred[f].erase(pred[f].begin() + 1);
  const auto r = Evaluate(gt, pred);
  EXPECT_EQ(r.fp, 0);
  EXPECT_EQ(r.fn, 4);
  EXPECT_EQ(r.ids, 0);
  EXPECT_NEAR(r.mota, 99.9, 1e-9);
  EXPECT_NEAR(r.idf1, 99.95, 0.01);
}

TEST(ClearMot, ThresholdAndFalsePositives) {
  FramePoints gt{{0, {{1, {0, 0}}}}};
  FramePoints pred{{0, {{7, {1000.5, 0}}}}};
  auto r = ClearMotEvaluate(gt, pred);
  EXPECT_EQ(r.fp, 1);
  EXPECT_EQ(r.fn, 1);
  pred[0][0].xy = {1000.0, 0.0};
  r = ClearMotEvaluate(gt, pred);
  EXPECT_EQ(r.matches, 1);
  r = ClearMotEvaluate(gt, pred, 500.0);
  EXPECT_EQ(r.matches, 0);
}

TEST(ClearMot, PersistenceKeepsCorrespondenceOnJitter) {
  // GT 1 keeps pred 10 while in range even though pred 20 would be closer.
  FramePoints gt, pred;
  gt[0] = {{1, {0, 0}}};
  pred[0] = {{10, {100, 0}}};
  gt[1] = {{1, {0, 0}}};
  pred[1] = {{10, {600, 0}}, {20, {10, 0}}};
  const auto r = ClearMotEvaluate(gt, pred);
  EXPECT_EQ(r.ids, 0);
  EXPECT_EQ(r.fp, 1);
}

TEST(ClearMot, EmptyGroundTruth) {
  EXPECT_ERROR_CODE(ClearMotEvaluate({}, Lines(1, 3)), ErrorCode::kEmptyGroundTruth);
  EXPECT_ERROR_CODE(Idf1Evaluate({}, Lines(1, 3)), ErrorCode::kEmptyGroundTruth);
  FramePoints empty_frames{{0, {}}, {1, {}}};
  EXPECT_ERROR_CODE(Evaluate(empty_frames, Lines(1, 3)), ErrorCode::kEmptyGroundTruth);
}

TEST(Idf1, HalfCoverage) {
  const auto gt = Lines(1, 10);
  FramePoints pred;
  for (int f = 0; f < 5; ++f) pred[f] = gt.at(f);
  const auto s = Idf1Evaluate(gt, pred);
  EXPECT_EQ(s.idtp, 5);
  EXPECT_NEAR(s.idf1, 200.0 * 5 / 15, 1e-9);
  EXPECT_NEAR(s.idf1, 66.7, 0.05);
  EXPECT_DOUBLE_EQ(s.idp, 100.0);
  EXPECT_DOUBLE_EQ(s.idr, 50.0);
}

TEST(Idf1, PermutedIdsUnchanged) {
  const auto gt = Lines(3, 15);
  auto pred = gt;
  for (auto& [f, objs] : pred)
    for (auto& o : objs) o.id = 100 - o.id;
  EXPECT_DOUBLE_EQ(Idf1Evaluate(gt, pred).idf1, 100.0);
}

FramePoints RandomScene(std::mt19937_64& rng, int tracks, int frames, int id_base) {
  std::uniform_real_distribution<double> start(-4000, 4000), step(-150, 150);
  std::bernoulli_distribution present(0.9);
  FramePoints out;
  for (int k = 0; k < tracks; ++k) {
    Eigen::Vector2d p(start(rng), start(rng));
    for (int f = 0; f < frames; ++f) {
      p += Eigen::Vector2d(step(rng), step(rng));
      if (present(rng)) out[f].push_back({id_base + k, p});
    }
  }
  return out;
}

FramePoints Jitter(const FramePoints& in, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  std::bernoulli_distribution drop(0.05);
  FramePoints out;
  for (const auto& [f, objs] : in)
    for (const auto& o : objs)
      if (!drop(rng)) out[f].push_back({o.id * 7 + 3, o.xy + Eigen::Vector2d(n(rng), n(rng))});
  return out;
}

FramePoints Relabel(const FramePoints& in, int offset) {
  FramePoints out = in;
  for (auto& [f, objs] : out)
    for (auto& o : objs) o.id = 1000 + offset - o.id;
  return out;
}

TEST(MetricsProperty, IdentitiesAndRelabelingInvariance) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto gt = RandomScene(rng, 5, 60, 1);
    const auto pred = Jitter(gt, rng, 300.0);
    const auto r = Evaluate(gt, pred);
    ExpectMotaIdentity(r);
    long gt_count = 0, pred_count = 0;
    for (const auto& [f, o] : gt) gt_count += static_cast<long>(o.size());
    for (const auto& [f, o] : pred) pred_count += static_cast<long>(o.size());
    EXPECT_EQ(r.gt_total, gt_count);
    EXPECT_EQ(r.pred_total, pred_count);
    EXPECT_EQ(r.fp + r.matches, pred_count);
    EXPECT_EQ(r.fn + r.matches, gt_count);
    EXPECT_GE(r.idf1, 0.0);
    EXPECT_LE(r.idf1, 100.0);
    EXPECT_GE(r.ids, 0);

    const auto relabeled = Evaluate(Relabel(gt, 17), Relabel(pred, 3));
    EXPECT_EQ(relabeled.fp, r.fp);
    EXPECT_EQ(relabeled.fn, r.fn);
    EXPECT_EQ(relabeled.ids, r.ids);
    EXPECT_NEAR(relabeled.idf1, r.idf1, 1e-9);
    EXPECT_NEAR(relabeled.mota, r.mota, 1e-9);
  }
}

TEST(MetricsProperty, PerFrameMatchCountMatchesBruteForce) {
  // Without history the per-frame match count is the maximum in-radius matching.
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> count(0, 6);
  std::uniform_real_distribution<double> xy(0, 3000);
  for (int trial = 0; trial < 300; ++trial) {
    FramePoints gt, pred;
    const int g = std::max(1, count(rng)), p = count(rng);
    for (int i = 0; i < g; ++i) gt[0].push_back({i, {xy(rng), xy(rng)}});
    for (int i = 0; i < p; ++i) pred[0].push_back({i, {xy(rng), xy(rng)}});
    const auto r = ClearMotEvaluate(gt, pred);
    // Brute force: maximum cardinality over all injections.
    int best = 0;
    std::vector<int> used(p, 0);
    std::function<void(int, int)> rec = [&](int row, int card) {
      if (row == g) {
        best = std::max(best, card);
        return;
      }
      rec(row + 1, card);
      for (int c = 0; c < p; ++c) {
        if (used[c] || (gt[0][row].xy - pred[0][c].xy).norm() > 1000.0) continue;
        used[c] = 1;
        rec(row + 1, card + 1);
        used[c] = 0;
      }
    };
    rec(0, 0);
    ASSERT_EQ(r.matches, best) << "trial " << trial;
  }
}

TEST(Metrics, ToFramePointsSkipsCandidates) {
  TrackSet set;
  for (int id : {1, 2}) {
    Tracklet t;
    t.id = id;
    t.status = id == 1 ? TrackStatus::kConfirmed : TrackStatus::kCandidate;
    TrackState s;
    s.frame_index = 4;
    s.world_xy = {1.0 * id, 0};
    t.states.push_back(s);
    set.tracklets[id] = t;
  }
  const auto pts = ToFramePoints(set);
  ASSERT_EQ(pts.size(), 1u);
  ASSERT_EQ(pts.at(4).size(), 1u);
  EXPECT_EQ(pts.at(4)[0].id, 1);
}

}  // namespace
}  // namespace autolabel
