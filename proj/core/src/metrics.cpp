#include "autolabel/metrics.hpp"

#include <algorithm>
#include <set>

#include "autolabel/assignment.hpp"
#include "autolabel/error.hpp"

namespace autolabel {
namespace {

long CountObjects(const FramePoints& points) {
  long total = 0;
  for (const auto& [_, objects] : points) total += static_cast<long>(objects.size());
  return total;
}

const std::vector<FramePoint>& ObjectsAt(const FramePoints& points, int frame) {
  static const std::vector<FramePoint> kNone;
  auto it = points.find(frame);
  return it == points.end() ? kNone : it->second;
}

std::set<int> AllFrames(const FramePoints& a, const FramePoints& b) {
  std::set<int> frames;
  for (const auto& [f, _] : a) frames.insert(f);
  for (const auto& [f, _] : b) frames.insert(f);
  return frames;
}

}  // namespace

FramePoints ToFramePoints(const TrackSet& tracks) {
  FramePoints out;
  for (const Tracklet* t : ConfirmedTracklets(tracks)) {
    for (const auto& s : t->states) out[s.frame_index].push_back({t->id, s.world_xy});
  }
  for (auto& [_, objects] : out) {
    std::sort(objects.begin(), objects.end(),
              [](const FramePoint& a, const FramePoint& b) { return a.id < b.id; });
  }
  return out;
}

MotReport ClearMotEvaluate(const FramePoints& gt, const FramePoints& pred, double threshold_mm) {
  MotReport report;
  report.gt_total = CountObjects(gt);
  report.pred_total = CountObjects(pred);
  if (report.gt_total == 0) {
    throw Error(ErrorCode::kEmptyGroundTruth, "ground truth contains no objects");
  }

  std::map<int, int> last_match;  // gt id -> most recently matched pred id
  for (int frame : AllFrames(gt, pred)) {
    const auto& g = ObjectsAt(gt, frame);
    const auto& p = ObjectsAt(pred, frame);
    std::vector<char> g_done(g.size(), 0);
    std::vector<char> p_done(p.size(), 0);
    long matched = 0;

    // Keep correspondences that are still valid.
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto prev = last_match.find(g[i].id);
      if (prev == last_match.end()) continue;
      for (std::size_t j = 0; j < p.size(); ++j) {
        if (p_done[j] || p[j].id != prev->second) continue;
        if ((g[i].xy - p[j].xy).norm() <= threshold_mm) {
          g_done[i] = p_done[j] = 1;
          ++matched;
        }
        break;
      }
    }

    std::vector<int> g_rest;
    std::vector<int> p_rest;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g_done[i]) g_rest.push_back(static_cast<int>(i));
    }
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (!p_done[j]) p_rest.push_back(static_cast<int>(j));
    }
    Eigen::MatrixXd cost(g_rest.size(), p_rest.size());
    FeasibilityMask feasible(g_rest.size(), p_rest.size());
    for (std::size_t a = 0; a < g_rest.size(); ++a) {
      for (std::size_t b = 0; b < p_rest.size(); ++b) {
        const double d = (g[g_rest[a]].xy - p[p_rest[b]].xy).norm();
        cost(a, b) = d;
        feasible(a, b) = d <= threshold_mm;
      }
    }
    for (const auto& [a, b] : HungarianAssign(cost, feasible).pairs) {
      const FramePoint& go = g[g_rest[a]];
      const FramePoint& po = p[p_rest[b]];
      auto prev = last_match.find(go.id);
      if (prev != last_match.end() && prev->second != po.id) ++report.ids;
      last_match[go.id] = po.id;
      ++matched;
    }
    report.matches += matched;
    report.fn += static_cast<long>(g.size()) - matched;
    report.fp += static_cast<long>(p.size()) - matched;
  }
  report.mota = 100.0 * (1.0 - static_cast<double>(report.fp + report.fn + report.ids) /
                                   static_cast<double>(report.gt_total));
  return report;
}

IdScores Idf1Evaluate(const FramePoints& gt, const FramePoints& pred, double threshold_mm) {
  const long gt_total = CountObjects(gt);
  const long pred_total = CountObjects(pred);
  if (gt_total == 0) throw Error(ErrorCode::kEmptyGroundTruth, "ground truth contains no objects");

  std::map<int, int> gt_index;
  std::map<int, int> pred_index;
  for (const auto& [_, objects] : gt) {
    for (const auto& o : objects) gt_index.emplace(o.id, 0);
  }
  for (const auto& [_, objects] : pred) {
    for (const auto& o : objects) pred_index.emplace(o.id, 0);
  }
  int k = 0;
  for (auto& [_, idx] : gt_index) idx = k++;
  k = 0;
  for (auto& [_, idx] : pred_index) idx = k++;

  // overlap(g, p): frames where both exist and lie within the threshold.
  Eigen::MatrixXd overlap = Eigen::MatrixXd::Zero(gt_index.size(), pred_index.size());
  for (const auto& [frame, g_objects] : gt) {
    const auto& p_objects = ObjectsAt(pred, frame);
    for (const auto& go : g_objects) {
      for (const auto& po : p_objects) {
        if ((go.xy - po.xy).norm() <= threshold_mm) {
          overlap(gt_index[go.id], pred_index[po.id]) += 1.0;
        }
      }
    }
  }

  IdScores scores;
  if (overlap.size() > 0) {
    const Assignment best = HungarianAssign(-overlap);
    for (const auto& [r, c] : best.pairs) scores.idtp += static_cast<long>(overlap(r, c));
  }
  scores.idfn = gt_total - scores.idtp;
  scores.idfp = pred_total - scores.idtp;
  scores.idf1 = 100.0 * 2.0 * scores.idtp / static_cast<double>(gt_total + pred_total);
  scores.idr = 100.0 * scores.idtp / static_cast<double>(gt_total);
  scores.idp = pred_total > 0 ? 100.0 * scores.idtp / static_cast<double>(pred_total) : 0.0;
  return scores;
}

MotReport Evaluate(const FramePoints& gt, const FramePoints& pred, double threshold_mm) {
  MotReport report = ClearMotEvaluate(gt, pred, threshold_mm);
  const IdScores id = Idf1Evaluate(gt, pred, threshold_mm);
  report.idf1 = id.idf1;
  report.idp = id.idp;
  report.idr = id.idr;
  report.idtp = id.idtp;
  return report;
}

}  // namespace autolabel
