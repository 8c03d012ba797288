#include "autolabel/detect.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include <Eigen/LU>

#include "autolabel/error.hpp"

namespace autolabel {
namespace {

struct Peak {
  int m = 0;
  int n = 0;
  double value = 0.0;
};

// Plateau-aware local maxima + NMS on an nx x ny scalar field.
template <typename Get>
std::vector<Peak> FindPeaks(int nx, int ny, Get get, double min_value, int window,
                            double nms_radius) {
  if (window < 3 || window % 2 == 0) {
    throw Error(ErrorCode::kConfig, "peak window must be odd and >= 3");
  }
  const int half = window / 2;
  const auto index = [ny](int m, int n) { return static_cast<std::size_t>(m) * ny + n; };

  std::vector<char> candidate(static_cast<std::size_t>(nx) * ny, 0);
  for (int m = 0; m < nx; ++m) {
    for (int n = 0; n < ny; ++n) {
      const double v = get(m, n);
      if (v < min_value) continue;
      bool is_max = true;
      for (int dm = -half; dm <= half && is_max; ++dm) {
        for (int dn = -half; dn <= half; ++dn) {
          const int mm = m + dm;
          const int nn = n + dn;
          if (mm < 0 || nn < 0 || mm >= nx || nn >= ny) continue;
          if (get(mm, nn) > v) {
            is_max = false;
            break;
          }
        }
      }
      candidate[index(m, n)] = is_max ? 1 : 0;
    }
  }

  std::vector<char> visited(candidate.size(), 0);
  std::vector<Peak> peaks;
  for (int m = 0; m < nx; ++m) {
    for (int n = 0; n < ny; ++n) {
      if (!candidate[index(m, n)] || visited[index(m, n)]) continue;
      const double v = get(m, n);
      std::vector<std::pair<int, int>> members;
      std::deque<std::pair<int, int>> queue{{m, n}};
      visited[index(m, n)] = 1;
      bool has_lower = false;
      bool shoulder = false;
      while (!queue.empty()) {
        const auto [cm, cn] = queue.front();
        queue.pop_front();
        members.emplace_back(cm, cn);
        for (int dm = -half; dm <= half; ++dm) {
          for (int dn = -half; dn <= half; ++dn) {
            const int mm = cm + dm;
            const int nn = cn + dn;
            if ((dm == 0 && dn == 0) || mm < 0 || nn < 0 || mm >= nx || nn >= ny) continue;
            const double w = get(mm, nn);
            if (w < v) {
              has_lower = true;
            } else if (w == v) {
              if (!candidate[index(mm, nn)]) {
                shoulder = true;
              } else if (std::abs(dm) <= 1 && std::abs(dn) <= 1 && !visited[index(mm, nn)]) {
                visited[index(mm, nn)] = 1;
                queue.emplace_back(mm, nn);
              }
            }
          }
        }
      }
      if (shoulder || !has_lower) continue;

      double sm = 0.0;
      double sn = 0.0;
      for (const auto& [pm, pn] : members) {
        sm += pm;
        sn += pn;
      }
      sm /= static_cast<double>(members.size());
      sn /= static_cast<double>(members.size());
      // members are in BFS order; pick the nearest with row-major tie-break.
      std::sort(members.begin(), members.end());
      auto best = members.front();
      double best_d = std::numeric_limits<double>::infinity();
      for (const auto& [pm, pn] : members) {
        const double d = (pm - sm) * (pm - sm) + (pn - sn) * (pn - sn);
        if (d < best_d - 1e-12) {
          best_d = d;
          best = {pm, pn};
        }
      }
      peaks.push_back({best.first, best.second, v});
    }
  }

  std::sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) {
    if (a.value != b.value) return a.value > b.value;
    if (a.m != b.m) return a.m < b.m;
    return a.n < b.n;
  });
  std::vector<Peak> kept;
  const double r2 = nms_radius * nms_radius;
  for (const auto& p : peaks) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const Peak& k) {
      const double dm = p.m - k.m;
      const double dn = p.n - k.n;
      return dm * dm + dn * dn <= r2;
    });
    if (!suppressed) kept.push_back(p);
  }
  return kept;
}

std::vector<std::uint16_t> CropAround(const TopDownMap& map, int m, int n) {
  std::vector<std::uint16_t> crop(kCropSide * kCropSide, 0);
  const int half = kCropSide / 2;
  for (int dm = 0; dm < kCropSide; ++dm) {
    for (int dn = 0; dn < kCropSide; ++dn) {
      const int mm = m - half + dm;
      const int nn = n - half + dn;
      if (map.InBounds(mm, nn)) crop[dm * kCropSide + dn] = map.at(mm, nn);
    }
  }
  return crop;
}

}  // namespace

std::vector<Proposal> ExtractProposals(const TopDownMap& map, const ProposalParams& params) {
  const auto peaks = FindPeaks(
      map.nx(), map.ny(), [&map](int m, int n) { return static_cast<double>(map.at(m, n)); },
      std::max<double>(params.min_height_cells, 1.0), params.window, params.nms_radius_cells);
  std::vector<Proposal> proposals;
  proposals.reserve(peaks.size());
  for (const auto& p : peaks) {
    proposals.push_back({p.m, p.n, map.at(p.m, p.n), CropAround(map, p.m, p.n), map.cell_mm()});
  }
  return proposals;
}

double HeightBandClassifier::Score(const Proposal& proposal) const {
  const double height = proposal.peak_value * proposal.cell_mm;
  if (height < params_.min_height_mm || height > params_.max_height_mm) return 0.0;
  const auto nonzero = std::count_if(proposal.crop.begin(), proposal.crop.end(),
                                     [](std::uint16_t v) { return v != 0; });
  return nonzero >= params_.min_nonzero_cells ? 1.0 : 0.0;
}

double ClassifyCrop(const Proposal& proposal, const CropClassifier& classifier) {
  if (proposal.crop.size() != static_cast<std::size_t>(kCropSide * kCropSide)) {
    throw Error(ErrorCode::kBadCropShape, "crop has " + std::to_string(proposal.crop.size()) +
                                              " cells, expected " +
                                              std::to_string(kCropSide * kCropSide));
  }
  return std::clamp(classifier.Score(proposal), 0.0, 1.0);
}

std::vector<Detection> DetectPeople(const TopDownMap& map, const CropClassifier& classifier,
                                    const DetectorParams& params) {
  std::vector<Detection> detections;
  for (const auto& proposal : ExtractProposals(map, params.proposals)) {
    const double score = ClassifyCrop(proposal, classifier);
    if (score < params.keep_threshold) continue;
    Detection d;
    d.m = proposal.m;
    d.n = proposal.n;
    d.world_xy = map.grid.CellCenter(proposal.m, proposal.n);
    d.score = score;
    d.peak_value = proposal.peak_value;
    d.height_mm = proposal.peak_value * map.cell_mm();
    detections.push_back(d);
  }
  return detections;
}

Heatmap WarpToGround(const ViewHeatmap& view, const GroundGrid& grid, bool bilinear) {
  const Heatmap& src = view.heatmap;
  if (src.cols <= 0 || src.rows <= 0 ||
      src.values.size() != static_cast<std::size_t>(src.cols) * src.rows) {
    throw Error(ErrorCode::kDimensionMismatch, "view heatmap buffer does not match its size");
  }
  const Eigen::Matrix3d ground_to_image = view.image_to_ground.inverse();
  Heatmap out(Heatmap::kGround, grid.nx, grid.ny);
  for (int m = 0; m < grid.nx; ++m) {
    for (int n = 0; n < grid.ny; ++n) {
      const Eigen::Vector3d p = ground_to_image * Eigen::Vector3d(m + 0.5, n + 0.5, 1.0);
      if (!(p.z() > 0.0)) continue;  // cell behind the camera
      const double u = p.x() / p.z();
      const double v = p.y() / p.z();
      float value = 0.0f;
      if (!bilinear) {
        const long col = std::lround(u);
        const long row = std::lround(v);
        if (col < 0 || row < 0 || col >= src.cols || row >= src.rows) continue;
        value = src.at(static_cast<int>(col), static_cast<int>(row));
      } else {
        const double fu = std::floor(u);
        const double fv = std::floor(v);
        if (fu < 0.0 || fv < 0.0 || fu + 1 >= src.cols || fv + 1 >= src.rows) continue;
        const int c = static_cast<int>(fu);
        const int r = static_cast<int>(fv);
        const double a = u - fu;
        const double b = v - fv;
        value = static_cast<float>((1 - a) * (1 - b) * src.at(c, r) + a * (1 - b) * src.at(c + 1, r) +
                                   (1 - a) * b * src.at(c, r + 1) + a * b * src.at(c + 1, r + 1));
      }
      out.at(m, n) = value;
    }
  }
  return out;
}

Heatmap GaussianBlur(const Heatmap& input, double sigma) {
  if (!(sigma > 0.0)) return input;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= sum;

  const auto clamp_col = [&](int c) { return std::clamp(c, 0, input.cols - 1); };
  const auto clamp_row = [&](int r) { return std::clamp(r, 0, input.rows - 1); };
  Heatmap tmp = input;
  for (int r = 0; r < input.rows; ++r) {
    for (int c = 0; c < input.cols; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * input.at(clamp_col(c + i), r);
      tmp.at(c, r) = static_cast<float>(acc);
    }
  }
  Heatmap out = input;
  for (int r = 0; r < input.rows; ++r) {
    for (int c = 0; c < input.cols; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.at(c, clamp_row(r + i));
      out.at(c, r) = static_cast<float>(acc);
    }
  }
  return out;
}

GroundFusionResult FuseGroundHeatmaps(std::span<const ViewHeatmap> views, const GroundGrid& grid,
                                      const GroundFusionParams& params) {
  if (grid.nx <= 0 || grid.ny <= 0) {
    throw Error(ErrorCode::kDimensionMismatch, "ground grid must have positive dimensions");
  }
  Heatmap fused(Heatmap::kGround, grid.nx, grid.ny);
  for (const auto& view : views) {
    const Heatmap warped = WarpToGround(view, grid, params.bilinear);
    for (std::size_t i = 0; i < fused.values.size(); ++i) {
      fused.values[i] = std::max(fused.values[i], warped.values[i]);
    }
  }

  GroundFusionResult result;
  result.ground = GaussianBlur(fused, params.blur_sigma_cells);
  const Heatmap& g = result.ground;
  const auto peaks = FindPeaks(
      grid.nx, grid.ny, [&g](int m, int n) { return static_cast<double>(g.at(m, n)); },
      params.score_threshold, params.window, params.nms_radius_cells);
  for (const auto& p : peaks) {
    Detection d;
    d.m = p.m;
    d.n = p.n;
    d.world_xy = grid.CellCenter(p.m, p.n);
    d.score = std::min(1.0, p.value);
    result.detections.push_back(d);
  }
  return result;
}

}  // namespace autolabel
