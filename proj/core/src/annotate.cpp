#include "autolabel/annotate.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <random>
#include <set>

#include <openssl/evp.h>

namespace autolabel {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Tracklet& Find(TrackSet& set, int id) {
  auto it = set.tracklets.find(id);
  if (it == set.tracklets.end()) throw Error(ErrorCode::kUnknownId, "no tracklet with id " + std::to_string(id));
  return it->second;
}

void SortStates(Tracklet& t) {
  std::sort(t.states.begin(), t.states.end(),
            [](const TrackState& a, const TrackState& b) { return a.frame_index < b.frame_index; });
}

void CheckDisjoint(const Tracklet& a, const std::vector<TrackState>& moved) {
  std::set<int> frames;
  for (const auto& s : a.states) frames.insert(s.frame_index);
  for (const auto& s : moved) {
    if (frames.count(s.frame_index)) {
      throw Error(ErrorCode::kFrameConflict, "tracklet " + std::to_string(a.id) + " already has frame " +
                                                 std::to_string(s.frame_index));
    }
  }
}

TrackStatus Combined(TrackStatus into, TrackStatus from) {
  return into == TrackStatus::kCandidate ? from : into;
}

// Moves the states of `src_id` selected by `pred` to `target` (or a fresh id).
template <class Pred>
void MoveStates(TrackSet& set, int src_id, Pred pred, std::optional<int> target) {
  Tracklet& src = Find(set, src_id);
  std::vector<TrackState> moved;
  std::vector<TrackState> kept;
  for (auto& s : src.states) (pred(s.frame_index) ? moved : kept).push_back(std::move(s));
  const TrackStatus status = src.status;

  if (target && set.tracklets.count(*target)) {
    Tracklet& dst = set.tracklets.at(*target);
    CheckDisjoint(dst, moved);
    for (auto& s : moved) dst.states.push_back(std::move(s));
    SortStates(dst);
    dst.status = Combined(dst.status, status);
  } else {
    int id = set.next_id;
    if (target) {
      if (*target <= 0 || *target < set.next_id) {
        throw Error(ErrorCode::kUnknownId, "id " + std::to_string(*target) + " was retired and cannot be reused");
      }
      id = *target;
    }
    set.next_id = id + 1;
    Tracklet t;
    t.id = id;
    t.status = status;
    t.states = std::move(moved);
    set.tracklets.emplace(id, std::move(t));
  }
  Tracklet& again = set.tracklets.at(src_id);
  again.states = std::move(kept);
  if (again.states.empty()) set.tracklets.erase(src_id);
}

std::string HexDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

}  // namespace

const char* EditKind(const EditOp& op) {
  return std::visit(Overloaded{[](const MergeOp&) { return "merge"; },
                               [](const SplitOp&) { return "split"; },
                               [](const DeleteOp&) { return "delete"; },
                               [](const ReassignOp&) { return "reassign"; }},
                    op.action);
}

std::string Sha256Hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::kData, "SHA-256 digest failed");
  }
  static const char* kHex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[md[i] >> 4];
    out += kHex[md[i] & 15];
  }
  return out;
}

std::string Digest(const TrackSet& set) {
  std::string text;
  for (const auto& [id, t] : set.tracklets) {
    text += "T " + std::to_string(id) + "\n";
    for (const auto& s : t.states) {
      text += std::to_string(s.frame_index) + " " + HexDouble(s.world_xy.x()) + " " + HexDouble(s.world_xy.y()) +
              " " + HexDouble(s.height_mm) + " " + HexDouble(s.score) + "\n";
    }
  }
  return Sha256Hex(text);
}

TrackSet ApplyEdit(const TrackSet& set, const EditOp& op) {
  TrackSet out = set;
  std::visit(
      Overloaded{
          [&](const MergeOp& m) {
            Tracklet& from = Find(out, m.from_id);
            Tracklet& into = Find(out, m.into_id);
            if (m.from_id == m.into_id) throw Error(ErrorCode::kInvalidRange, "cannot merge a tracklet into itself");
            CheckDisjoint(into, from.states);
            for (auto& s : from.states) into.states.push_back(std::move(s));
            SortStates(into);
            into.status = Combined(into.status, from.status);
            out.tracklets.erase(m.from_id);
          },
          [&](const SplitOp& s) {
            const Tracklet& t = Find(out, s.id);
            if (!(s.at_frame > t.first_frame() && s.at_frame <= t.last_frame())) {
              throw Error(ErrorCode::kInvalidRange, "split frame " + std::to_string(s.at_frame) +
                                                        " not inside (" + std::to_string(t.first_frame()) + ", " +
                                                        std::to_string(t.last_frame()) + "]");
            }
            if (s.new_id && out.tracklets.count(*s.new_id)) {
              throw Error(ErrorCode::kFrameConflict, "split target id " + std::to_string(*s.new_id) + " exists");
            }
            const int at = s.at_frame;
            MoveStates(out, s.id, [at](int f) { return f >= at; }, s.new_id);
          },
          [&](const DeleteOp& d) {
            Find(out, d.id);
            out.tracklets.erase(d.id);
          },
          [&](const ReassignOp& r) {
            const Tracklet& t = Find(out, r.id);
            if (r.from_frame > r.to_frame) {
              throw Error(ErrorCode::kInvalidRange, "reassign range [" + std::to_string(r.from_frame) + ", " +
                                                        std::to_string(r.to_frame) + "] is empty");
            }
            const bool any = std::any_of(t.states.begin(), t.states.end(), [&](const TrackState& s) {
              return s.frame_index >= r.from_frame && s.frame_index <= r.to_frame;
            });
            if (!any) {
              throw Error(ErrorCode::kInvalidRange, "tracklet " + std::to_string(r.id) + " has no states in [" +
                                                        std::to_string(r.from_frame) + ", " +
                                                        std::to_string(r.to_frame) + "]");
            }
            if (r.new_id && *r.new_id == r.id) {
              throw Error(ErrorCode::kInvalidRange, "reassign target equals source");
            }
            const int lo = r.from_frame;
            const int hi = r.to_frame;
            MoveStates(out, r.id, [lo, hi](int f) { return f >= lo && f <= hi; }, r.new_id);
          }},
      op.action);
  out.Validate();
  return out;
}

TrackSet ReplayEditLog(const TrackSet& base, const EditLog& log) {
  if (!log.base_digest.empty()) {
    const std::string actual = Digest(base);
    if (actual != log.base_digest) {
      throw Error(ErrorCode::kDigestMismatch, "log recorded against " + log.base_digest + ", base is " + actual);
    }
  }
  TrackSet current = base;
  for (std::size_t i = 0; i < log.ops.size(); ++i) {
    try {
      current = ApplyEdit(current, log.ops[i]);
    } catch (const Error& e) {
      throw ReplayError(e.code(), i, e.what());
    }
  }
  return current;
}

Corruption CorruptTrackSet(const TrackSet& clean, std::uint64_t seed, const CorruptionOptions& options) {
  Corruption out;
  TrackSet& set = out.corrupted;
  set = clean;
  std::mt19937_64 rng(seed);

  struct Swap {
    int a;
    int b;
    int frame;
  };
  std::vector<Swap> swaps;
  for (int s = 0; s < options.swaps; ++s) {
    std::vector<int> ids;
    for (const auto& [id, t] : set.tracklets) {
      if (t.states.size() >= 2) ids.push_back(id);
    }
    if (ids.size() < 2) break;
    bool done = false;
    for (int attempt = 0; attempt < 64 && !done; ++attempt) {
      std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 1);
      const int a = ids[pick(rng)];
      const int b = ids[pick(rng)];
      if (a == b) continue;
      Tracklet& ta = set.tracklets.at(a);
      Tracklet& tb = set.tracklets.at(b);
      const int lo = std::max(ta.first_frame(), tb.first_frame());
      const int hi = std::min(ta.last_frame(), tb.last_frame());
      if (hi - lo < 1) continue;
      const int f = std::uniform_int_distribution<int>(lo + 1, hi)(rng);
      std::vector<TrackState> head_a;
      std::vector<TrackState> tail_a;
      std::vector<TrackState> head_b;
      std::vector<TrackState> tail_b;
      for (auto& st : ta.states) (st.frame_index >= f ? tail_a : head_a).push_back(st);
      for (auto& st : tb.states) (st.frame_index >= f ? tail_b : head_b).push_back(st);
      head_a.insert(head_a.end(), tail_b.begin(), tail_b.end());
      head_b.insert(head_b.end(), tail_a.begin(), tail_a.end());
      ta.states = std::move(head_a);
      tb.states = std::move(head_b);
      swaps.push_back({a, b, f});
      done = true;
    }
  }

  int first = 0;
  int last = options.false_length - 1;
  Eigen::Vector2d lo_xy = Eigen::Vector2d::Zero();
  Eigen::Vector2d hi_xy = Eigen::Vector2d::Zero();
  bool any = false;
  for (const auto& [_, t] : set.tracklets) {
    for (const auto& st : t.states) {
      if (!any) {
        first = last = st.frame_index;
        lo_xy = hi_xy = st.world_xy;
        any = true;
      }
      first = std::min(first, st.frame_index);
      last = std::max(last, st.frame_index);
      lo_xy = lo_xy.cwiseMin(st.world_xy);
      hi_xy = hi_xy.cwiseMax(st.world_xy);
    }
  }
  std::vector<int> false_ids;
  std::normal_distribution<double> step(0.0, 20.0);
  for (int k = 0; k < options.false_tracklets; ++k) {
    const int span = std::max(1, std::min(options.false_length, last - first + 1));
    const int start = std::uniform_int_distribution<int>(first, std::max(first, last - span + 1))(rng);
    Tracklet t;
    t.id = set.next_id++;
    t.status = TrackStatus::kConfirmed;
    Eigen::Vector2d xy(hi_xy.x() + options.clearance_mm * (1 + k), 0.5 * (lo_xy.y() + hi_xy.y()));
    for (int f = start; f < start + span; ++f) {
      xy += Eigen::Vector2d(step(rng), step(rng)).cwiseMin(100.0).cwiseMax(-100.0);
      TrackState st;
      st.frame_index = f;
      st.world_xy = xy;
      st.height_mm = 1000.0;
      st.score = 0.6;
      t.states.push_back(st);
    }
    t.hits = span;
    false_ids.push_back(t.id);
    set.tracklets.emplace(t.id, std::move(t));
  }

  out.fix.base_digest = Digest(set);
  for (int id : false_ids) out.fix.ops.push_back({DeleteOp{id}, "corrupt", 0});
  int temp = set.next_id;
  constexpr int kEnd = std::numeric_limits<int>::max();
  for (auto it = swaps.rbegin(); it != swaps.rend(); ++it, ++temp) {
    out.fix.ops.push_back({ReassignOp{it->a, it->frame, kEnd, temp}, "corrupt", 0});
    out.fix.ops.push_back({ReassignOp{it->b, it->frame, kEnd, it->a}, "corrupt", 0});
    out.fix.ops.push_back({ReassignOp{temp, it->frame, kEnd, it->b}, "corrupt", 0});
  }
  return out;
}

}  // namespace autolabel
