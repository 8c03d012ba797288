#include "autolabel/service.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <shared_mutex>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "autolabel/annotate.hpp"
#include "autolabel/error.hpp"
#include "autolabel/metrics.hpp"
#include "autolabel/pipeline.hpp"

namespace autolabel {
namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

Rgb IdColor(int id) {
  const double h = std::fmod(id * 0.618033988749895, 1.0) * 6.0;
  const int sector = static_cast<int>(h);
  const double f = h - sector;
  const auto c = [](double v) { return static_cast<std::uint8_t>(std::lround(55 + 200 * v)); };
  switch (sector % 6) {
    case 0: return {c(1), c(f), c(0)};
    case 1: return {c(1 - f), c(1), c(0)};
    case 2: return {c(0), c(1), c(f)};
    case 3: return {c(0), c(1 - f), c(1)};
    case 4: return {c(f), c(0), c(1)};
    default: return {c(1), c(0), c(1 - f)};
  }
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDigestMismatch:
    case ErrorCode::kFrameConflict:
      return 409;
    case ErrorCode::kUnknownId:
    case ErrorCode::kInvalidRange:
    case ErrorCode::kEmptyGroundTruth:
      return 422;
    case ErrorCode::kData:
    case ErrorCode::kConfig:
      return 400;
    default:
      return 500;
  }
}

void SendJson(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  SendJson(res, {{"error", code}, {"message", message}}, status);
}

const char* StatusName(TrackStatus s) {
  switch (s) {
    case TrackStatus::kCandidate: return "candidate";
    case TrackStatus::kConfirmed: return "confirmed";
    default: return "terminated";
  }
}

bool SafeName(const std::string& name) {
  return !name.empty() && name.find('/') == std::string::npos && name.find('\\') == std::string::npos &&
         name != "." && name != "..";
}

struct Sequence {
  std::string id;
  fs::path dir;
  TrackSet base;
  EditLog log;
  TrackSet current;
  std::string current_digest;
  mutable std::shared_mutex mutex;
  // Heightmaps are rendered lazily and cached per frame.
  mutable std::mutex cache_mutex;
  mutable std::map<int, TopDownMap> heightmaps;
};

}  // namespace

io::RgbImage RenderTopDown(const TopDownMap* heightmap, const TrackSet& tracks, int frame, double ring_radius_mm) {
  GroundGrid grid;
  if (heightmap != nullptr) {
    grid = heightmap->grid;
  } else {
    Eigen::Vector2d lo(-1000.0, -1000.0);
    Eigen::Vector2d hi(1000.0, 1000.0);
    bool any = false;
    for (const auto& [_, t] : tracks.tracklets) {
      for (const auto& s : t.states) {
        lo = any ? lo.cwiseMin(s.world_xy) : s.world_xy;
        hi = any ? hi.cwiseMax(s.world_xy) : s.world_xy;
        any = true;
      }
    }
    grid.cell_mm = kDefaultCellMm;
    grid.origin_x_mm = std::floor((lo.x() - 1000.0) / grid.cell_mm) * grid.cell_mm;
    grid.origin_y_mm = std::floor((lo.y() - 1000.0) / grid.cell_mm) * grid.cell_mm;
    grid.nx = static_cast<int>(std::ceil((hi.x() + 1000.0 - grid.origin_x_mm) / grid.cell_mm));
    grid.ny = static_cast<int>(std::ceil((hi.y() + 1000.0 - grid.origin_y_mm) / grid.cell_mm));
  }
  io::RgbImage img{grid.nx, grid.ny, std::vector<Rgb>(static_cast<std::size_t>(grid.nx) * grid.ny, Rgb{0, 0, 0})};
  auto px = [&](int m, int n) -> Rgb& { return img.pixels[static_cast<std::size_t>(n) * grid.nx + m]; };
  if (heightmap != nullptr) {
    int top = 1;
    for (auto v : heightmap->values) top = std::max<int>(top, v);
    for (int m = 0; m < grid.nx; ++m) {
      for (int n = 0; n < grid.ny; ++n) {
        const auto g = static_cast<std::uint8_t>(heightmap->at(m, n) * 255 / top);
        px(m, n) = {g, g, g};
      }
    }
  }
  const double r = ring_radius_mm / grid.cell_mm;
  for (const auto& [id, t] : tracks.tracklets) {
    auto it = std::find_if(t.states.begin(), t.states.end(), [&](const TrackState& s) { return s.frame_index == frame; });
    if (it == t.states.end()) continue;
    const Eigen::Vector2d c = grid.WorldToCell(it->world_xy);
    const Rgb color = IdColor(id);
    const int span = static_cast<int>(std::ceil(r)) + 1;
    for (int m = static_cast<int>(c.x()) - span; m <= static_cast<int>(c.x()) + span; ++m) {
      for (int n = static_cast<int>(c.y()) - span; n <= static_cast<int>(c.y()) + span; ++n) {
        if (m < 0 || n < 0 || m >= grid.nx || n >= grid.ny) continue;
        const double d = std::hypot(m + 0.5 - c.x(), n + 0.5 - c.y());
        if (std::abs(d - r) <= 1.0 || d <= 1.5) px(m, n) = color;
      }
    }
  }
  return img;
}

struct AnnotationService::Impl {
  fs::path data_dir;
  std::optional<fs::path> static_dir;
  std::map<std::string, std::unique_ptr<Sequence>> sequences;
  httplib::Server server;

  Sequence* Find(const std::string& id) {
    auto it = sequences.find(id);
    return it == sequences.end() ? nullptr : it->second.get();
  }

  void Load() {
    if (!fs::is_directory(data_dir)) throw Error(ErrorCode::kConfig, "data directory does not exist: " + data_dir.string());
    for (const auto& entry : fs::directory_iterator(data_dir)) {
      if (!entry.is_directory() || !fs::exists(entry.path() / "tracks.jsonl")) continue;
      auto seq = std::make_unique<Sequence>();
      seq->id = entry.path().filename().string();
      seq->dir = entry.path();
      seq->base = io::ReadTracks(seq->dir / "tracks.jsonl");
      const fs::path log_path = seq->dir / "editlog.jsonl";
      if (fs::exists(log_path)) {
        seq->log = io::ReadEditLog(log_path);
        seq->current = ReplayEditLog(seq->base, seq->log);
      } else {
        seq->log.base_digest = Digest(seq->base);
        seq->current = seq->base;
      }
      seq->current_digest = Digest(seq->current);
      spdlog::info("sequence {}: {} tracklets, {} edits", seq->id, seq->current.tracklets.size(), seq->log.ops.size());
      sequences.emplace(seq->id, std::move(seq));
    }
  }

  std::optional<TopDownMap> Heightmap(const Sequence& seq, int frame) {
    const fs::path depth = seq.dir / "depth";
    const fs::path calib = seq.dir / "calib.json";
    if (!fs::exists(depth / "meta.json") || !fs::exists(calib)) return std::nullopt;
    std::lock_guard lock(seq.cache_mutex);
    auto it = seq.heightmaps.find(frame);
    if (it != seq.heightmaps.end()) return it->second;
    DiskFrameSource source(depth);
    if (frame < 0 || frame >= source.num_frames()) return std::nullopt;
    const Rig rig = io::ReadRig(calib);
    const auto frames = source.Frames(frame);
    if (seq.heightmaps.size() > 64) seq.heightmaps.clear();
    auto [pos, _] = seq.heightmaps.emplace(frame, FuseToHeightmap(frames, rig, DeriveGridSpec(rig)));
    return pos->second;
  }

  void Routes() {
    server.Get("/sequences", [this](const httplib::Request&, httplib::Response& res) {
      Json list = Json::array();
      for (const auto& [id, seq] : sequences) {
        std::shared_lock lock(seq->mutex);
        Json first = nullptr;
        Json last = nullptr;
        for (const auto& [_, t] : seq->current.tracklets) {
          first = first.is_null() ? t.first_frame() : std::min(first.get<int>(), t.first_frame());
          last = last.is_null() ? t.last_frame() : std::max(last.get<int>(), t.last_frame());
        }
        list.push_back({{"id", id}, {"tracklets", seq->current.tracklets.size()}, {"first_frame", first},
                        {"last_frame", last}, {"digest", seq->current_digest}, {"edits", seq->log.ops.size()}});
      }
      SendJson(res, {{"sequences", list}});
    });

    server.Get(R"(/sequences/([^/]+)/frames/(-?\d+)/topdown)", [this](const httplib::Request& req, httplib::Response& res) {
      Sequence* seq = Find(req.matches[1]);
      if (seq == nullptr) return SendError(res, 404, "NotFound", "unknown sequence");
      const int frame = std::stoi(req.matches[2]);
      const auto map = Heightmap(*seq, frame);
      std::shared_lock lock(seq->mutex);
      const auto png = io::EncodePng(RenderTopDown(map ? &*map : nullptr, seq->current, frame));
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    });

    server.Get(R"(/sequences/([^/]+)/tracks)", [this](const httplib::Request& req, httplib::Response& res) {
      Sequence* seq = Find(req.matches[1]);
      if (seq == nullptr) return SendError(res, 404, "NotFound", "unknown sequence");
      int from = std::numeric_limits<int>::min();
      int to = std::numeric_limits<int>::max();
      try {
        if (req.has_param("from")) from = std::stoi(req.get_param_value("from"));
        if (req.has_param("to")) to = std::stoi(req.get_param_value("to"));
      } catch (const std::exception&) {
        return SendError(res, 400, "Data", "from/to must be integers");
      }
      std::shared_lock lock(seq->mutex);
      Json tracks = Json::array();
      for (const auto& [id, t] : seq->current.tracklets) {
        Json states = Json::array();
        for (const auto& s : t.states) {
          if (s.frame_index < from || s.frame_index > to) continue;
          states.push_back({{"frame", s.frame_index}, {"x_mm", s.world_xy.x()}, {"y_mm", s.world_xy.y()},
                            {"h_mm", s.height_mm}, {"score", s.score}});
        }
        if (!states.empty()) tracks.push_back({{"id", id}, {"status", StatusName(t.status)}, {"states", states}});
      }
      SendJson(res, {{"digest", seq->current_digest}, {"tracks", tracks}});
    });

    server.Post(R"(/sequences/([^/]+)/edits)", [this](const httplib::Request& req, httplib::Response& res) {
      Sequence* seq = Find(req.matches[1]);
      if (seq == nullptr) return SendError(res, 404, "NotFound", "unknown sequence");
      EditOp op;
      std::string expected;
      try {
        const Json body = Json::parse(req.body);
        op = io::EditOpFromJson(body);
        expected = body.value("base_digest", std::string());
      } catch (const Json::exception& e) {
        return SendError(res, 400, "Data", e.what());
      } catch (const Error& e) {
        return SendError(res, 400, std::string(ErrorCodeName(e.code())), e.what());
      }
      std::unique_lock lock(seq->mutex);
      if (!expected.empty() && expected != seq->current_digest) {
        return SendJson(res, {{"error", "DigestMismatch"}, {"message", "sequence changed since it was read"},
                              {"digest", seq->current_digest}},
                        409);
      }
      try {
        TrackSet next = ApplyEdit(seq->current, op);
        EditLog log = seq->log;
        log.ops.push_back(op);
        io::WriteEditLog(seq->dir / "editlog.jsonl", log);
        seq->log = std::move(log);
        seq->current = std::move(next);
        seq->current_digest = Digest(seq->current);
      } catch (const Error& e) {
        return SendError(res, StatusFor(e.code()), std::string(ErrorCodeName(e.code())), e.what());
      }
      spdlog::info("sequence {}: applied {} by '{}'", seq->id, EditKind(op), op.author);
      SendJson(res, {{"digest", seq->current_digest}, {"edits", seq->log.ops.size()}});
    });

    server.Get(R"(/sequences/([^/]+)/metrics)", [this](const httplib::Request& req, httplib::Response& res) {
      Sequence* seq = Find(req.matches[1]);
      if (seq == nullptr) return SendError(res, 404, "NotFound", "unknown sequence");
      const std::string gt_name = req.has_param("gt") ? req.get_param_value("gt") : "gt.jsonl";
      if (!SafeName(gt_name)) return SendError(res, 400, "Data", "gt must be a file name inside the sequence");
      const fs::path gt_path = seq->dir / gt_name;
      if (!fs::exists(gt_path)) return SendError(res, 404, "NotFound", "no ground truth file " + gt_name);
      try {
        const FramePoints gt = ToFramePoints(io::ReadTracks(gt_path));
        std::shared_lock lock(seq->mutex);
        const MotReport report = Evaluate(gt, ToFramePoints(seq->current));
        Json body = io::ReportToJson(report);
        body["digest"] = seq->current_digest;
        SendJson(res, body);
      } catch (const Error& e) {
        SendError(res, StatusFor(e.code()), std::string(ErrorCodeName(e.code())), e.what());
      }
    });

    server.Get(R"(/sequences/([^/]+)/editlog)", [this](const httplib::Request& req, httplib::Response& res) {
      Sequence* seq = Find(req.matches[1]);
      if (seq == nullptr) return SendError(res, 404, "NotFound", "unknown sequence");
      std::shared_lock lock(seq->mutex);
      SendJson(res, io::EditLogToJson(seq->log));
    });

    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const Error& e) {
        SendError(res, StatusFor(e.code()), std::string(ErrorCodeName(e.code())), e.what());
      } catch (const std::exception& e) {
        SendError(res, 500, "Internal", e.what());
      }
    });

    if (static_dir) server.set_mount_point("/", static_dir->string());
  }
};

AnnotationService::AnnotationService(fs::path data_dir, std::optional<fs::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
  impl_->data_dir = std::move(data_dir);
  impl_->static_dir = std::move(static_dir);
  impl_->Load();
  impl_->Routes();
}

AnnotationService::~AnnotationService() { Stop(); }

std::vector<std::string> AnnotationService::Sequences() const {
  std::vector<std::string> out;
  for (const auto& [id, _] : impl_->sequences) out.push_back(id);
  return out;
}

bool AnnotationService::Listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int AnnotationService::BindToAnyPort(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool AnnotationService::ListenAfterBind() { return impl_->server.listen_after_bind(); }

void AnnotationService::Stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool AnnotationService::IsRunning() const { return impl_->server.is_running(); }

}  // namespace autolabel
