#include "autolabel/io.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "autolabel/error.hpp"

namespace autolabel::io {
namespace {

[[noreturn]] void Fail(const fs::path& path, const std::string& what) {
  throw Error(ErrorCode::kData, path.string() + ": " + what);
}

std::ifstream OpenIn(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) Fail(path, "cannot open for reading");
  return in;
}

std::ofstream OpenOut(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) Fail(path, "cannot open for writing");
  return out;
}

template <class T>
T Get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::kData, std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kData, std::string("field '") + key + "': " + e.what());
  }
}

template <class T>
T GetOr(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? Get<T>(j, key) : fallback;
}

template <class F>
auto WithContext(const fs::path& path, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kData) throw;
    Fail(path, e.what());
  } catch (const Json::exception& e) {
    Fail(path, e.what());
  }
}

Json IntrinsicsToJson(const CameraIntrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

CameraIntrinsics IntrinsicsFromJson(const Json& j) {
  CameraIntrinsics k{Get<double>(j, "fx"), Get<double>(j, "fy"), Get<double>(j, "cx"),
                     Get<double>(j, "cy"), Get<int>(j, "width"),  Get<int>(j, "height")};
  if (!k.IsValid()) throw Error(ErrorCode::kData, "invalid intrinsics");
  return k;
}

Json PoseToJson(const Pose& p) {
  const auto& q = p.rotation();
  const auto& t = p.translation();
  return {{"q", {q.w(), q.x(), q.y(), q.z()}}, {"t_mm", {t.x(), t.y(), t.z()}}};
}

Pose PoseFromJson(const Json& j) {
  const auto q = Get<std::vector<double>>(j, "q");
  const auto t = Get<std::vector<double>>(j, "t_mm");
  if (q.size() != 4 || t.size() != 3) throw Error(ErrorCode::kData, "pose needs q[4] and t_mm[3]");
  Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
  if (quat.norm() < 1e-12) throw Error(ErrorCode::kData, "zero quaternion");
  return Pose(quat.normalized(), Eigen::Vector3d(t[0], t[1], t[2]));
}

Json RgbToJson(const Rgb& c) { return {c[0], c[1], c[2]}; }

Rgb RgbFromJson(const Json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 3) throw Error(ErrorCode::kData, "color needs 3 components");
  Rgb c;
  for (int i = 0; i < 3; ++i) c[i] = static_cast<std::uint8_t>(std::clamp(v[i], 0, 255));
  return c;
}

Json XyToJson(const Eigen::Vector2d& p) { return {p.x(), p.y()}; }

Eigen::Vector2d XyFromJson(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 2) throw Error(ErrorCode::kData, "point needs 2 components");
  return {v[0], v[1]};
}

Json MarkerToJson(const MarkerSpec& m) {
  return {{"id", m.id}, {"side_mm", m.side_mm}, {"x_mm", m.x_mm}, {"y_mm", m.y_mm}, {"yaw_rad", m.yaw_rad}};
}

MarkerSpec MarkerFromJson(const Json& j) {
  MarkerSpec m;
  m.id = Get<int>(j, "id");
  m.side_mm = GetOr<double>(j, "side_mm", kDefaultMarkerSideMm);
  m.x_mm = GetOr<double>(j, "x_mm", 0.0);
  m.y_mm = GetOr<double>(j, "y_mm", 0.0);
  m.yaw_rad = GetOr<double>(j, "yaw_rad", 0.0);
  return m;
}

Json OptionalId(const std::optional<int>& id) { return id ? Json(*id) : Json(nullptr); }

std::optional<int> OptionalIdFrom(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return Get<int>(j, key);
}

}  // namespace

Json ReadJsonFile(const fs::path& path) {
  auto in = OpenIn(path);
  return WithContext(path, [&] { return Json::parse(in); });
}

void WriteJsonFile(const fs::path& path, const Json& value) {
  auto out = OpenOut(path);
  out << value.dump(2) << "\n";
}

std::vector<Json> ReadJsonLines(const fs::path& path) {
  auto in = OpenIn(path);
  std::vector<Json> lines;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      lines.push_back(Json::parse(line));
    } catch (const Json::exception& e) {
      Fail(path, "line " + std::to_string(number) + ": " + e.what());
    }
  }
  return lines;
}

void WriteTextFile(const fs::path& path, const std::string& text) {
  auto out = OpenOut(path, std::ios::out | std::ios::binary);
  out << text;
}

Json RigToJson(std::span<const CameraModel> rig) {
  Json cams = Json::array();
  for (const auto& c : rig) {
    cams.push_back({{"id", c.id}, {"intrinsics", IntrinsicsToJson(c.intrinsics)}, {"pose", PoseToJson(c.pose)}});
  }
  return {{"cameras", cams}, {"ground", {{"z", 0.0}}}};
}

Rig RigFromJson(const Json& value) {
  Rig rig;
  for (const auto& c : Get<Json>(value, "cameras")) {
    rig.push_back({Get<int>(c, "id"), IntrinsicsFromJson(Get<Json>(c, "intrinsics")), PoseFromJson(Get<Json>(c, "pose"))});
  }
  return rig;
}

Rig ReadRig(const fs::path& path) {
  const Json j = ReadJsonFile(path);
  return WithContext(path, [&] { return RigFromJson(j); });
}

void WriteRig(const fs::path& path, std::span<const CameraModel> rig) { WriteJsonFile(path, RigToJson(rig)); }

std::map<int, CameraIntrinsics> ReadIntrinsics(const fs::path& path) {
  const Json j = ReadJsonFile(path);
  return WithContext(path, [&] {
    std::map<int, CameraIntrinsics> out;
    for (const auto& c : Get<Json>(j, "cameras")) out[Get<int>(c, "id")] = IntrinsicsFromJson(Get<Json>(c, "intrinsics"));
    return out;
  });
}

std::vector<MarkerObservation> ReadObservations(const fs::path& path) {
  const auto lines = ReadJsonLines(path);
  return WithContext(path, [&] {
    std::vector<MarkerObservation> out;
    for (const auto& j : lines) {
      out.push_back({Get<int>(j, "camera"), Get<int>(j, "marker"), Get<int>(j, "corner"),
                     Eigen::Vector2d(Get<double>(j, "u"), Get<double>(j, "v"))});
    }
    return out;
  });
}

void WriteObservations(const fs::path& path, std::span<const MarkerObservation> observations) {
  std::string text;
  for (const auto& o : observations) {
    text += Json{{"camera", o.camera_id}, {"marker", o.marker_id}, {"corner", o.corner_index},
                 {"u", o.pixel.x()}, {"v", o.pixel.y()}}.dump() + "\n";
  }
  WriteTextFile(path, text);
}

std::vector<MarkerSpec> ReadMarkers(const fs::path& path) {
  const Json j = ReadJsonFile(path);
  return WithContext(path, [&] {
    std::vector<MarkerSpec> out;
    for (const auto& m : Get<Json>(j, "markers")) out.push_back(MarkerFromJson(m));
    return out;
  });
}

void WriteMarkers(const fs::path& path, std::span<const MarkerSpec> markers) {
  Json list = Json::array();
  for (const auto& m : markers) list.push_back(MarkerToJson(m));
  WriteJsonFile(path, {{"markers", list}});
}

Json CalibrationToJson(const CalibrationResult& result, const CalibrationGraph& graph) {
  Rig rig;
  for (const auto& [id, pose] : result.poses) rig.push_back({id, graph.cameras.at(id), pose});
  Json out = RigToJson(rig);
  const ResidualStats stats = ReprojectionRms(result, graph);
  Json per_camera = Json::object();
  for (const auto& [id, rms] : stats.per_camera_rms_px) per_camera[std::to_string(id)] = rms;
  out["anchor_marker"] = result.anchor_marker;
  out["rms_px"] = stats.rms_px;
  out["max_px"] = stats.max_px;
  out["per_camera_rms_px"] = per_camera;
  out["iterations"] = result.iterations;
  return out;
}

std::string TracksToJsonLines(const TrackSet& set, bool confirmed_only) {
  struct Row {
    int frame;
    int id;
    const TrackState* state;
  };
  std::vector<Row> rows;
  for (const auto& [id, t] : set.tracklets) {
    if (confirmed_only && t.status == TrackStatus::kCandidate) continue;
    for (const auto& s : t.states) rows.push_back({s.frame_index, id, &s});
  }
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return std::tie(a.frame, a.id) < std::tie(b.frame, b.id); });
  std::string text;
  for (const auto& r : rows) {
    text += Json{{"frame", r.frame}, {"id", r.id}, {"x_mm", r.state->world_xy.x()}, {"y_mm", r.state->world_xy.y()},
                 {"h_mm", r.state->height_mm}, {"score", r.state->score}}.dump() + "\n";
  }
  return text;
}

TrackSet TracksFromJsonLines(const std::vector<Json>& lines) {
  TrackSet set;
  for (const auto& j : lines) {
    const int id = Get<int>(j, "id");
    if (id <= 0) throw Error(ErrorCode::kData, "track ids must be positive");
    TrackState s;
    s.frame_index = Get<int>(j, "frame");
    s.world_xy = {Get<double>(j, "x_mm"), Get<double>(j, "y_mm")};
    s.height_mm = GetOr<double>(j, "h_mm", 0.0);
    s.score = GetOr<double>(j, "score", 1.0);
    Tracklet& t = set.tracklets[id];
    t.id = id;
    t.status = TrackStatus::kConfirmed;
    t.states.push_back(s);
    set.next_id = std::max(set.next_id, id + 1);
  }
  for (auto& [id, t] : set.tracklets) {
    std::sort(t.states.begin(), t.states.end(),
              [](const TrackState& a, const TrackState& b) { return a.frame_index < b.frame_index; });
    for (std::size_t i = 1; i < t.states.size(); ++i) {
      if (t.states[i].frame_index == t.states[i - 1].frame_index) {
        throw Error(ErrorCode::kData, "track " + std::to_string(id) + " has two states in frame " +
                                          std::to_string(t.states[i].frame_index));
      }
    }
  }
  return set;
}

TrackSet ReadTracks(const fs::path& path) {
  const auto lines = ReadJsonLines(path);
  return WithContext(path, [&] { return TracksFromJsonLines(lines); });
}

void WriteTracks(const fs::path& path, const TrackSet& set, bool confirmed_only) {
  WriteTextFile(path, TracksToJsonLines(set, confirmed_only));
}

void WriteDetections(const fs::path& path, const std::map<int, std::vector<Detection>>& by_frame) {
  std::string text;
  for (const auto& [frame, detections] : by_frame) {
    for (const auto& d : detections) {
      text += Json{{"frame", frame}, {"x_mm", d.world_xy.x()}, {"y_mm", d.world_xy.y()}, {"score", d.score}}.dump() + "\n";
    }
  }
  WriteTextFile(path, text);
}

std::string LabelsToCsv(std::span<const LabelRecord> records, int camera_id) {
  std::string text = "frame,id,bb_left,bb_top,bb_width,bb_height,conf\n";
  for (const auto& r : records) {
    if (r.camera != camera_id) continue;
    text += fmt::format("{},{},{:.2f},{:.2f},{:.2f},{:.2f},{:.4f}\n", r.frame, r.track_id, r.box.left, r.box.top,
                        r.box.width, r.box.height, r.confidence);
  }
  return text;
}

Json ReportToJson(const MotReport& r) {
  return {{"idf1", r.idf1},         {"mota", r.mota}, {"idp", r.idp},   {"idr", r.idr},
          {"fp", r.fp},             {"fn", r.fn},     {"ids", r.ids},   {"gt_total", r.gt_total},
          {"pred_total", r.pred_total}, {"matches", r.matches}, {"idtp", r.idtp}};
}

std::string FormatReportTable(const std::vector<std::pair<std::string, MotReport>>& rows) {
  std::string out = fmt::format("{:<16}{:>8}{:>8}{:>8}{:>8}{:>8}\n", "Environment", "IDF1", "MOTA", "FP", "FN", "IDs");
  for (const auto& [name, r] : rows) {
    out += fmt::format("{:<16}{:>8.1f}{:>8.1f}{:>8}{:>8}{:>8}\n", name, r.idf1, r.mota, r.fp, r.fn, r.ids);
  }
  return out;
}

Json EditOpToJson(const EditOp& op) {
  Json j;
  if (const auto* m = std::get_if<MergeOp>(&op.action)) {
    j = {{"op", "merge"}, {"from_id", m->from_id}, {"into_id", m->into_id}};
  } else if (const auto* s = std::get_if<SplitOp>(&op.action)) {
    j = {{"op", "split"}, {"id", s->id}, {"at_frame", s->at_frame}, {"new_id", OptionalId(s->new_id)}};
  } else if (const auto* d = std::get_if<DeleteOp>(&op.action)) {
    j = {{"op", "delete"}, {"id", d->id}};
  } else if (const auto* r = std::get_if<ReassignOp>(&op.action)) {
    j = {{"op", "reassign"}, {"id", r->id}, {"from_frame", r->from_frame}, {"to_frame", r->to_frame},
         {"new_id", OptionalId(r->new_id)}};
  }
  j["author"] = op.author;
  j["timestamp_ms"] = op.timestamp_ms;
  return j;
}

EditOp EditOpFromJson(const Json& j) {
  EditOp op;
  const auto kind = Get<std::string>(j, "op");
  if (kind == "merge") {
    op.action = MergeOp{Get<int>(j, "from_id"), Get<int>(j, "into_id")};
  } else if (kind == "split") {
    op.action = SplitOp{Get<int>(j, "id"), Get<int>(j, "at_frame"), OptionalIdFrom(j, "new_id")};
  } else if (kind == "delete") {
    op.action = DeleteOp{Get<int>(j, "id")};
  } else if (kind == "reassign") {
    op.action = ReassignOp{Get<int>(j, "id"), Get<int>(j, "from_frame"), Get<int>(j, "to_frame"),
                           OptionalIdFrom(j, "new_id")};
  } else {
    throw Error(ErrorCode::kData, "unknown edit op '" + kind + "'");
  }
  op.author = GetOr<std::string>(j, "author", "");
  op.timestamp_ms = GetOr<std::int64_t>(j, "timestamp_ms", 0);
  return op;
}

EditLog ReadEditLog(const fs::path& path) {
  const auto lines = ReadJsonLines(path);
  return WithContext(path, [&] {
    EditLog log;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i == 0 && lines[i].contains("base_digest") && !lines[i].contains("op")) {
        log.base_digest = Get<std::string>(lines[i], "base_digest");
        continue;
      }
      log.ops.push_back(EditOpFromJson(lines[i]));
    }
    return log;
  });
}

void WriteEditLog(const fs::path& path, const EditLog& log) {
  std::string text;
  if (!log.base_digest.empty()) text += Json{{"base_digest", log.base_digest}}.dump() + "\n";
  for (const auto& op : log.ops) text += EditOpToJson(op).dump() + "\n";
  WriteTextFile(path, text);
}

Json EditLogToJson(const EditLog& log) {
  Json ops = Json::array();
  for (const auto& op : log.ops) ops.push_back(EditOpToJson(op));
  return {{"base_digest", log.base_digest}, {"ops", ops}};
}

Json SceneSpecToJson(const SceneSpec& spec) {
  Json actors = Json::array();
  for (const auto& a : spec.actors) {
    Json w = Json::array();
    for (const auto& p : a.waypoints) w.push_back(XyToJson(p));
    actors.push_back({{"radius_mm", a.radius_mm}, {"height_mm", a.height_mm}, {"color", RgbToJson(a.color)},
                      {"waypoints", w}, {"speed_mm_s", a.speed_mm_s}});
  }
  Json markers = Json::array();
  for (const auto& m : spec.markers) markers.push_back(MarkerToJson(m));
  Json boxes = Json::array();
  for (const auto& b : spec.boxes) {
    boxes.push_back({{"min_mm", {b.min_mm.x(), b.min_mm.y(), b.min_mm.z()}},
                     {"max_mm", {b.max_mm.x(), b.max_mm.y(), b.max_mm.z()}},
                     {"color", RgbToJson(b.color)}});
  }
  return {{"duration_s", spec.duration_s},
          {"fps", spec.fps},
          {"seed", spec.seed},
          {"bounds", {{"x_min_mm", spec.bounds.x_min_mm}, {"x_max_mm", spec.bounds.x_max_mm},
                      {"y_min_mm", spec.bounds.y_min_mm}, {"y_max_mm", spec.bounds.y_max_mm}}},
          {"actors", actors},
          {"markers", markers},
          {"boxes", boxes},
          {"cameras", RigToJson(spec.cameras)["cameras"]}};
}

SceneSpec SceneSpecFromJson(const Json& j) {
  SceneSpec spec;
  spec.duration_s = GetOr<double>(j, "duration_s", spec.duration_s);
  spec.fps = GetOr<double>(j, "fps", spec.fps);
  spec.seed = GetOr<std::uint64_t>(j, "seed", 0);
  if (j.contains("bounds")) {
    const Json& b = j.at("bounds");
    spec.bounds = {Get<double>(b, "x_min_mm"), Get<double>(b, "x_max_mm"), Get<double>(b, "y_min_mm"),
                   Get<double>(b, "y_max_mm")};
  }
  int index = 0;
  for (const auto& a : GetOr<Json>(j, "actors", Json::array())) {
    ActorSpec actor;
    actor.radius_mm = GetOr<double>(a, "radius_mm", actor.radius_mm);
    actor.height_mm = GetOr<double>(a, "height_mm", actor.height_mm);
    actor.color = a.contains("color") ? RgbFromJson(a.at("color")) : ActorColor(index);
    actor.speed_mm_s = GetOr<double>(a, "speed_mm_s", actor.speed_mm_s);
    for (const auto& p : Get<Json>(a, "waypoints")) actor.waypoints.push_back(XyFromJson(p));
    spec.actors.push_back(actor);
    ++index;
  }
  for (const auto& m : GetOr<Json>(j, "markers", Json::array())) spec.markers.push_back(MarkerFromJson(m));
  for (const auto& b : GetOr<Json>(j, "boxes", Json::array())) {
    BoxSpec box;
    const auto lo = Get<std::vector<double>>(b, "min_mm");
    const auto hi = Get<std::vector<double>>(b, "max_mm");
    if (lo.size() != 3 || hi.size() != 3) throw Error(ErrorCode::kData, "box corners need 3 components");
    box.min_mm = {lo[0], lo[1], lo[2]};
    box.max_mm = {hi[0], hi[1], hi[2]};
    if (b.contains("color")) box.color = RgbFromJson(b.at("color"));
    spec.boxes.push_back(box);
  }
  if (j.contains("cameras")) spec.cameras = RigFromJson({{"cameras", j.at("cameras")}});
  return spec;
}

void WritePgm16(const fs::path& path, int width, int height, std::span<const std::uint16_t> pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kDimensionMismatch, "pgm buffer does not match its shape");
  }
  std::string data = fmt::format("P5\n{} {}\n65535\n", width, height);
  const std::size_t header = data.size();
  data.resize(header + 2 * pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    data[header + 2 * i] = static_cast<char>(pixels[i] >> 8);
    data[header + 2 * i + 1] = static_cast<char>(pixels[i] & 0xff);
  }
  WriteTextFile(path, data);
}

Gray16 ReadPgm16(const fs::path& path) {
  auto in = OpenIn(path, std::ios::in | std::ios::binary);
  std::string magic;
  Gray16 img;
  int maxval = 0;
  in >> magic;
  // Skip comments between header tokens.
  auto next_int = [&](int& v) {
    while (in >> std::ws && in.peek() == '#') in.ignore(1 << 20, '\n');
    in >> v;
  };
  next_int(img.width);
  next_int(img.height);
  next_int(maxval);
  if (magic != "P5" || !in || img.width <= 0 || img.height <= 0 || maxval <= 255 || maxval > 65535) {
    Fail(path, "not a 16-bit binary PGM");
  }
  in.get();
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  std::vector<unsigned char> raw(2 * n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) Fail(path, "truncated pixel data");
  img.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) img.pixels[i] = static_cast<std::uint16_t>(raw[2 * i] << 8 | raw[2 * i + 1]);
  return img;
}

std::vector<std::uint8_t> EncodePng(const RgbImage& image) {
  if (image.pixels.size() != static_cast<std::size_t>(image.width) * image.height || image.width <= 0) {
    throw Error(ErrorCode::kDimensionMismatch, "png buffer does not match its shape");
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::kData, std::string("png: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw Error(ErrorCode::kData, std::string("png: ") + png.message);
  }
  out.resize(size);
  return out;
}

void WritePng(const fs::path& path, const RgbImage& image) {
  const auto bytes = EncodePng(image);
  WriteTextFile(path, std::string(bytes.begin(), bytes.end()));
}

RgbImage ReadPng(const fs::path& path) {
  auto in = OpenIn(path, std::ios::in | std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    Fail(path, std::string("png: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  RgbImage img;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    Fail(path, std::string("png: ") + png.message);
  }
  return img;
}

void WriteHeatmap(const fs::path& path, const Heatmap& heatmap) {
  std::string data(heatmap.values.size() * sizeof(float), '\0');
  std::memcpy(data.data(), heatmap.values.data(), data.size());
  WriteTextFile(path, data);
  WriteJsonFile(fs::path(path.string() + ".json"),
                {{"camera_id", heatmap.camera_id}, {"cols", heatmap.cols}, {"rows", heatmap.rows}, {"dtype", "float32"},
                 {"layout", "row-major"}});
}

Heatmap ReadHeatmap(const fs::path& path) {
  const Json meta = ReadJsonFile(fs::path(path.string() + ".json"));
  Heatmap h = WithContext(path, [&] {
    return Heatmap(Get<int>(meta, "camera_id"), Get<int>(meta, "cols"), Get<int>(meta, "rows"));
  });
  auto in = OpenIn(path, std::ios::in | std::ios::binary);
  in.read(reinterpret_cast<char*>(h.values.data()), static_cast<std::streamsize>(h.values.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != h.values.size() * sizeof(float)) Fail(path, "truncated heatmap");
  return h;
}

fs::path FramePath(const fs::path& dir, int camera_id, int frame, const std::string& ext) {
  return dir / fmt::format("cam{}", camera_id) / fmt::format("{:06}.{}", frame, ext);
}

}  // namespace autolabel::io
