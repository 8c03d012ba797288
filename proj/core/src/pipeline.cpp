#include "autolabel/pipeline.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "autolabel/annotate.hpp"
#include "autolabel/error.hpp"
#include "autolabel/io.hpp"

namespace autolabel {
namespace fs = std::filesystem;
using Json = nlohmann::json;

SceneFrameSource::SceneFrameSource(const Scene& scene, const RenderOptions& options)
    : scene_(scene), options_(options) {}

std::vector<int> SceneFrameSource::camera_ids() const {
  std::vector<int> ids;
  for (const auto& c : scene_.spec.cameras) ids.push_back(c.id);
  return ids;
}

std::vector<DepthFrame> SceneFrameSource::Frames(int index) const {
  std::vector<DepthFrame> frames;
  for (const auto& c : scene_.spec.cameras) frames.push_back(RenderDepthFrame(scene_, c, index, options_));
  return frames;
}

DiskFrameSource::DiskFrameSource(const fs::path& dir) : dir_(dir) {
  const Json meta = io::ReadJsonFile(dir / "meta.json");
  try {
    fps_ = meta.value("fps", 15.0);
    num_frames_ = meta.at("frame_count").get<int>();
    camera_ids_ = meta.at("camera_ids").get<std::vector<int>>();
    has_rgb_ = meta.value("rgb", false);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kData, (dir / "meta.json").string() + ": " + e.what());
  }
  for (int id : camera_ids_) {
    const fs::path cam_dir = io::FramePath(dir, id, 0, "pgm").parent_path();
    int count = 0;
    if (fs::exists(cam_dir)) {
      for (const auto& entry : fs::directory_iterator(cam_dir)) count += entry.path().extension() == ".pgm";
    }
    if (count != num_frames_) {
      throw Error(ErrorCode::kStreamLengthMismatch,
                  fmt::format("camera {} has {} depth frames, meta.json declares {}", id, count, num_frames_));
    }
  }
}

std::vector<DepthFrame> DiskFrameSource::Frames(int index) const {
  std::vector<DepthFrame> frames;
  for (int id : camera_ids_) {
    const io::Gray16 depth = io::ReadPgm16(io::FramePath(dir_, id, index, "pgm"));
    DepthFrame f;
    f.camera_id = id;
    f.frame_index = index;
    f.timestamp_ms = index * 1000.0 / fps_;
    f.width = depth.width;
    f.height = depth.height;
    f.depth = depth.pixels;
    if (has_rgb_) {
      io::RgbImage rgb = io::ReadPng(io::FramePath(dir_, id, index, "png"));
      if (rgb.width != f.width || rgb.height != f.height) {
        throw Error(ErrorCode::kData, fmt::format("camera {} frame {}: color and depth sizes differ", id, index));
      }
      f.rgb = std::move(rgb.pixels);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

void WriteSequence(const fs::path& dir, const FrameSource& source, double fps) {
  bool rgb = source.num_frames() > 0;
  for (int f = 0; f < source.num_frames(); ++f) {
    for (const auto& frame : source.Frames(f)) {
      io::WritePgm16(io::FramePath(dir, frame.camera_id, f, "pgm"), frame.width, frame.height, frame.depth);
      if (frame.has_color()) {
        io::WritePng(io::FramePath(dir, frame.camera_id, f, "png"), {frame.width, frame.height, frame.rgb});
      } else {
        rgb = false;
      }
    }
  }
  const auto ids = source.camera_ids();
  for (int id : ids) fs::create_directories(io::FramePath(dir, id, 0, "pgm").parent_path());
  io::WriteJsonFile(dir / "meta.json",
                    {{"fps", fps}, {"frame_count", source.num_frames()}, {"camera_ids", ids}, {"rgb", rgb}});
}

void PipelineConfig::Validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kConfig, what); };
  const auto& p = detector.proposals;
  if (p.window < 3 || p.window % 2 == 0) fail("detector.window must be odd and >= 3");
  if (p.min_height_cells < 1) fail("detector.min_height_cells must be >= 1");
  if (!(p.nms_radius_cells >= 0.0)) fail("detector.nms_radius_cells must be >= 0");
  if (!(detector.keep_threshold >= 0.0 && detector.keep_threshold <= 1.0)) fail("detector.keep_threshold must be in [0, 1]");
  if (!(classifier.max_height_mm > classifier.min_height_mm)) fail("detector.max_height_mm must exceed min_height_mm");
  if (classifier.min_nonzero_cells < 0 || classifier.min_nonzero_cells > kCropSide * kCropSide) {
    fail("detector.min_nonzero_cells must be in [0, 400]");
  }
  const auto& w = tracker.weights;
  if (w.spatial < 0.0 || w.appearance < 0.0 || std::abs(w.spatial + w.appearance - 1.0) > 1e-9) {
    fail("tracker weights must be non-negative and sum to 1");
  }
  if (!(w.gate_mm > 0.0)) fail("tracker.gate_mm must be > 0");
  if (tracker.confirm_hits < 1) fail("tracker.confirm_hits must be >= 1");
  if (tracker.max_misses < 1) fail("tracker.max_misses must be >= 1");
  if (!(tracker.init_threshold >= 0.0 && tracker.init_threshold <= 1.0)) fail("tracker.init_threshold must be in [0, 1]");
  if (grid && (grid->nx <= 0 || grid->ny <= 0 || grid->nz <= 0 || !(grid->cell_mm > 0.0))) {
    fail("grid dimensions and cell_mm must be positive");
  }
  if (!(fusion.max_depth_mm > 0.0)) fail("fusion.max_depth_mm must be > 0");
}

Json PipelineConfig::ToJson() const {
  Json j = {
      {"depth_dir", depth_dir.string()},
      {"calib", calib_path.string()},
      {"output_dir", output_dir.string()},
      {"detector",
       {{"min_height_cells", detector.proposals.min_height_cells},
        {"window", detector.proposals.window},
        {"nms_radius_cells", detector.proposals.nms_radius_cells},
        {"keep_threshold", detector.keep_threshold},
        {"min_height_mm", classifier.min_height_mm},
        {"max_height_mm", classifier.max_height_mm},
        {"min_nonzero_cells", classifier.min_nonzero_cells}}},
      {"tracker",
       {{"spatial_weight", tracker.weights.spatial},
        {"appearance_weight", tracker.weights.appearance},
        {"gate_mm", tracker.weights.gate_mm},
        {"init_threshold", tracker.init_threshold},
        {"confirm_hits", tracker.confirm_hits},
        {"max_misses", tracker.max_misses},
        {"footprint_half_mm", tracker.footprint_half_mm},
        {"column_z_min_mm", tracker.column_z_min_mm}}},
      {"fusion", {{"max_depth_mm", fusion.max_depth_mm}}},
      {"emit_labels", emit_labels},
      {"emit_tracks", emit_tracks},
      {"use_color", use_color},
      {"seed", seed},
  };
  if (grid) {
    j["grid"] = {{"origin_mm", {grid->origin.x(), grid->origin.y(), grid->origin.z()}},
                 {"nx", grid->nx},
                 {"ny", grid->ny},
                 {"nz", grid->nz},
                 {"cell_mm", grid->cell_mm}};
  }
  return j;
}

PipelineConfig PipelineConfig::FromJson(const Json& value) {
  PipelineConfig c;
  if (!value.is_object()) throw Error(ErrorCode::kConfig, "config must be an object");
  auto check_keys = [](const Json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
      if (!allowed.count(key)) throw Error(ErrorCode::kConfig, "unknown config key '" + where + key + "'");
    }
  };
  try {
    check_keys(value, {"depth_dir", "calib", "output_dir", "detector", "tracker", "fusion", "grid", "emit_labels",
                       "emit_tracks", "use_color", "seed"},
               "");
    c.depth_dir = value.value("depth_dir", std::string());
    c.calib_path = value.value("calib", std::string());
    c.output_dir = value.value("output_dir", std::string());
    c.emit_labels = value.value("emit_labels", c.emit_labels);
    c.emit_tracks = value.value("emit_tracks", c.emit_tracks);
    c.use_color = value.value("use_color", c.use_color);
    c.seed = value.value("seed", c.seed);
    if (value.contains("detector")) {
      const Json& d = value.at("detector");
      check_keys(d, {"min_height_cells", "window", "nms_radius_cells", "keep_threshold", "min_height_mm",
                     "max_height_mm", "min_nonzero_cells"},
                 "detector.");
      c.detector.proposals.min_height_cells = d.value("min_height_cells", c.detector.proposals.min_height_cells);
      c.detector.proposals.window = d.value("window", c.detector.proposals.window);
      c.detector.proposals.nms_radius_cells = d.value("nms_radius_cells", c.detector.proposals.nms_radius_cells);
      c.detector.keep_threshold = d.value("keep_threshold", c.detector.keep_threshold);
      c.classifier.min_height_mm = d.value("min_height_mm", c.classifier.min_height_mm);
      c.classifier.max_height_mm = d.value("max_height_mm", c.classifier.max_height_mm);
      c.classifier.min_nonzero_cells = d.value("min_nonzero_cells", c.classifier.min_nonzero_cells);
    }
    if (value.contains("tracker")) {
      const Json& t = value.at("tracker");
      check_keys(t, {"spatial_weight", "appearance_weight", "gate_mm", "init_threshold", "confirm_hits", "max_misses",
                     "footprint_half_mm", "column_z_min_mm"},
                 "tracker.");
      c.tracker.weights.spatial = t.value("spatial_weight", c.tracker.weights.spatial);
      c.tracker.weights.appearance = t.value("appearance_weight", c.tracker.weights.appearance);
      c.tracker.weights.gate_mm = t.value("gate_mm", c.tracker.weights.gate_mm);
      c.tracker.init_threshold = t.value("init_threshold", c.tracker.init_threshold);
      c.tracker.confirm_hits = t.value("confirm_hits", c.tracker.confirm_hits);
      c.tracker.max_misses = t.value("max_misses", c.tracker.max_misses);
      c.tracker.footprint_half_mm = t.value("footprint_half_mm", c.tracker.footprint_half_mm);
      c.tracker.column_z_min_mm = t.value("column_z_min_mm", c.tracker.column_z_min_mm);
    }
    if (value.contains("fusion")) {
      const Json& f = value.at("fusion");
      check_keys(f, {"max_depth_mm"}, "fusion.");
      c.fusion.max_depth_mm = f.value("max_depth_mm", c.fusion.max_depth_mm);
    }
    if (value.contains("grid") && !value.at("grid").is_null()) {
      const Json& g = value.at("grid");
      check_keys(g, {"origin_mm", "nx", "ny", "nz", "cell_mm"}, "grid.");
      VoxelGridSpec spec;
      const auto o = g.at("origin_mm").get<std::vector<double>>();
      if (o.size() != 3) throw Error(ErrorCode::kConfig, "grid.origin_mm needs 3 components");
      spec.origin = {o[0], o[1], o[2]};
      spec.nx = g.at("nx").get<int>();
      spec.ny = g.at("ny").get<int>();
      spec.nz = g.at("nz").get<int>();
      spec.cell_mm = g.value("cell_mm", kDefaultCellMm);
      c.grid = spec;
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kConfig, e.what());
  }
  c.Validate();
  return c;
}

AutoAnnotator::AutoAnnotator(Rig rig, PipelineConfig config)
    : rig_(std::move(rig)), config_(std::move(config)), classifier_(config_.classifier) {
  config_.Validate();
  grid_ = config_.grid ? *config_.grid : DeriveGridSpec(rig_);
}

void AutoAnnotator::Step(std::span<const DepthFrame> frames) {
  if (frames.empty()) throw Error(ErrorCode::kData, "no frames supplied");
  const int index = frames.front().frame_index;
  try {
    const PointCloud cloud = ReconstructPointCloud(frames, rig_, config_.fusion);
    heightmap_ = TopdownHeightmap(Voxelize(cloud, grid_));
    std::vector<Detection> detections = DetectPeople(heightmap_, classifier_, config_.detector);
    tracks_ = TrackerStep(std::move(tracks_), index, detections, config_.use_color ? &cloud : nullptr, config_.tracker);
    detections_[index] = std::move(detections);
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("frame {}: {}", index, e.what()));
  }
}

PipelineResult RunAutoannotation(const FrameSource& source, const Rig& rig, const PipelineConfig& config) {
  std::vector<int> ids = source.camera_ids();
  for (int id : ids) {
    if (FindCamera(rig, id) == nullptr) {
      throw Error(ErrorCode::kUnknownCamera, fmt::format("stream camera {} is not in the calibration", id));
    }
  }
  Rig used;
  for (int id : ids) used.push_back(*FindCamera(rig, id));
  AutoAnnotator annotator(used, config);
  const int frames = source.num_frames();
  for (int f = 0; f < frames; ++f) {
    const auto batch = source.Frames(f);
    if (batch.size() != ids.size()) {
      throw Error(ErrorCode::kStreamLengthMismatch, fmt::format("frame {} has {} of {} streams", f, batch.size(), ids.size()));
    }
    annotator.Step(batch);
    if ((f + 1) % 100 == 0) spdlog::debug("processed {} / {} frames", f + 1, frames);
  }
  PipelineResult result;
  result.tracks = annotator.tracks();
  result.detections = annotator.detections();
  result.labels = GenerateLabelRecords(result.tracks, used);
  const Json cfg = config.ToJson();
  const VoxelGridSpec& g = annotator.grid();
  result.manifest = {{"version", kVersion},
                     {"config", cfg},
                     {"config_digest", Sha256Hex(cfg.dump())},
                     {"seed", config.seed},
                     {"frames", frames},
                     {"camera_ids", ids},
                     {"grid", {{"origin_mm", {g.origin.x(), g.origin.y(), g.origin.z()}},
                               {"nx", g.nx}, {"ny", g.ny}, {"nz", g.nz}, {"cell_mm", g.cell_mm}}},
                     {"tracks_digest", Digest(result.tracks)}};
  return result;
}

void WritePipelineOutputs(const fs::path& dir, const PipelineResult& result, const Rig& rig,
                          const PipelineConfig& config) {
  fs::create_directories(dir);
  Json manifest = result.manifest;
  Json files = Json::object();
  auto emit = [&](const std::string& name, const std::string& text) {
    io::WriteTextFile(dir / name, text);
    files[name] = Sha256Hex(text);
  };
  if (config.emit_tracks) {
    emit("tracks.jsonl", io::TracksToJsonLines(result.tracks));
    std::string det;
    for (const auto& [frame, list] : result.detections) {
      for (const auto& d : list) {
        det += Json{{"frame", frame}, {"x_mm", d.world_xy.x()}, {"y_mm", d.world_xy.y()}, {"score", d.score}}.dump() + "\n";
      }
    }
    emit("detections.jsonl", det);
  }
  if (config.emit_labels) {
    std::set<int> ids;
    for (const auto& c : rig) {
      if (!manifest.contains("camera_ids") ||
          std::count(manifest["camera_ids"].begin(), manifest["camera_ids"].end(), c.id)) {
        ids.insert(c.id);
      }
    }
    for (int id : ids) emit(fmt::format("labels/cam{}.csv", id), io::LabelsToCsv(result.labels, id));
  }
  manifest["outputs"] = files;
  io::WriteJsonFile(dir / "manifest.json", manifest);
}

PipelineResult RunAutoannotation(const PipelineConfig& config) {
  if (config.depth_dir.empty() || config.calib_path.empty()) {
    throw Error(ErrorCode::kConfig, "depth_dir and calib are required");
  }
  if (!fs::exists(config.depth_dir)) throw Error(ErrorCode::kConfig, "depth_dir does not exist: " + config.depth_dir.string());
  if (!fs::exists(config.calib_path)) throw Error(ErrorCode::kConfig, "calib does not exist: " + config.calib_path.string());
  const Rig rig = io::ReadRig(config.calib_path);
  DiskFrameSource source(config.depth_dir);
  PipelineResult result = RunAutoannotation(source, rig, config);
  if (!config.output_dir.empty()) WritePipelineOutputs(config.output_dir, result, rig, config);
  return result;
}

}  // namespace autolabel
