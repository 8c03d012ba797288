#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "autolabel/annotate.hpp"
#include "autolabel/calibration.hpp"
#include "autolabel/detect.hpp"
#include "autolabel/metrics.hpp"
#include "autolabel/project.hpp"
#include "autolabel/simulate.hpp"
#include "autolabel/track.hpp"

// File formats. Every parse failure raises Error(kData) naming the file and
// line where one applies.
namespace autolabel::io {

using Json = nlohmann::json;
namespace fs = std::filesystem;

Json ReadJsonFile(const fs::path& path);
void WriteJsonFile(const fs::path& path, const Json& value);
// Non-empty lines of a JSON Lines file, parsed.
std::vector<Json> ReadJsonLines(const fs::path& path);
void WriteTextFile(const fs::path& path, const std::string& text);

// calib.json: {"cameras": [{"id", "intrinsics": {fx, fy, cx, cy, width,
// height}, "pose": {"q": [w, x, y, z], "t_mm": [x, y, z]}}], "ground": {"z": 0}}
Json RigToJson(std::span<const CameraModel> rig);
Rig RigFromJson(const Json& value);
Rig ReadRig(const fs::path& path);
void WriteRig(const fs::path& path, std::span<const CameraModel> rig);
// Same layout with poses optional.
std::map<int, CameraIntrinsics> ReadIntrinsics(const fs::path& path);

// observations.jsonl: {"camera", "marker", "corner", "u", "v"} per line.
std::vector<MarkerObservation> ReadObservations(const fs::path& path);
void WriteObservations(const fs::path& path, std::span<const MarkerObservation> observations);

// markers.json: {"markers": [{"id", "side_mm", "x_mm", "y_mm", "yaw_rad"}]}
std::vector<MarkerSpec> ReadMarkers(const fs::path& path);
void WriteMarkers(const fs::path& path, std::span<const MarkerSpec> markers);

// Calibration output: calib.json layout plus residual statistics.
Json CalibrationToJson(const CalibrationResult& result, const CalibrationGraph& graph);

// tracks.jsonl / gt.jsonl: {"frame", "id", "x_mm", "y_mm", "h_mm", "score"}
// per state, ordered by (frame, id). Loaded tracklets are confirmed.
std::string TracksToJsonLines(const TrackSet& set, bool confirmed_only = true);
TrackSet TracksFromJsonLines(const std::vector<Json>& lines);
TrackSet ReadTracks(const fs::path& path);
void WriteTracks(const fs::path& path, const TrackSet& set, bool confirmed_only = true);

// detections.jsonl: {"frame", "x_mm", "y_mm", "score"}
void WriteDetections(const fs::path& path, const std::map<int, std::vector<Detection>>& by_frame);

// MOT-style CSV: frame,id,bb_left,bb_top,bb_width,bb_height,conf
std::string LabelsToCsv(std::span<const LabelRecord> records, int camera_id);

Json ReportToJson(const MotReport& report);
// Fixed-width table with one row per named report.
std::string FormatReportTable(const std::vector<std::pair<std::string, MotReport>>& rows);

Json EditOpToJson(const EditOp& op);
EditOp EditOpFromJson(const Json& value);
// editlog.jsonl: optional first line {"base_digest": ...}, then one op per line.
EditLog ReadEditLog(const fs::path& path);
void WriteEditLog(const fs::path& path, const EditLog& log);
Json EditLogToJson(const EditLog& log);

Json SceneSpecToJson(const SceneSpec& spec);
SceneSpec SceneSpecFromJson(const Json& value);

// 16-bit binary PGM (P5, big-endian samples).
struct Gray16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;
};
void WritePgm16(const fs::path& path, int width, int height, std::span<const std::uint16_t> pixels);
Gray16 ReadPgm16(const fs::path& path);

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;
};
std::vector<std::uint8_t> EncodePng(const RgbImage& image);
void WritePng(const fs::path& path, const RgbImage& image);
RgbImage ReadPng(const fs::path& path);

// Raw little-endian float32 values plus `<path>.json` with the shape.
void WriteHeatmap(const fs::path& path, const Heatmap& heatmap);
Heatmap ReadHeatmap(const fs::path& path);

// <dir>/cam<ID>/<frame:06>.<ext>
fs::path FramePath(const fs::path& dir, int camera_id, int frame, const std::string& ext);

}  // namespace autolabel::io
