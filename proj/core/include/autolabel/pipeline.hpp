#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "autolabel/detect.hpp"
#include "autolabel/fusion.hpp"
#include "autolabel/project.hpp"
#include "autolabel/simulate.hpp"
#include "autolabel/track.hpp"

namespace autolabel {

inline constexpr const char* kVersion = "0.3.0";

// Synchronized multi-camera depth streams, indexed by frame.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual int num_frames() const = 0;
  virtual std::vector<int> camera_ids() const = 0;
  // One frame per camera, in camera_ids() order.
  virtual std::vector<DepthFrame> Frames(int index) const = 0;
};

// Renders a simulated scene on demand.
class SceneFrameSource : public FrameSource {
 public:
  SceneFrameSource(const Scene& scene, const RenderOptions& options = {});
  int num_frames() const override { return scene_.num_frames(); }
  std::vector<int> camera_ids() const override;
  std::vector<DepthFrame> Frames(int index) const override;

 private:
  const Scene& scene_;
  RenderOptions options_;
};

// Reads <dir>/meta.json and <dir>/cam<ID>/<frame:06>.pgm (plus .png color
// when meta says so). Throws StreamLengthMismatch when cameras disagree on
// the number of frames.
class DiskFrameSource : public FrameSource {
 public:
  explicit DiskFrameSource(const std::filesystem::path& dir);
  int num_frames() const override { return num_frames_; }
  std::vector<int> camera_ids() const override { return camera_ids_; }
  std::vector<DepthFrame> Frames(int index) const override;
  double fps() const { return fps_; }

 private:
  std::filesystem::path dir_;
  std::vector<int> camera_ids_;
  int num_frames_ = 0;
  double fps_ = 15.0;
  bool has_rgb_ = false;
};

// Writes every frame of `source` in the DiskFrameSource layout.
void WriteSequence(const std::filesystem::path& dir, const FrameSource& source, double fps);

struct PipelineConfig {
  std::filesystem::path depth_dir;
  std::filesystem::path calib_path;
  std::filesystem::path output_dir;
  DetectorParams detector;
  HeightBandClassifier::Params classifier;
  TrackerParams tracker;
  std::optional<VoxelGridSpec> grid;  // derived from the rig when unset
  FusionOptions fusion;
  bool emit_labels = true;
  bool emit_tracks = true;
  bool use_color = true;
  std::uint64_t seed = 0;

  // Throws Config on out-of-range parameters.
  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static PipelineConfig FromJson(const nlohmann::json& value);
};

// Streaming form of the per-frame loop; frames must arrive in order.
class AutoAnnotator {
 public:
  AutoAnnotator(Rig rig, PipelineConfig config);

  void Step(std::span<const DepthFrame> frames);

  const TrackSet& tracks() const { return tracks_; }
  const std::map<int, std::vector<Detection>>& detections() const { return detections_; }
  const TopDownMap& last_heightmap() const { return heightmap_; }
  const VoxelGridSpec& grid() const { return grid_; }
  const Rig& rig() const { return rig_; }

 private:
  Rig rig_;
  PipelineConfig config_;
  VoxelGridSpec grid_;
  HeightBandClassifier classifier_;
  TrackSet tracks_;
  std::map<int, std::vector<Detection>> detections_;
  TopDownMap heightmap_;
};

struct PipelineResult {
  TrackSet tracks;
  std::vector<LabelRecord> labels;
  std::map<int, std::vector<Detection>> detections;
  nlohmann::json manifest;
};

PipelineResult RunAutoannotation(const FrameSource& source, const Rig& rig, const PipelineConfig& config);

// tracks.jsonl, detections.jsonl, labels/cam<ID>.csv and manifest.json.
// The manifest records file digests but no timestamps.
void WritePipelineOutputs(const std::filesystem::path& dir, const PipelineResult& result, const Rig& rig,
                          const PipelineConfig& config);

// Disk-to-disk run driven entirely by the config paths.
PipelineResult RunAutoannotation(const PipelineConfig& config);

}  // namespace autolabel
