#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "autolabel/fusion.hpp"
#include "autolabel/io.hpp"
#include "autolabel/track.hpp"

namespace autolabel {

// Top-down review image: heightmap in gray with a colored ring per tracklet
// present in `frame`. Without a heightmap the canvas spans the tracks.
io::RgbImage RenderTopDown(const TopDownMap* heightmap, const TrackSet& tracks, int frame,
                           double ring_radius_mm = 200.0);

// HTTP annotation service over a data directory. Every subdirectory holding a
// tracks.jsonl is a sequence; its edit log lives beside it in editlog.jsonl.
// Optional per-sequence inputs: gt.jsonl (or any ?gt= file), calib.json and
// a depth/ stream for heightmap rendering.
//
//   GET  /sequences
//   GET  /sequences/{s}/frames/{n}/topdown      image/png
//   GET  /sequences/{s}/tracks?from=&to=
//   POST /sequences/{s}/edits                   EditOp JSON; optional
//                                               "base_digest" -> 409 on mismatch
//   GET  /sequences/{s}/metrics?gt=
//   GET  /sequences/{s}/editlog
class AnnotationService {
 public:
  explicit AnnotationService(std::filesystem::path data_dir,
                             std::optional<std::filesystem::path> static_dir = std::nullopt);
  ~AnnotationService();
  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  std::vector<std::string> Sequences() const;

  // Blocking. Returns false when the address cannot be bound.
  bool Listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it; serve with ListenAfterBind.
  int BindToAnyPort(const std::string& host);
  bool ListenAfterBind();
  void Stop();
  bool IsRunning() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace autolabel
