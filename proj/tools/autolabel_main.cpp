#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "autolabel/annotate.hpp"
#include "autolabel/calibration.hpp"
#include "autolabel/error.hpp"
#include "autolabel/io.hpp"
#include "autolabel/metrics.hpp"
#include "autolabel/pipeline.hpp"
#include "autolabel/service.hpp"
#include "autolabel/simulate.hpp"
#include "config_file.hpp"

namespace fs = std::filesystem;
using autolabel::Error;
using autolabel::ErrorCode;
using Json = nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string log_level = "info";
};

Json LoadConfig(const Globals& g) {
  if (g.config_path.empty()) return Json::object();
  return autolabel::tools::LoadConfigFile(g.config_path);
}

void RequireFile(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw Error(ErrorCode::kConfig, fmt::format("{} not found: {}", what, p.string()));
}

struct SimulateArgs {
  std::string spec;
  std::string out;
  double noise_mm = 0.0;
  double marker_noise_px = 0.0;
  bool no_rgb = false;
  bool no_ground = false;
};

int RunSimulate(const Globals& g, const SimulateArgs& a) {
  RequireFile(a.spec, "scene spec");
  autolabel::SceneSpec spec = autolabel::io::SceneSpecFromJson(autolabel::io::ReadJsonFile(a.spec));
  if (g.seed) spec.seed = *g.seed;
  const autolabel::Scene scene = autolabel::GenerateScene(spec);
  const fs::path out(a.out);
  autolabel::RenderOptions render;
  render.noise_sigma_mm = a.noise_mm;
  render.color = !a.no_rgb;
  render.ground_plane = !a.no_ground;
  spdlog::info("rendering {} frames from {} cameras", scene.num_frames(), spec.cameras.size());
  autolabel::WriteSequence(out / "depth", autolabel::SceneFrameSource(scene, render), spec.fps);
  autolabel::io::WriteRig(out / "calib.json", spec.cameras);
  autolabel::io::WriteTracks(out / "gt.jsonl", scene.ground_truth);
  autolabel::io::WriteMarkers(out / "markers.json", spec.markers);
  autolabel::io::WriteObservations(out / "observations.jsonl",
                                   autolabel::SynthMarkerObservations(scene, a.marker_noise_px, spec.seed));
  autolabel::io::WriteJsonFile(out / "scene.json", autolabel::io::SceneSpecToJson(spec));
  spdlog::info("wrote {}", out.string());
  return kExitOk;
}

struct CalibrateArgs {
  std::string observations;
  std::string intrinsics;
  std::string markers;
  std::optional<int> anchor;
  std::string out;
  double marker_side_mm = autolabel::kDefaultMarkerSideMm;
  std::optional<double> huber_px;
};

int RunCalibrate(const CalibrateArgs& a) {
  RequireFile(a.observations, "observations");
  RequireFile(a.intrinsics, "intrinsics");
  autolabel::CalibrationGraph graph;
  graph.cameras = autolabel::io::ReadIntrinsics(a.intrinsics);
  graph.observations = autolabel::io::ReadObservations(a.observations);
  for (const auto& o : graph.observations) graph.marker_side_mm.emplace(o.marker_id, a.marker_side_mm);
  if (!a.markers.empty()) {
    RequireFile(a.markers, "markers");
    for (const auto& m : autolabel::io::ReadMarkers(a.markers)) graph.marker_side_mm[m.id] = m.side_mm;
  }
  if (graph.marker_side_mm.empty()) throw Error(ErrorCode::kData, "no marker observations");
  const int anchor = a.anchor.value_or(graph.marker_side_mm.begin()->first);
  graph.Validate();
  autolabel::SolverOptions options;
  options.huber_px = a.huber_px;
  const auto init = autolabel::InitializePoses(graph, anchor);
  const auto result = autolabel::SolveExtrinsics(graph, init, options);
  const Json out = autolabel::io::CalibrationToJson(result, graph);
  autolabel::io::WriteJsonFile(a.out, out);
  spdlog::info("calibrated {} cameras, rms {:.4f} px after {} iterations", result.poses.size(),
               out["rms_px"].get<double>(), result.iterations);
  return kExitOk;
}

struct TrackArgs {
  std::string data;
  std::string calib;
  std::string out;
  bool no_color = false;
};

int RunTrack(const Globals& g, const TrackArgs& a) {
  autolabel::PipelineConfig config = autolabel::PipelineConfig::FromJson(LoadConfig(g));
  if (!a.data.empty()) config.depth_dir = a.data;
  if (!a.calib.empty()) config.calib_path = a.calib;
  if (!a.out.empty()) config.output_dir = a.out;
  if (a.no_color) config.use_color = false;
  if (g.seed) config.seed = *g.seed;
  if (config.output_dir.empty()) throw Error(ErrorCode::kConfig, "an output directory is required");
  const auto result = autolabel::RunAutoannotation(config);
  spdlog::info("{} tracklets ({} confirmed), {} label records", result.tracks.tracklets.size(),
               autolabel::ConfirmedTracklets(result.tracks).size(), result.labels.size());
  return kExitOk;
}

struct EvaluateArgs {
  std::string gt;
  std::string pred;
  double threshold_mm = autolabel::kDefaultMatchRadiusMm;
  std::string out;
  std::string name = "sequence";
};

int RunEvaluate(const EvaluateArgs& a) {
  RequireFile(a.gt, "ground truth");
  RequireFile(a.pred, "predictions");
  const auto gt = autolabel::ToFramePoints(autolabel::io::ReadTracks(a.gt));
  const auto pred = autolabel::ToFramePoints(autolabel::io::ReadTracks(a.pred));
  const auto report = autolabel::Evaluate(gt, pred, a.threshold_mm);
  if (!a.out.empty()) autolabel::io::WriteJsonFile(a.out, autolabel::io::ReportToJson(report));
  std::cout << autolabel::io::FormatReportTable({{a.name, report}});
  return kExitOk;
}

struct ApplyEditsArgs {
  std::string tracks;
  std::string edits;
  std::string out;
};

int RunApplyEdits(const ApplyEditsArgs& a) {
  RequireFile(a.tracks, "tracks");
  RequireFile(a.edits, "edits");
  const auto base = autolabel::io::ReadTracks(a.tracks);
  const auto log = autolabel::io::ReadEditLog(a.edits);
  const auto fixed = autolabel::ReplayEditLog(base, log);
  autolabel::io::WriteTracks(a.out, fixed);
  spdlog::info("applied {} edits; digest {}", log.ops.size(), autolabel::Digest(fixed));
  return kExitOk;
}

struct ServeArgs {
  std::string data;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
};

autolabel::AnnotationService* g_service = nullptr;

int RunServe(const ServeArgs& a) {
  std::optional<fs::path> static_dir;
  if (!a.static_dir.empty()) static_dir = a.static_dir;
  autolabel::AnnotationService service(a.data, static_dir);
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->Stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_service) g_service->Stop();
  });
  spdlog::info("serving {} sequences from {} on http://{}:{}", service.Sequences().size(), a.data, a.host, a.port);
  const bool ok = service.Listen(a.host, a.port);
  g_service = nullptr;
  if (!ok) throw Error(ErrorCode::kConfig, fmt::format("cannot listen on {}:{}", a.host, a.port));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-camera RGBD people tracking and auto-annotation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", autolabel::kVersion);
  Globals g;
  app.add_option("--config", g.config_path, "Pipeline config file (.json or TOML)");
  app.add_option("--seed", g.seed, "Override the random seed");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Render a synthetic scene with ground truth");
  simulate->add_option("--spec", sim.spec, "Scene spec JSON")->required();
  simulate->add_option("--out", sim.out, "Output directory")->required();
  simulate->add_option("--noise-mm", sim.noise_mm, "Depth noise sigma");
  simulate->add_option("--marker-noise-px", sim.marker_noise_px, "Marker corner noise sigma");
  simulate->add_flag("--no-rgb", sim.no_rgb, "Skip color images");
  simulate->add_flag("--no-ground", sim.no_ground, "Do not render the floor");

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Solve camera extrinsics from marker observations");
  calibrate->add_option("--observations", cal.observations, "Observations JSONL")->required();
  calibrate->add_option("--intrinsics", cal.intrinsics, "Camera intrinsics JSON")->required();
  calibrate->add_option("--markers", cal.markers, "markers.json with per-marker sides");
  calibrate->add_option("--anchor", cal.anchor, "Marker defining the world frame (default: lowest id)");
  calibrate->add_option("--marker-side-mm", cal.marker_side_mm, "Marker side when markers.json is absent");
  calibrate->add_option("--huber-px", cal.huber_px, "Robust loss threshold");
  calibrate->add_option("--out", cal.out, "Output calib.json")->required();

  TrackArgs trk;
  auto* track = app.add_subcommand("track", "Run auto-annotation over a depth sequence");
  track->add_option("--data", trk.data, "Depth sequence directory");
  track->add_option("--calib", trk.calib, "calib.json");
  track->add_option("--out", trk.out, "Output directory");
  track->add_flag("--no-color", trk.no_color, "Ignore RGB appearance");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "CLEAR-MOT and IDF1 on the ground plane");
  evaluate->add_option("--gt", ev.gt, "Ground truth tracks JSONL")->required();
  evaluate->add_option("--pred", ev.pred, "Predicted tracks JSONL")->required();
  evaluate->add_option("--threshold-mm", ev.threshold_mm, "Match radius")->check(CLI::PositiveNumber);
  evaluate->add_option("--out", ev.out, "Report JSON");
  evaluate->add_option("--name", ev.name, "Row label in the printed table");

  ApplyEditsArgs ae;
  auto* apply = app.add_subcommand("apply-edits", "Replay an edit log over a track file");
  apply->add_option("--tracks", ae.tracks, "Tracks JSONL")->required();
  apply->add_option("--edits", ae.edits, "Edit log JSONL")->required();
  apply->add_option("--out", ae.out, "Corrected tracks JSONL")->required();

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "HTTP annotation service");
  serve->add_option("--data", sv.data, "Directory of sequences")->required();
  serve->add_option("--port", sv.port, "Port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", sv.host, "Bind address");
  serve->add_option("--static", sv.static_dir, "Directory served at / (review UI bundle)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  try {
    if (*simulate) return RunSimulate(g, sim);
    if (*calibrate) return RunCalibrate(cal);
    if (*track) return RunTrack(g, trk);
    if (*evaluate) return RunEvaluate(ev);
    if (*apply) return RunApplyEdits(ae);
    if (*serve) return RunServe(sv);
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return e.code() == ErrorCode::kConfig ? kExitConfig : kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    spdlog::error("{}", e.what());
    return kExitData;
  }
  return kExitOk;
}
