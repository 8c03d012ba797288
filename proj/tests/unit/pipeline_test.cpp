#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "autolabel/io.hpp"
#include "autolabel/metrics.hpp"
#include "autolabel/pipeline.hpp"
#include "test_support.hpp"

namespace autolabel {
namespace {

using testing::TempDir;

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class PipelineFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    scene_ = new Scene(GenerateScene(DeskSceneSpec(5, 6.0, 0)));
    source_ = new SceneFrameSource(*scene_);
    result_ = new PipelineResult(RunAutoannotation(*source_, scene_->spec.cameras, PipelineConfig{}));
  }
  static void TearDownTestSuite() {
    delete result_;
    delete source_;
    delete scene_;
  }
  static Scene* scene_;
  static SceneFrameSource* source_;
  static PipelineResult* result_;
};
Scene* PipelineFixture::scene_ = nullptr;
SceneFrameSource* PipelineFixture::source_ = nullptr;
PipelineResult* PipelineFixture::result_ = nullptr;

TEST_F(PipelineFixture, CleanSequenceIsPerfect) {
  const auto r = Evaluate(ToFramePoints(scene_->ground_truth), ToFramePoints(result_->tracks));
  EXPECT_DOUBLE_EQ(r.idf1, 100.0);
  EXPECT_GE(r.mota, 99.9);
  EXPECT_EQ(r.ids, 0);
  EXPECT_EQ(static_cast<int>(result_->detections.size()), scene_->num_frames());
}

TEST_F(PipelineFixture, LabelsMatchRecordGenerator) {
  const auto expected = GenerateLabelRecords(result_->tracks, scene_->spec.cameras);
  ASSERT_EQ(result_->labels.size(), expected.size());
  for (const auto& cam : scene_->spec.cameras) {
    EXPECT_EQ(io::LabelsToCsv(result_->labels, cam.id), io::LabelsToCsv(expected, cam.id));
  }
}

TEST_F(PipelineFixture, StreamingMatchesBatch) {
  AutoAnnotator annotator(scene_->spec.cameras, PipelineConfig{});
  for (int f = 0; f < source_->num_frames(); ++f) {
    annotator.Step(source_->Frames(f));
    // Nothing from the future leaks into the state.
    for (const auto& [id, t] : annotator.tracks().tracklets) EXPECT_LE(t.last_frame(), f);
  }
  EXPECT_TRUE(annotator.tracks() == result_->tracks);
  EXPECT_EQ(Digest(annotator.tracks()), result_->manifest["tracks_digest"]);
}

TEST_F(PipelineFixture, ManifestContents) {
  const auto& m = result_->manifest;
  EXPECT_EQ(m["version"], kVersion);
  EXPECT_EQ(m["frames"], scene_->num_frames());
  EXPECT_EQ(m["config_digest"], Sha256Hex(PipelineConfig{}.ToJson().dump()));
  EXPECT_TRUE(m.contains("seed"));
}

TEST_F(PipelineFixture, RerunIsByteIdentical) {
  TempDir a, b;
  WritePipelineOutputs(a.path(), *result_, scene_->spec.cameras, PipelineConfig{});
  const auto again = RunAutoannotation(*source_, scene_->spec.cameras, PipelineConfig{});
  WritePipelineOutputs(b.path(), again, scene_->spec.cameras, PipelineConfig{});
  for (const char* name : {"tracks.jsonl", "detections.jsonl", "manifest.json", "labels/cam1.csv", "labels/cam4.csv"}) {
    ASSERT_TRUE(std::filesystem::exists(a / name)) << name;
    EXPECT_EQ(Slurp(a / name), Slurp(b / name)) << name;
  }
}

TEST(Pipeline, ZeroLengthStreams) {
  SceneSpec spec = DeskSceneSpec(2, 0.0, 0);
  const Scene scene = GenerateScene(spec);
  const SceneFrameSource source(scene);
  const auto result = RunAutoannotation(source, spec.cameras, PipelineConfig{});
  EXPECT_TRUE(result.tracks.tracklets.empty());
  EXPECT_TRUE(result.labels.empty());
  EXPECT_EQ(result.manifest["frames"], 0);
  TempDir dir;
  WritePipelineOutputs(dir.path(), result, spec.cameras, PipelineConfig{});
  EXPECT_EQ(Slurp(dir / "tracks.jsonl"), "");
  EXPECT_NO_THROW(io::ReadJsonFile(dir / "manifest.json"));
}

TEST(Pipeline, DiskRoundTripMatchesInMemory) {
  const Scene scene = GenerateScene(DeskSceneSpec(3, 1.0, 4));
  const SceneFrameSource source(scene);
  TempDir dir;
  WriteSequence(dir / "depth", source, 15.0);
  io::WriteRig(dir / "calib.json", scene.spec.cameras);
  PipelineConfig cfg;
  cfg.depth_dir = dir / "depth";
  cfg.calib_path = dir / "calib.json";
  cfg.output_dir = dir / "out";
  const auto from_disk = RunAutoannotation(cfg);
  const auto in_memory = RunAutoannotation(source, scene.spec.cameras, cfg);
  EXPECT_TRUE(from_disk.tracks == in_memory.tracks);
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "labels" / "cam2.csv"));
  EXPECT_EQ(io::ReadTracks(dir / "out" / "tracks.jsonl").tracklets.size(),
            ConfirmedTracklets(from_disk.tracks).size());
}

TEST(Pipeline, StreamLengthMismatch) {
  const Scene scene = GenerateScene(DeskSceneSpec(1, 0.4, 0));
  TempDir dir;
  WriteSequence(dir.path(), SceneFrameSource(scene), 15.0);
  std::filesystem::remove(io::FramePath(dir.path(), 3, 5, "pgm"));
  EXPECT_ERROR_CODE(DiskFrameSource{dir.path()}, ErrorCode::kStreamLengthMismatch);
}

TEST(Pipeline, CameraMissingFromCalibration) {
  const Scene scene = GenerateScene(DeskSceneSpec(1, 0.2, 0));
  Rig partial(scene.spec.cameras.begin(), scene.spec.cameras.begin() + 2);
  EXPECT_ERROR_CODE(RunAutoannotation(SceneFrameSource(scene), partial, PipelineConfig{}), ErrorCode::kUnknownCamera);
}

TEST(Pipeline, ModuleErrorsCarryFrameIndex) {
  const Scene scene = GenerateScene(DeskSceneSpec(1, 1.0, 0));
  const SceneFrameSource source(scene);
  AutoAnnotator annotator(scene.spec.cameras, PipelineConfig{});
  auto frames = source.Frames(3);
  frames[1].frame_index = 4;
  try {
    annotator.Step(frames);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMismatchedFrameIndex);
    EXPECT_NE(std::string(e.what()).find("frame 3"), std::string::npos);
  }
}

TEST(Pipeline, ConfigValidation) {
  PipelineConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  const auto round = PipelineConfig::FromJson(cfg.ToJson());
  EXPECT_EQ(round.ToJson(), cfg.ToJson());
  EXPECT_ERROR_CODE(PipelineConfig::FromJson({{"tracker", {{"gait", 1}}}}), ErrorCode::kConfig);
  EXPECT_ERROR_CODE(PipelineConfig::FromJson({{"tracker", {{"gate_mm", -1}}}}), ErrorCode::kConfig);
  EXPECT_ERROR_CODE(PipelineConfig::FromJson({{"detector", {{"window", 4}}}}), ErrorCode::kConfig);
  EXPECT_ERROR_CODE(PipelineConfig::FromJson(nlohmann::json::array()), ErrorCode::kConfig);
  const auto partial = PipelineConfig::FromJson({{"tracker", {{"max_misses", 20}}}});
  EXPECT_EQ(partial.tracker.max_misses, 20);
  EXPECT_EQ(partial.tracker.confirm_hits, 3);
  PipelineConfig missing;
  missing.depth_dir = "/nonexistent/depth";
  missing.calib_path = "/nonexistent/calib.json";
  EXPECT_ERROR_CODE(RunAutoannotation(missing), ErrorCode::kConfig);
}

}  // namespace
}  // namespace autolabel
