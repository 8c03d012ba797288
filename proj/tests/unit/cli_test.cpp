#include <cstdlib>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "autolabel/annotate.hpp"
#include "autolabel/io.hpp"
#include "autolabel/simulate.hpp"
#include "test_support.hpp"

namespace autolabel {
namespace {

using testing::TempDir;

int RunCli(const std::string& args) {
  const std::string cmd = std::string(AUTOLABEL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    io::WriteJsonFile(dir_ / "scene.json", io::SceneSpecToJson(DeskSceneSpec(2, 1.0, 0)));
  }
  std::string P(const std::string& name) const { return (dir_ / name).string(); }
  TempDir dir_;
};

TEST_F(CliTest, SimulateTrackEvaluate) {
  ASSERT_EQ(RunCli("simulate --spec " + P("scene.json") + " --out " + P("sim")), 0);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "sim" / "depth" / "meta.json"));
  EXPECT_TRUE(std::filesystem::exists(dir_ / "sim" / "observations.jsonl"));
  ASSERT_EQ(RunCli("track --data " + P("sim/depth") + " --calib " + P("sim/calib.json") + " --out " + P("run")), 0);
  EXPECT_TRUE(std::filesystem::exists(dir_ / "run" / "manifest.json"));
  ASSERT_EQ(RunCli("evaluate --gt " + P("sim/gt.jsonl") + " --pred " + P("run/tracks.jsonl") + " --out " + P("r.json")), 0);
  EXPECT_GE(io::ReadJsonFile(dir_ / "r.json")["mota"].get<double>(), 90.0);
}

TEST_F(CliTest, CalibrateFromSimulation) {
  io::WriteJsonFile(dir_ / "cal.json", io::SceneSpecToJson(CalibrationSceneSpec(0)));
  ASSERT_EQ(RunCli("simulate --no-rgb --spec " + P("cal.json") + " --out " + P("sim")), 0);
  ASSERT_EQ(RunCli("calibrate --observations " + P("sim/observations.jsonl") + " --intrinsics " + P("sim/calib.json") +
                " --markers " + P("sim/markers.json") + " --out " + P("solved.json")),
            0);
  EXPECT_LT(io::ReadJsonFile(dir_ / "solved.json")["rms_px"].get<double>(), 1e-3);
}

TEST_F(CliTest, ApplyEdits) {
  const Scene scene = GenerateScene(DeskSceneSpec(3, 2.0, 0));
  const Corruption c = CorruptTrackSet(scene.ground_truth, 1);
  io::WriteTracks(dir_ / "bad.jsonl", c.corrupted);
  io::WriteEditLog(dir_ / "fix.jsonl", c.fix);
  ASSERT_EQ(RunCli("apply-edits --tracks " + P("bad.jsonl") + " --edits " + P("fix.jsonl") + " --out " + P("ok.jsonl")), 0);
  EXPECT_EQ(Digest(io::ReadTracks(dir_ / "ok.jsonl")), Digest(scene.ground_truth));
  // Replaying against the wrong base is a data error.
  EXPECT_EQ(RunCli("apply-edits --tracks " + P("ok.jsonl") + " --edits " + P("fix.jsonl") + " --out " + P("x.jsonl")), 3);
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(RunCli("--version"), 0);
  EXPECT_EQ(RunCli(""), 2);
  EXPECT_EQ(RunCli("evaluate --gt only.jsonl"), 2);
  EXPECT_EQ(RunCli("frobnicate"), 2);
  EXPECT_EQ(RunCli("evaluate --gt " + P("missing.jsonl") + " --pred " + P("missing.jsonl")), 2);
  io::WriteTextFile(dir_ / "garbage.jsonl", "{\"frame\": 0, \"id\":\n");
  EXPECT_EQ(RunCli("evaluate --gt " + P("garbage.jsonl") + " --pred " + P("garbage.jsonl")), 3);
  io::WriteTextFile(dir_ / "bad.toml", "[tracker]\nbogus = 1\n");
  EXPECT_EQ(RunCli("--config " + P("bad.toml") + " track --data " + P("d") + " --calib " + P("c") + " --out " + P("o")), 2);
  io::WriteTextFile(dir_ / "good.toml", "[tracker]\nmax_misses = 20\n");
  EXPECT_EQ(RunCli("--config " + P("good.toml") + " track --data " + P("nowhere") + " --calib " + P("c") + " --out " +
                P("o")),
            2);
  EXPECT_EQ(RunCli("--log-level loud evaluate --gt a --pred b"), 2);
}

}  // namespace
}  // namespace autolabel
