// End-to-end runs of the tricam binary.

#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "tricam/dataset.hpp"
#include "tricam/harness.hpp"
#include "tricam/hash.hpp"
#include "tricam/network.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tricam;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "tricam_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Result run(const std::string& args) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() / "tricam_cli_test";
  fs::create_directories(dir);
  const std::string tag = std::to_string(::getpid()) + "_" + std::to_string(counter++);
  const fs::path out = dir / ("stdout" + tag);
  const fs::path err = dir / ("stderr" + tag);
  const std::string cmd = std::string(TRICAM_BIN) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// A run config small enough for a test: tiny network, one epoch.
fs::path tiny_run_config(const fs::path& dir) {
  harness::TrainRunConfig cfg;
  cfg.epochs = 1;
  cfg.batch = 16;
  cfg.network = nn::tiny_config(1);
  const fs::path p = dir / "run.json";
  write(p, harness::run_config_to_json(cfg).dump());
  return p;
}

}  // namespace

TEST(Cli, GenIsDeterministic) {
  const fs::path d = scratch("gen");
  ASSERT_EQ(run("gen --n 12 --seed 4 --out " + (d / "a").string()).code, 0);
  ASSERT_EQ(run("gen --n 12 --seed 4 --out " + (d / "b").string()).code, 0);
  EXPECT_EQ(slurp(d / "a" / "samples.bin"), slurp(d / "b" / "samples.bin"));
  const json man = json::parse(slurp(d / "a" / "run_manifest.json"));
  EXPECT_EQ(man["subcommand"], "gen");
  EXPECT_EQ(man["seed"], 4);
  EXPECT_EQ(man["outputs"]["samples"]["hash"], hash_file(d / "a" / "samples.bin"));
  ASSERT_EQ(run("gen --n 12 --seed 5 --out " + (d / "c").string()).code, 0);
  EXPECT_NE(slurp(d / "a" / "samples.bin"), slurp(d / "c" / "samples.bin"));
}

TEST(Cli, GenErrors) {
  const fs::path d = scratch("gen_err");
  const Result missing = run("gen --n 5 --config " + (d / "nope.json").string() + " --out " + (d / "x").string());
  EXPECT_NE(missing.code, 0);
  EXPECT_NE(missing.err.find("nope.json"), std::string::npos) << missing.err;
  write(d / "bad.json", "{\"distance_cm\": [60, 45]}");
  EXPECT_NE(run("gen --n 5 --config " + (d / "bad.json").string() + " --out " + (d / "y").string()).code, 0);
  EXPECT_NE(run("gen --n 0 --out " + (d / "z").string()).code, 0);
  EXPECT_NE(run("gen --out " + (d / "z").string()).code, 0);
  EXPECT_NE(run("").code, 0);
}

TEST(Cli, TrainEvalRoundTrip) {
  const fs::path d = scratch("train");
  ASSERT_EQ(run("gen --n 60 --seed 1 --out " + (d / "data").string()).code, 0);
  const std::string cfg = tiny_run_config(d).string();
  const std::string base = "train --data " + (d / "data").string() + " --config " + cfg;
  const Result t1 = run(base + " --out " + (d / "m1").string());
  ASSERT_EQ(t1.code, 0) << t1.err;
  ASSERT_EQ(run(base + " --out " + (d / "m2").string()).code, 0);
  EXPECT_EQ(hash_file(d / "m1" / "model.ckpt"), hash_file(d / "m2" / "model.ckpt"));

  const nn::Checkpoint ck = nn::load_checkpoint(d / "m1" / "model.ckpt");
  EXPECT_EQ(ck.model.config, nn::tiny_config(1));
  EXPECT_EQ(ck.extra["dataset_hash"], hash_file(d / "data" / "samples.bin"));
  EXPECT_EQ(ck.extra["best_epoch"], 1);
  std::istringstream curves(slurp(d / "m1" / "curves.tsv"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(curves, line)) ++lines;
  EXPECT_EQ(lines, 3u);  // header, untrained, epoch 1

  const Result e = run("eval --model " + (d / "m1" / "model.ckpt").string() + " --data " +
                       (d / "data").string() + " --heatmap-bin 120 --angles 0,10 --n 8 --out " +
                       (d / "ev").string());
  ASSERT_EQ(e.code, 0) << e.err;
  EXPECT_TRUE(fs::exists(d / "ev" / "eval.tsv"));
  EXPECT_TRUE(fs::exists(d / "ev" / "angles.tsv"));
  EXPECT_NE(e.err.find("16x9"), std::string::npos) << e.err;
  const std::string pgm = slurp(d / "ev" / "heatmap.pgm");
  EXPECT_EQ(pgm.rfind("P5", 0), 0u);
  EXPECT_NE(pgm.find("16 9"), std::string::npos);
  const json man = json::parse(slurp(d / "ev" / "run_manifest.json"));
  EXPECT_EQ(man["inputs"]["model"]["hash"], hash_file(d / "m1" / "model.ckpt"));
}

TEST(Cli, TrainRejectsCorruptDataset) {
  const fs::path d = scratch("corrupt");
  ASSERT_EQ(run("gen --n 20 --seed 1 --out " + (d / "data").string()).code, 0);
  {
    std::fstream f(d / "data" / "samples.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(200);
    f.put('\x55');
  }
  const Result r = run("train --data " + (d / "data").string() + " --config " +
                       tiny_run_config(d).string() + " --out " + (d / "m").string());
  EXPECT_NE(r.code, 0);
  EXPECT_FALSE(fs::exists(d / "m" / "model.ckpt"));
}

TEST(Cli, EvalRejectsMismatchedRig) {
  const fs::path d = scratch("mismatch");
  ASSERT_EQ(run("gen --n 30 --seed 1 --out " + (d / "data").string()).code, 0);
  synth::SceneConfig moved = synth::default_scene();
  moved.rig.cameras[1].position.x() += 2.0;
  write(d / "moved.json", synth::scene_to_json(moved).dump());
  ASSERT_EQ(run("gen --n 30 --seed 1 --config " + (d / "moved.json").string() + " --out " +
                (d / "other").string()).code, 0);
  ASSERT_EQ(run("train --data " + (d / "data").string() + " --config " + tiny_run_config(d).string() +
                " --out " + (d / "m").string()).code, 0);
  const Result r = run("eval --model " + (d / "m" / "model.ckpt").string() + " --data " +
                       (d / "other").string() + " --out " + (d / "ev").string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("rig"), std::string::npos) << r.err;
}

TEST(Cli, ClickfilterFixture) {
  const fs::path d = scratch("click");
  const Result r = run("clickfilter --log " TRICAM_FIXTURE_DIR "/click_fixture.log --out " + d.string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("stages 5 4 3 3, 25 samples"), std::string::npos) << r.out;
  const json rep = json::parse(slurp(d / "report.json"));
  EXPECT_EQ(rep["stage_counts"], (json{5, 4, 3, 3}));
  std::istringstream samples(slurp(d / "samples.tsv"));
  std::string line;
  std::size_t lines = 0;
  while (std::getline(samples, line)) ++lines;
  EXPECT_EQ(lines, 26u);
}

TEST(Cli, ClickfilterEdgeCases) {
  const fs::path d = scratch("click_edge");
  write(d / "empty.log", "# nothing here\n");
  const Result empty = run("clickfilter --log " + (d / "empty.log").string() + " --out " + (d / "e").string());
  EXPECT_EQ(empty.code, 0) << empty.err;
  EXPECT_NE(empty.out.find("stages 0 0 0 0, 0 samples"), std::string::npos) << empty.out;

  write(d / "bad.log", "0 frame\n1.0 press 10\n");
  const Result bad = run("clickfilter --log " + (d / "bad.log").string() + " --out " + (d / "b").string());
  EXPECT_NE(bad.code, 0);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos) << bad.err;

  write(d / "crit.json", "{\"max_duration_s\": -1}");
  EXPECT_NE(run("clickfilter --log " TRICAM_FIXTURE_DIR "/click_fixture.log --criteria " +
                (d / "crit.json").string() + " --out " + (d / "c").string()).code, 0);
}
