#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "tricam/dataset.hpp"
#include "tricam/error.hpp"
#include "tricam/hash.hpp"
#include "tricam/synthgen.hpp"

using namespace tricam;
using namespace tricam::synth;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tricam_test_" + name);
  fs::remove_all(p);
  return p;
}

EyeRenderParams clean() {
  EyeRenderParams p;
  p.noise_sigma = 0.0;
  return p;
}

}  // namespace

TEST(Render, CenteredIris) {
  const EyeImage img = render_eye(clean());
  int best_x = 0, best_y = 0;
  double best = 2.0;
  for (int y = 0; y < kEyeImageHeight; ++y)
    for (int x = 0; x < kEyeImageWidth; ++x)
      if (img.at(x, y) < best) {
        best = img.at(x, y);
        best_x = x;
        best_y = y;
      }
  EXPECT_NEAR(best_x, 20, 1);
  EXPECT_NEAR(best_y, 10, 1);
}

TEST(Render, Deterministic) {
  EyeRenderParams p;
  p.yaw = 0.2;
  p.noise_seed = 99;
  p.artifact = {ArtifactKind::kReflection, 0.7};
  EXPECT_EQ(render_eye(p).pixels, render_eye(p).pixels);
}

TEST(Render, ClosedIsDarkerThanOpen) {
  EyeRenderParams open;
  open.noise_seed = 5;
  EyeRenderParams closed = open;
  closed.artifact = {ArtifactKind::kClosed, 1.0};
  EXPECT_LT(render_eye(closed).mean(), render_eye(open).mean());
}

TEST(Render, IntensitiesInUnitRange) {
  EyeRenderParams p;
  p.noise_sigma = 0.3;
  p.noise_seed = 4;
  for (double v : render_eye(p).pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Render, IrisMovesMonotonicallyWithYaw) {
  int last = -1;
  // Grid spaced so each step moves the iris by more than a pixel.
  for (int i = -6; i <= 6; ++i) {
    EyeRenderParams p = clean();
    p.yaw = std::asin(0.15 * i);
    const int col = darkest_column(render_eye(p));
    if (last >= 0) EXPECT_GT(col, last) << "yaw " << p.yaw;
    last = col;
  }
}

TEST(Render, RejectsBadParams) {
  EyeRenderParams p;
  p.openness = 1.5;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.yaw = 2.0;
  EXPECT_THROW(p.validate(), Error);
}

TEST(Sample, CenteredPoseAllDetected) {
  const SceneConfig cfg = default_scene();
  ScenePose pose;
  pose.head_center = {cfg.rig.screen.width_cm / 2, 12.0, 50.0};
  pose.target_px = {960, 540};
  Rng rng(1);
  const Sample s = synth_sample_at(cfg, pose, rng);
  for (const auto& ch : s.channels) EXPECT_TRUE(ch.view.detected);
  // Middle camera: both eyes land within a pixel of the oracle projection.
  for (int eye = 0; eye < kEyes; ++eye) {
    const auto want = geometry::project_eye(cfg.rig.cameras[1], s.eye_centers[eye]);
    EXPECT_NEAR(s.channels[channel_index(eye, 1)].view.u, want.u, 1.0);
  }
}

TEST(Sample, EncodingRuleForUndetected) {
  SceneConfig cfg = default_scene();
  ScenePose pose;
  // 30 degrees off to the side at 50 cm, close to the screen edge.
  pose.head_center = {cfg.rig.screen.width_cm / 2 + 50 * std::tan(M_PI / 6) + 20, 12.0, 50.0};
  pose.target_px = {960, 540};
  Rng rng(2);
  const Sample s = synth_sample_at(cfg, pose, rng);
  int undetected = 0;
  for (const auto& ch : s.channels) {
    EXPECT_EQ(ch.view.detected, !ch.image.all_black());
    if (!ch.view.detected) {
      ++undetected;
      EXPECT_EQ(ch.view.u, -1.0);
      EXPECT_EQ(ch.view.v, -1.0);
    }
  }
  EXPECT_GT(undetected, 0);
}

TEST(Sample, GenerationSelfConsistency) {
  const SceneConfig cfg = default_scene();
  const auto samples = generate_samples(cfg, 200, 17);
  for (const auto& s : samples) {
    EXPECT_GE(s.target_px.x, 0.0);
    EXPECT_LT(s.target_px.x, cfg.rig.screen.width_px);
    for (const auto& c : s.eye_centers) {
      const auto dir = geometry::gaze_from_target(c, s.target_px, cfg.rig.screen);
      const auto back = geometry::gaze_intersect({c, dir}, cfg.rig.screen);
      EXPECT_NEAR(back.x, s.target_px.x, 1e-6);
      EXPECT_NEAR(back.y, s.target_px.y, 1e-6);
    }
    for (const auto& ch : s.channels) {
      EXPECT_EQ(ch.view.detected, !ch.image.all_black());
      if (!ch.view.detected) EXPECT_EQ(ch.view.u, -1.0);
    }
  }
}

TEST(Sample, FixedSeedIsReproducible) {
  const SceneConfig cfg = default_scene();
  const auto a = generate_samples(cfg, 8, 3);
  const auto b = generate_samples(cfg, 8, 3);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(encode_record(a[i]), encode_record(b[i]));
}

TEST(Scene, JsonRoundTrip) {
  SceneConfig cfg = default_scene();
  cfg.artifacts.blink = 0.2;
  cfg.ipd_cm = 6.0;
  EXPECT_EQ(scene_to_json(scene_from_json(scene_to_json(cfg))), scene_to_json(cfg));
}

TEST(Scene, RejectsBadProbabilities) {
  SceneConfig cfg = default_scene();
  cfg.artifacts.blink = 0.9;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = default_scene();
  cfg.distance_cm = {-1, 5};
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Dataset, RecordRoundTrip) {
  const auto s = generate_samples(default_scene(), 1, 5).front();
  const auto bytes = encode_record(s);
  ASSERT_EQ(bytes.size(), kRecordBytes);
  EXPECT_EQ(encode_record(decode_record(bytes.data())), bytes);
}

TEST(Dataset, SameSeedSameFiles) {
  const fs::path a = temp_dir("ds_a"), b = temp_dir("ds_b");
  gen_dataset(default_scene(), 10, 7, a);
  gen_dataset(default_scene(), 10, 7, b);
  EXPECT_EQ(hash_file(a / "samples.bin"), hash_file(b / "samples.bin"));
  EXPECT_EQ(hash_file(a / "manifest.json"), hash_file(b / "manifest.json"));
  const Dataset back = load_dataset(a);
  EXPECT_EQ(back.samples.size(), 10u);
  EXPECT_EQ(back.seed, 7u);
}

TEST(Dataset, EmptyIsAnError) {
  try {
    gen_dataset(default_scene(), 0, 1, temp_dir("ds_empty"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kEmptyDataset);
  }
}

TEST(Dataset, CorruptionDetected) {
  const fs::path d = temp_dir("ds_bad");
  gen_dataset(default_scene(), 3, 1, d);
  {
    std::fstream f(d / "samples.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);
    f.put('\x7f');
  }
  EXPECT_THROW(load_dataset(d), Error);
  fs::resize_file(d / "samples.bin", 50);
  EXPECT_THROW(load_dataset(d), Error);
}
