#include <cmath>
#include <fstream>
#include <numbers>

#include "tricam/error.hpp"
#include "tricam/synthgen.hpp"

namespace tricam::synth {

using geometry::Vec3;
using nlohmann::json;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

QualityArtifact draw_artifact(const ArtifactProbabilities& p, Rng& rng) {
  const double u = uniform01(rng);
  const double intensity = 0.5 + 0.5 * uniform01(rng);
  double edge = p.blink;
  if (u < edge) return {ArtifactKind::kBlink, intensity};
  edge += p.reflection;
  if (u < edge) return {ArtifactKind::kReflection, intensity};
  edge += p.occlusion;
  if (u < edge) return {ArtifactKind::kOcclusion, intensity};
  edge += p.closed;
  if (u < edge) return {ArtifactKind::kClosed, 1.0};
  return {};
}

// Gaze expressed in the frame of the eye-to-camera ray, with that frame's
// horizontal axis aligned to the camera's image rows.
std::pair<double, double> relative_gaze(const geometry::CameraModel& cam, const Vec3& center,
                                        const Vec3& gaze) {
  const Vec3 pc = cam.orientation * (center - cam.position);
  const Vec3 gc = cam.orientation * gaze;
  const Vec3 toward = -pc.normalized();
  const Vec3 ex = (Vec3::UnitX() - Vec3::UnitX().dot(toward) * toward).normalized();
  const Vec3 ey = ex.cross(toward);
  const double f = gc.dot(toward);
  const double x = gc.dot(ex);
  const double y = gc.dot(ey);
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  const double yaw = std::clamp(std::atan2(x, f), -kHalfPi, kHalfPi);
  const double pitch = std::clamp(std::atan2(y, std::hypot(f, x)), -kHalfPi, kHalfPi);
  return {yaw, pitch};
}

void check_range(const Range& r, const char* name) {
  if (!(r.lo <= r.hi) || !std::isfinite(r.lo) || !std::isfinite(r.hi)) {
    throw Error(ErrorKind::kInvalidArgument, std::string("bad range for ") + name);
  }
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& doc, const char* key, Range fallback) {
  if (!doc.contains(key)) return fallback;
  const auto v = doc.at(key).get<std::vector<double>>();
  if (v.size() != 2) throw Error(ErrorKind::kMalformed, std::string(key) + " needs [lo, hi]");
  return {v[0], v[1]};
}

}  // namespace

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double uniform(Rng& rng, Range r) { return r.lo + (r.hi - r.lo) * uniform01(rng); }

double standard_normal(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void SceneConfig::validate() const {
  rig.validate();
  if (rig.cameras.size() != static_cast<std::size_t>(kCameras)) {
    throw Error(ErrorKind::kInvalidArgument, "scene rig must have exactly 3 cameras");
  }
  check_range(distance_cm, "distance_cm");
  check_range(lateral_cm, "lateral_cm");
  check_range(vertical_cm, "vertical_cm");
  check_range(head_turn_deg, "head_turn_deg");
  check_range(openness, "openness");
  if (!(distance_cm.lo > 0.0)) throw Error(ErrorKind::kInvalidArgument, "distance must be > 0");
  if (openness.lo < 0.0 || openness.hi > 1.0) {
    throw Error(ErrorKind::kInvalidArgument, "openness range outside [0, 1]");
  }
  const auto& a = artifacts;
  if (a.blink < 0 || a.reflection < 0 || a.occlusion < 0 || a.closed < 0 || a.total() > 1.0) {
    throw Error(ErrorKind::kInvalidArgument, "artifact probabilities must be >= 0 and sum <= 1");
  }
  if (!(ipd_cm > 0.0) || !(image_noise >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "ipd must be > 0 and noise >= 0");
  }
}

Rig default_rig() {
  Rig rig;
  rig.screen = geometry::reference_screen();
  // 70 degree horizontal field of view on a 1920x1080 sensor.
  const double focal = 960.0 / std::tan(35.0 * kDeg);
  for (int i = 1; i <= kCameras; ++i) {
    geometry::CameraModel cam;
    cam.position = {rig.screen.width_cm * i / 4.0, 0.0, 0.0};
    cam.orientation = geometry::rotation_from_euler(0.0, 10.0 * kDeg, 0.0);
    cam.focal_px = focal;
    cam.u0 = 960.0;
    cam.v0 = 540.0;
    cam.res_w = 1920;
    cam.res_h = 1080;
    rig.cameras.push_back(cam);
  }
  return rig;
}

SceneConfig default_scene() {
  SceneConfig cfg;
  cfg.rig = default_rig();
  return cfg;
}

json scene_to_json(const SceneConfig& cfg) {
  return {{"rig", rig_to_json(cfg.rig)},
          {"distance_cm", range_json(cfg.distance_cm)},
          {"lateral_cm", range_json(cfg.lateral_cm)},
          {"vertical_cm", range_json(cfg.vertical_cm)},
          {"head_turn_deg", range_json(cfg.head_turn_deg)},
          {"openness", range_json(cfg.openness)},
          {"artifacts",
           {{"blink", cfg.artifacts.blink},
            {"reflection", cfg.artifacts.reflection},
            {"occlusion", cfg.artifacts.occlusion},
            {"closed", cfg.artifacts.closed}}},
          {"ipd_cm", cfg.ipd_cm},
          {"image_noise", cfg.image_noise}};
}

SceneConfig scene_from_json(const json& doc) {
  try {
    SceneConfig cfg = default_scene();
    if (doc.contains("rig")) cfg.rig = rig_from_json(doc.at("rig"));
    cfg.distance_cm = range_from(doc, "distance_cm", cfg.distance_cm);
    cfg.lateral_cm = range_from(doc, "lateral_cm", cfg.lateral_cm);
    cfg.vertical_cm = range_from(doc, "vertical_cm", cfg.vertical_cm);
    cfg.head_turn_deg = range_from(doc, "head_turn_deg", cfg.head_turn_deg);
    cfg.openness = range_from(doc, "openness", cfg.openness);
    if (doc.contains("artifacts")) {
      const auto& a = doc.at("artifacts");
      cfg.artifacts.blink = a.value("blink", cfg.artifacts.blink);
      cfg.artifacts.reflection = a.value("reflection", cfg.artifacts.reflection);
      cfg.artifacts.occlusion = a.value("occlusion", cfg.artifacts.occlusion);
      cfg.artifacts.closed = a.value("closed", cfg.artifacts.closed);
    }
    cfg.ipd_cm = doc.value("ipd_cm", cfg.ipd_cm);
    cfg.image_noise = doc.value("image_noise", cfg.image_noise);
    cfg.validate();
    return cfg;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformed, std::string("scene config: ") + e.what());
  }
}

SceneConfig load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open scene config " + path.string());
  try {
    return scene_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kMalformed, path.string() + ": " + e.what());
  }
}

ScenePose draw_pose(const SceneConfig& cfg, Rng& rng) {
  ScenePose pose;
  const auto& screen = cfg.rig.screen;
  pose.head_center = {screen.width_cm / 2.0 + uniform(rng, cfg.lateral_cm),
                      uniform(rng, cfg.vertical_cm), uniform(rng, cfg.distance_cm)};
  pose.head_turn = uniform(rng, cfg.head_turn_deg) * kDeg;
  pose.target_px = {uniform01(rng) * screen.width_px, uniform01(rng) * screen.height_px};
  for (double& o : pose.openness) o = uniform(rng, cfg.openness);
  return pose;
}

std::array<Vec3, kEyes> eye_centers(const SceneConfig& cfg, const ScenePose& pose) {
  // Eye 0 is the user's right eye, which sits toward +x while facing the screen.
  const Vec3 lateral(std::cos(pose.head_turn), 0.0, -std::sin(pose.head_turn));
  const double half = cfg.ipd_cm / 2.0;
  return {pose.head_center + half * lateral, pose.head_center - half * lateral};
}

Sample synth_sample_at(const SceneConfig& cfg, const ScenePose& pose, Rng& rng) {
  Sample s;
  s.target_px = pose.target_px;
  s.eye_centers = eye_centers(cfg, pose);
  for (int eye = 0; eye < kEyes; ++eye) {
    const Vec3& center = s.eye_centers[eye];
    const Vec3 gaze = geometry::gaze_from_target(center, pose.target_px, cfg.rig.screen);
    for (int cam = 0; cam < kCameras; ++cam) {
      Channel& ch = s.channels[channel_index(eye, cam)];
      const auto& camera = cfg.rig.cameras[cam];
      // Draws happen whether or not the eye is visible so that one channel's
      // visibility never shifts another channel's random stream.
      ch.artifact = draw_artifact(cfg.artifacts, rng);
      const std::uint64_t noise_seed = rng();
      ch.view = geometry::project_eye(camera, center);
      if (!ch.view.detected) continue;

      const auto [yaw, pitch] = relative_gaze(camera, center, gaze);
      ch.yaw = yaw;
      ch.pitch = pitch;
      EyeRenderParams params;
      params.yaw = yaw;
      params.pitch = pitch;
      params.openness = pose.openness[eye];
      params.artifact = ch.artifact;
      params.noise_seed = noise_seed;
      params.noise_sigma = cfg.image_noise;
      ch.image = render_eye(params);
    }
  }
  return s;
}

Sample synth_sample(const SceneConfig& cfg, Rng& rng) {
  const ScenePose pose = draw_pose(cfg, rng);
  return synth_sample_at(cfg, pose, rng);
}

std::vector<Sample> generate_samples(const SceneConfig& cfg, std::size_t n, std::uint64_t seed) {
  cfg.validate();
  std::vector<Sample> out(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t scene_seed = derive_seed(seed, i);
    Rng rng(scene_seed);
    out[i] = synth_sample(cfg, rng);
    out[i].scene_seed = scene_seed;
  }
  return out;
}

}  // namespace tricam::synth
