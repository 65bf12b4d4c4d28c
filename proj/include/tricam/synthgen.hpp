#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "tricam/geometry.hpp"
#include "tricam/rig.hpp"

namespace tricam::synth {

inline constexpr int kEyeImageWidth = 40;
inline constexpr int kEyeImageHeight = 20;
inline constexpr int kEyeImagePixels = kEyeImageWidth * kEyeImageHeight;
inline constexpr int kCameras = 3;
inline constexpr int kEyes = 2;
inline constexpr int kChannels = kCameras * kEyes;

/// Channel layout shared by the dataset and the network: the right eye's
/// three cameras first, then the left eye's.
constexpr int channel_index(int eye, int cam) { return eye * kCameras + cam; }
constexpr int channel_eye(int channel) { return channel / kCameras; }
constexpr int channel_camera(int channel) { return channel % kCameras; }

enum class ArtifactKind : std::uint8_t { kNone = 0, kBlink, kClosed, kReflection, kOcclusion };

struct QualityArtifact {
  ArtifactKind kind = ArtifactKind::kNone;
  double intensity = 0.0;
};

struct EyeRenderParams {
  double yaw = 0.0;    // radians, gaze relative to the eye-to-camera ray
  double pitch = 0.0;  // radians, positive looks toward the camera's +v
  double openness = 1.0;
  QualityArtifact artifact;
  std::uint64_t noise_seed = 0;
  double noise_sigma = 0.02;

  void validate() const;
};

/// 40x20 grayscale crop, row-major, intensities in [0, 1].
struct EyeImage {
  std::array<double, kEyeImagePixels> pixels{};

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y * kEyeImageWidth + x)]; }
  double at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y * kEyeImageWidth + x)];
  }
  bool all_black() const;
  double mean() const;
};

EyeImage render_eye(const EyeRenderParams& params);

/// Column of the darkest pixel (first in row-major order on ties).
int darkest_column(const EyeImage& image);

/// One camera/eye observation inside a Sample.
struct Channel {
  geometry::ViewCoord view;
  EyeImage image;
  QualityArtifact artifact;
  double yaw = 0.0;
  double pitch = 0.0;
};

struct Sample {
  std::array<Channel, kChannels> channels;
  geometry::PixelPoint target_px;
  std::array<geometry::Vec3, kEyes> eye_centers;
  std::uint64_t scene_seed = 0;
};

struct ArtifactProbabilities {
  double blink = 0.1;
  double reflection = 0.1;
  double occlusion = 0.05;
  double closed = 0.05;

  double total() const { return blink + reflection + occlusion + closed; }
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct SceneConfig {
  Rig rig;
  Range distance_cm{45.0, 60.0};
  /// Head center x offset from the screen's horizontal center.
  Range lateral_cm{-8.0, 8.0};
  /// Head center y, measured down from the screen's top edge.
  Range vertical_cm{6.0, 18.0};
  Range head_turn_deg{-10.0, 10.0};
  Range openness{0.8, 1.0};
  ArtifactProbabilities artifacts;
  double ipd_cm = 6.3;
  double image_noise = 0.02;

  void validate() const;
};

/// Three cameras evenly spaced along the top edge of the reference screen,
/// facing the user and pitched 10 degrees down.
Rig default_rig();
SceneConfig default_scene();

nlohmann::json scene_to_json(const SceneConfig& cfg);
SceneConfig scene_from_json(const nlohmann::json& doc);
SceneConfig load_scene(const std::filesystem::path& path);

/// Head placement plus fixation target for one sample.
struct ScenePose {
  geometry::Vec3 head_center;
  double head_turn = 0.0;  // radians about +y
  geometry::PixelPoint target_px;
  std::array<double, kEyes> openness{1.0, 1.0};
};

using Rng = std::mt19937_64;

/// Uniform in [0, 1) from the top 53 bits; identical on every platform.
double uniform01(Rng& rng);
double uniform(Rng& rng, Range r);
double standard_normal(Rng& rng);
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

ScenePose draw_pose(const SceneConfig& cfg, Rng& rng);
std::array<geometry::Vec3, kEyes> eye_centers(const SceneConfig& cfg, const ScenePose& pose);

/// Renders all six channels for a fixed pose; artifacts and noise come from
/// rng.
Sample synth_sample_at(const SceneConfig& cfg, const ScenePose& pose, Rng& rng);
Sample synth_sample(const SceneConfig& cfg, Rng& rng);

/// Sample i uses an rng seeded from derive_seed(seed, i), so generation is
/// a pure function of (cfg, n, seed) and parallel by index.
std::vector<Sample> generate_samples(const SceneConfig& cfg, std::size_t n, std::uint64_t seed);

}  // namespace tricam::synth
