#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "tricam/error.hpp"
#include "tricam/synthgen.hpp"

namespace tricam::synth {

namespace {

constexpr double kCenterX = kEyeImageWidth / 2.0;
constexpr double kCenterY = kEyeImageHeight / 2.0;
constexpr double kApertureHalfWidth = 17.0;
constexpr double kApertureHalfHeight = 8.0;
constexpr double kIrisTravelX = 11.0;
constexpr double kIrisTravelY = 5.0;
constexpr double kIrisRadius = 4.5;
constexpr double kPupilRadius = 2.0;

constexpr double kSkin = 0.55;
constexpr double kSclera = 0.9;
constexpr double kIris = 0.3;
constexpr double kPupil = 0.06;
constexpr double kLash = 0.3;

// Fraction of a pixel covered by a disc edge at signed distance d - r.
double coverage(double dist, double radius) { return std::clamp(radius - dist + 0.5, 0.0, 1.0); }

double lerp(double a, double b, double t) { return a + (b - a) * t; }

}  // namespace

void EyeRenderParams::validate() const {
  constexpr double kHalfPi = std::numbers::pi / 2.0;
  if (!(std::abs(yaw) <= kHalfPi) || !(std::abs(pitch) <= kHalfPi)) {
    throw Error(ErrorKind::kInvalidArgument, "eye yaw/pitch outside [-pi/2, pi/2]");
  }
  if (!(openness >= 0.0 && openness <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "eye openness outside [0, 1]");
  }
  if (!(artifact.intensity >= 0.0 && artifact.intensity <= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "artifact intensity outside [0, 1]");
  }
}

bool EyeImage::all_black() const {
  return std::all_of(pixels.begin(), pixels.end(), [](double p) { return p == 0.0; });
}

double EyeImage::mean() const {
  return std::accumulate(pixels.begin(), pixels.end(), 0.0) / kEyeImagePixels;
}

EyeImage render_eye(const EyeRenderParams& params) {
  params.validate();
  Rng rng(params.noise_seed);

  double openness = params.openness;
  const auto& art = params.artifact;
  if (art.kind == ArtifactKind::kClosed) openness = 0.0;
  if (art.kind == ArtifactKind::kBlink) openness *= 1.0 - 0.9 * art.intensity;
  const double half_h = kApertureHalfHeight * openness;

  const double iris_x = kCenterX + kIrisTravelX * std::sin(params.yaw);
  const double iris_y = kCenterY + kIrisTravelY * std::sin(params.pitch);

  // Artifact geometry is drawn before the noise so both stay reproducible.
  const double glint_x = 8.0 + 24.0 * uniform01(rng);
  const double glint_y = 6.0 + 8.0 * uniform01(rng);
  const double bar_x = 30.0 * uniform01(rng);
  const double bar_w = 6.0 + 10.0 * art.intensity;

  EyeImage img;
  for (int y = 0; y < kEyeImageHeight; ++y) {
    for (int x = 0; x < kEyeImageWidth; ++x) {
      const double px = x + 0.5;
      const double py = y + 0.5;

      double aperture = 0.0;
      if (half_h > 0.25) {
        const double ex = (px - kCenterX) / kApertureHalfWidth;
        const double ey = (py - kCenterY) / half_h;
        aperture = std::clamp((1.0 - std::sqrt(ex * ex + ey * ey)) * half_h + 0.5, 0.0, 1.0);
      }

      const double d_iris = std::hypot(px - iris_x, py - iris_y);
      double eye = lerp(kSclera, kIris, coverage(d_iris, kIrisRadius));
      if (d_iris < kPupilRadius + 0.5) {
        // Darkest at the pupil center so the argmin is unique.
        const double r = std::min(d_iris / kPupilRadius, 1.0);
        eye = lerp(eye, kPupil + 0.2 * r * r, coverage(d_iris, kPupilRadius));
      }
      double v = lerp(kSkin, eye, aperture);

      if (half_h < 1.5) {
        // Lash line of a (nearly) shut lid.
        const double dy = std::abs(py - kCenterY);
        const double along = std::abs(px - kCenterX) / kApertureHalfWidth;
        if (along < 1.0) v = lerp(v, kLash, coverage(dy, 0.75));
      }

      switch (art.kind) {
        case ArtifactKind::kReflection: {
          const double d = std::hypot(px - glint_x, py - glint_y);
          v = lerp(v, 1.0, coverage(d, 2.0 + 2.0 * art.intensity) * art.intensity);
          break;
        }
        case ArtifactKind::kOcclusion:
          if (px >= bar_x && px < bar_x + bar_w) v = lerp(v, 0.05, 0.6 + 0.4 * art.intensity);
          break;
        default:
          break;
      }
      img.at(x, y) = v;
    }
  }

  for (double& p : img.pixels) {
    const double noisy = std::clamp(p + params.noise_sigma * standard_normal(rng), 0.0, 1.0);
    // Snap to the 16-bit levels used on disk so stored datasets are lossless.
    p = std::round(noisy * 65535.0) / 65535.0;
  }
  return img;
}

int darkest_column(const EyeImage& image) {
  int best_x = 0;
  double best = 2.0;
  for (int y = 0; y < kEyeImageHeight; ++y) {
    for (int x = 0; x < kEyeImageWidth; ++x) {
      if (image.at(x, y) < best) {
        best = image.at(x, y);
        best_x = x;
      }
    }
  }
  return best_x;
}

}  // namespace tricam::synth
