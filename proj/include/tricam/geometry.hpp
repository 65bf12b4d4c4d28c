#pragma once

// Pinhole multi-camera geometry for a screen-anchored world frame.
//
// World frame: origin at the screen's top-left corner, +x along the screen
// width, +y down the screen height, +z from the screen toward the user. The
// screen occupies the plane z = 0. Camera frames follow the usual vision
// convention (x right, y down, z along the optical axis).

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <span>
#include <vector>

namespace tricam::geometry {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

struct ScreenModel {
  int width_px = 1920;
  int height_px = 1080;
  double width_cm = 59.789;
  double height_cm = 33.631;

  void validate() const;
};

/// Screen of the 27" monitor used for the reference hardware.
ScreenModel reference_screen();

struct CameraModel {
  Vec3 position = Vec3::Zero();
  /// World-to-camera rotation: x_cam = orientation * (x_world - position).
  Mat3 orientation = Mat3::Identity();
  double focal_px = 1000.0;
  double u0 = 960.0;
  double v0 = 540.0;
  int res_w = 1920;
  int res_h = 1080;

  void validate() const;
};

/// Eye location in one camera's image. Undetected eyes carry the raw
/// sentinel u = v = -1.
struct ViewCoord {
  static constexpr double kSentinel = -1.0;

  bool detected = false;
  double u = kSentinel;
  double v = kSentinel;

  static ViewCoord undetected() { return {}; }
  static ViewCoord at(double u, double v) { return {true, u, v}; }
};

struct EyePose {
  Vec3 center = Vec3::Zero();
  Vec3 gaze_dir = Vec3(0.0, 0.0, -1.0);
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 dir = Vec3(0.0, 0.0, 1.0);

  double distance_to(const Vec3& p) const;
};

struct Triangulation {
  Vec3 point = Vec3::Zero();
  double residual_cm = 0.0;
};

enum class Axis { kHorizontal, kVertical };

/// Rays whose directions are all within this cosine of each other are
/// rejected by triangulate() as degenerate (about 0.057 degrees).
inline constexpr double kParallelCosine = 1.0 - 5e-7;

ViewCoord project_eye(const CameraModel& cam, const Vec3& p);

/// Throws Error(kNoObservation) for an undetected view.
Ray back_ray(const CameraModel& cam, const ViewCoord& vc);

/// Least-squares closest point to a bundle of rays. Needs at least two
/// non-parallel rays.
Triangulation triangulate(std::span<const Ray> rays);

/// Where cam_c should see the eye observed at vc_a / vc_b.
ViewCoord predict_view(const ViewCoord& vc_a, const CameraModel& cam_a, const ViewCoord& vc_b,
                       const CameraModel& cam_b, const CameraModel& cam_c);

PixelPoint gaze_intersect(const EyePose& eye, const ScreenModel& screen);

Vec3 gaze_from_target(const Vec3& center, PixelPoint target_px, const ScreenModel& screen);

double px_to_cm(const ScreenModel& screen, double dist_px, Axis axis);
double cm_to_px(const ScreenModel& screen, double dist_cm, Axis axis);

/// Physical distance between two screen pixels.
double pixel_distance_cm(const ScreenModel& screen, PixelPoint a, PixelPoint b);

Vec3 screen_px_to_world(const ScreenModel& screen, PixelPoint px);

/// World-to-camera rotation for a camera whose camera-to-world rotation is
/// Ry(yaw) * Rx(pitch) * Rz(roll). Angles in radians; positive pitch tilts the
/// optical axis toward +y (down the screen).
Mat3 rotation_from_euler(double yaw, double pitch, double roll);

/// Largest absolute entry of R^T R - I, plus |det R - 1|.
double orthonormality_error(const Mat3& r);

}  // namespace tricam::geometry
