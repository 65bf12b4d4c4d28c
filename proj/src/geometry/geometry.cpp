#include "tricam/geometry.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

#include "tricam/error.hpp"

namespace tricam::geometry {

namespace {

double axis_scale_cm_per_px(const ScreenModel& screen, Axis axis) {
  return axis == Axis::kHorizontal ? screen.width_cm / screen.width_px
                                   : screen.height_cm / screen.height_px;
}

}  // namespace

void ScreenModel::validate() const {
  if (width_px <= 0 || height_px <= 0 || !(width_cm > 0.0) || !(height_cm > 0.0) ||
      !std::isfinite(width_cm) || !std::isfinite(height_cm)) {
    std::ostringstream msg;
    msg << "screen " << width_px << "x" << height_px << " px, " << width_cm << "x" << height_cm
        << " cm";
    throw Error(ErrorKind::kInvalidArgument, msg.str());
  }
}

ScreenModel reference_screen() { return ScreenModel{1920, 1080, 59.789, 33.631}; }

void CameraModel::validate() const {
  if (!(focal_px > 0.0) || res_w <= 0 || res_h <= 0) {
    throw Error(ErrorKind::kInvalidArgument, "camera intrinsics must be positive");
  }
  if (orthonormality_error(orientation) > 1e-9) {
    throw Error(ErrorKind::kInvalidArgument, "camera orientation is not a rotation");
  }
}

double Ray::distance_to(const Vec3& p) const {
  const Vec3 d = p - origin;
  return (d - d.dot(dir) * dir).norm();
}

ViewCoord project_eye(const CameraModel& cam, const Vec3& p) {
  const Vec3 pc = cam.orientation * (p - cam.position);
  if (!(pc.z() > 0.0)) return ViewCoord::undetected();
  const double u = cam.u0 + cam.focal_px * pc.x() / pc.z();
  const double v = cam.v0 + cam.focal_px * pc.y() / pc.z();
  if (u < 0.0 || u >= cam.res_w || v < 0.0 || v >= cam.res_h) return ViewCoord::undetected();
  return ViewCoord::at(u, v);
}

Ray back_ray(const CameraModel& cam, const ViewCoord& vc) {
  if (!vc.detected) throw Error(ErrorKind::kNoObservation, "back_ray on undetected view");
  const Vec3 dc((vc.u - cam.u0) / cam.focal_px, (vc.v - cam.v0) / cam.focal_px, 1.0);
  return Ray{cam.position, (cam.orientation.transpose() * dc).normalized()};
}

Triangulation triangulate(std::span<const Ray> rays) {
  if (rays.size() < 2) {
    throw Error(ErrorKind::kUnderdetermined,
                "triangulation needs at least 2 rays, got " + std::to_string(rays.size()));
  }
  bool has_baseline = false;
  for (std::size_t i = 0; i < rays.size() && !has_baseline; ++i) {
    for (std::size_t j = i + 1; j < rays.size(); ++j) {
      if (std::abs(rays[i].dir.dot(rays[j].dir)) <= kParallelCosine) {
        has_baseline = true;
        break;
      }
    }
  }
  if (!has_baseline) throw Error(ErrorKind::kDegenerate, "rays are parallel");

  // Sum of projectors onto each ray's normal plane.
  Mat3 a = Mat3::Zero();
  Vec3 b = Vec3::Zero();
  for (const Ray& r : rays) {
    const Mat3 proj = Mat3::Identity() - r.dir * r.dir.transpose();
    a += proj;
    b += proj * r.origin;
  }
  const Vec3 point = a.ldlt().solve(b);
  if (!point.allFinite()) throw Error(ErrorKind::kDegenerate, "singular normal equations");

  double sq = 0.0;
  for (const Ray& r : rays) {
    const double d = r.distance_to(point);
    sq += d * d;
  }
  return {point, std::sqrt(sq / static_cast<double>(rays.size()))};
}

ViewCoord predict_view(const ViewCoord& vc_a, const CameraModel& cam_a, const ViewCoord& vc_b,
                       const CameraModel& cam_b, const CameraModel& cam_c) {
  const Ray rays[] = {back_ray(cam_a, vc_a), back_ray(cam_b, vc_b)};
  return project_eye(cam_c, triangulate(rays).point);
}

PixelPoint gaze_intersect(const EyePose& eye, const ScreenModel& screen) {
  const double gz = eye.gaze_dir.z();
  if (gz >= 0.0 || std::abs(gz) < 1e-12) {
    throw Error(ErrorKind::kNoIntersection, "gaze does not point toward the screen plane");
  }
  const double t = -eye.center.z() / gz;
  const Vec3 hit = eye.center + t * eye.gaze_dir;
  return {cm_to_px(screen, hit.x(), Axis::kHorizontal), cm_to_px(screen, hit.y(), Axis::kVertical)};
}

Vec3 gaze_from_target(const Vec3& center, PixelPoint target_px, const ScreenModel& screen) {
  if (!(center.z() > 0.0)) {
    throw Error(ErrorKind::kDegenerate, "eye center must be in front of the screen");
  }
  return (screen_px_to_world(screen, target_px) - center).normalized();
}

double px_to_cm(const ScreenModel& screen, double dist_px, Axis axis) {
  // Dividing first keeps full-extent conversions exact (1920 px -> width_cm).
  return axis == Axis::kHorizontal ? dist_px / screen.width_px * screen.width_cm
                                   : dist_px / screen.height_px * screen.height_cm;
}

double cm_to_px(const ScreenModel& screen, double dist_cm, Axis axis) {
  return axis == Axis::kHorizontal ? dist_cm / screen.width_cm * screen.width_px
                                   : dist_cm / screen.height_cm * screen.height_px;
}

double pixel_distance_cm(const ScreenModel& screen, PixelPoint a, PixelPoint b) {
  const double dx = (a.x - b.x) * axis_scale_cm_per_px(screen, Axis::kHorizontal);
  const double dy = (a.y - b.y) * axis_scale_cm_per_px(screen, Axis::kVertical);
  return std::hypot(dx, dy);
}

Vec3 screen_px_to_world(const ScreenModel& screen, PixelPoint px) {
  return {px_to_cm(screen, px.x, Axis::kHorizontal), px_to_cm(screen, px.y, Axis::kVertical), 0.0};
}

Mat3 rotation_from_euler(double yaw, double pitch, double roll) {
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cr = std::cos(roll), sr = std::sin(roll);
  Mat3 ry, rx, rz;
  ry << cy, 0, sy, 0, 1, 0, -sy, 0, cy;
  // Positive pitch tilts the optical axis toward +y (down the screen).
  rx << 1, 0, 0, 0, cp, sp, 0, -sp, cp;
  rz << cr, -sr, 0, sr, cr, 0, 0, 0, 1;
  const Mat3 camera_to_world = ry * rx * rz;
  return camera_to_world.transpose();
}

double orthonormality_error(const Mat3& r) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho + std::abs(r.determinant() - 1.0);
}

}  // namespace tricam::geometry
