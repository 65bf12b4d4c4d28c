#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tricam/geometry.hpp"

namespace tricam {

/// A fixed monitor with cameras mounted on it.
struct Rig {
  geometry::ScreenModel screen;
  std::vector<geometry::CameraModel> cameras;

  void validate() const;
};

/// Rig document:
///
///   {
///     "screen": {"width_px": 1920, "height_px": 1080,
///                "width_cm": 59.789, "height_cm": 33.631},
///     "cameras": [
///       {"position_cm": [x, y, z],
///        "rotation": [r00, r01, ..., r22],      // world-to-camera, row-major
///        "focal_px": f, "principal_point": [u0, v0], "resolution": [w, h]}
///     ]
///   }
///
/// On input a camera may give "euler_deg": [yaw, pitch, roll] instead of
/// "rotation". Output always writes "rotation".
nlohmann::json rig_to_json(const Rig& rig);
Rig rig_from_json(const nlohmann::json& doc);

Rig load_rig(const std::filesystem::path& path);
void save_rig(const Rig& rig, const std::filesystem::path& path);

}  // namespace tricam
