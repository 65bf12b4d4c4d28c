#include "tricam/rig.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "tricam/error.hpp"

namespace tricam {

using nlohmann::json;

void Rig::validate() const {
  screen.validate();
  if (cameras.empty()) throw Error(ErrorKind::kInvalidArgument, "rig has no cameras");
  for (const auto& cam : cameras) cam.validate();
}

json rig_to_json(const Rig& rig) {
  json doc;
  doc["screen"] = {{"width_px", rig.screen.width_px},
                   {"height_px", rig.screen.height_px},
                   {"width_cm", rig.screen.width_cm},
                   {"height_cm", rig.screen.height_cm}};
  json cams = json::array();
  for (const auto& cam : rig.cameras) {
    json rot = json::array();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) rot.push_back(cam.orientation(r, c));
    cams.push_back({{"position_cm", {cam.position.x(), cam.position.y(), cam.position.z()}},
                    {"rotation", rot},
                    {"focal_px", cam.focal_px},
                    {"principal_point", {cam.u0, cam.v0}},
                    {"resolution", {cam.res_w, cam.res_h}}});
  }
  doc["cameras"] = cams;
  return doc;
}

Rig rig_from_json(const json& doc) {
  try {
    Rig rig;
    const auto& s = doc.at("screen");
    rig.screen.width_px = s.at("width_px").get<int>();
    rig.screen.height_px = s.at("height_px").get<int>();
    rig.screen.width_cm = s.at("width_cm").get<double>();
    rig.screen.height_cm = s.at("height_cm").get<double>();
    for (const auto& c : doc.at("cameras")) {
      geometry::CameraModel cam;
      const auto pos = c.at("position_cm").get<std::vector<double>>();
      if (pos.size() != 3) throw Error(ErrorKind::kMalformed, "position_cm needs 3 values");
      cam.position = {pos[0], pos[1], pos[2]};
      if (c.contains("rotation")) {
        const auto rot = c.at("rotation").get<std::vector<double>>();
        if (rot.size() != 9) throw Error(ErrorKind::kMalformed, "rotation needs 9 values");
        for (int r = 0; r < 3; ++r)
          for (int k = 0; k < 3; ++k) cam.orientation(r, k) = rot[r * 3 + k];
      } else {
        const auto e = c.at("euler_deg").get<std::vector<double>>();
        if (e.size() != 3) throw Error(ErrorKind::kMalformed, "euler_deg needs 3 values");
        constexpr double kDeg = std::numbers::pi / 180.0;
        cam.orientation = geometry::rotation_from_euler(e[0] * kDeg, e[1] * kDeg, e[2] * kDeg);
      }
      cam.focal_px = c.at("focal_px").get<double>();
      const auto pp = c.at("principal_point").get<std::vector<double>>();
      const auto res = c.at("resolution").get<std::vector<int>>();
      if (pp.size() != 2 || res.size() != 2) {
        throw Error(ErrorKind::kMalformed, "principal_point/resolution need 2 values");
      }
      cam.u0 = pp[0];
      cam.v0 = pp[1];
      cam.res_w = res[0];
      cam.res_h = res[1];
      rig.cameras.push_back(cam);
    }
    rig.validate();
    return rig;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformed, std::string("rig document: ") + e.what());
  }
}

Rig load_rig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open rig " + path.string());
  try {
    return rig_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kMalformed, path.string() + ": " + e.what());
  }
}

void save_rig(const Rig& rig, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write rig " + path.string());
  out << rig_to_json(rig).dump(2) << '\n';
}

}  // namespace tricam
