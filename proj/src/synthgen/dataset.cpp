#include "tricam/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tricam/error.hpp"
#include "tricam/hash.hpp"
#include "tricam/io.hpp"

namespace tricam::synth {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'T', 'R', 'I', 'C', 'A', 'M', 'D', 'S'};
constexpr std::size_t kHeaderBytes = 32;

}  // namespace

std::vector<std::uint8_t> encode_record(const Sample& s) {
  std::vector<std::uint8_t> out;
  out.reserve(kRecordBytes);
  io::ByteWriter w(out);
  w.u64(s.scene_seed);
  w.f64(s.target_px.x);
  w.f64(s.target_px.y);
  for (const auto& c : s.eye_centers) {
    w.f64(c.x());
    w.f64(c.y());
    w.f64(c.z());
  }
  for (const auto& ch : s.channels) {
    w.u8(ch.view.detected ? 1 : 0);
    w.u8(static_cast<std::uint8_t>(ch.artifact.kind));
    w.u16(0);
    w.f64(ch.view.u);
    w.f64(ch.view.v);
    w.f64(ch.artifact.intensity);
    w.f64(ch.yaw);
    w.f64(ch.pitch);
  }
  for (const auto& ch : s.channels) {
    for (double p : ch.image.pixels) {
      w.u16(static_cast<std::uint16_t>(std::lround(std::clamp(p, 0.0, 1.0) * 65535.0)));
    }
  }
  return out;
}

Sample decode_record(const std::uint8_t* bytes) {
  io::ByteReader r(bytes);
  Sample s;
  s.scene_seed = r.u64();
  s.target_px.x = r.f64();
  s.target_px.y = r.f64();
  for (auto& c : s.eye_centers) {
    const double x = r.f64(), y = r.f64(), z = r.f64();
    c = {x, y, z};
  }
  for (auto& ch : s.channels) {
    ch.view.detected = r.u8() != 0;
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(ArtifactKind::kOcclusion)) {
      throw Error(ErrorKind::kMalformed, "unknown artifact kind " + std::to_string(kind));
    }
    ch.artifact.kind = static_cast<ArtifactKind>(kind);
    r.u16();
    ch.view.u = r.f64();
    ch.view.v = r.f64();
    ch.artifact.intensity = r.f64();
    ch.yaw = r.f64();
    ch.pitch = r.f64();
  }
  for (auto& ch : s.channels) {
    for (double& p : ch.image.pixels) p = r.u16() / 65535.0;
  }
  return s;
}

void write_dataset(const Dataset& ds, const fs::path& out_dir) {
  if (ds.samples.empty()) throw Error(ErrorKind::kEmptyDataset, "refusing to write 0 samples");
  fs::create_directories(out_dir);

  std::vector<std::uint8_t> blob;
  blob.reserve(kHeaderBytes + ds.samples.size() * kRecordBytes);
  blob.insert(blob.end(), std::begin(kMagic), std::end(kMagic));
  io::ByteWriter w(blob);
  w.u32(kDatasetVersion);
  w.u32(static_cast<std::uint32_t>(kRecordBytes));
  w.u64(ds.samples.size());
  w.u32(kEyeImageWidth);
  w.u32(kEyeImageHeight);
  for (const auto& s : ds.samples) {
    const auto rec = encode_record(s);
    blob.insert(blob.end(), rec.begin(), rec.end());
  }
  io::write_atomically(out_dir / "samples.bin", blob.data(), blob.size());

  Fnv1a h;
  h.update(blob);
  json manifest = {{"format", "tricam-dataset"},
                   {"version", kDatasetVersion},
                   {"count", ds.samples.size()},
                   {"seed", ds.seed},
                   {"scene", scene_to_json(ds.scene)},
                   {"rig", rig_to_json(ds.scene.rig)},
                   {"samples_file", "samples.bin"},
                   {"record_bytes", kRecordBytes},
                   {"byte_order", "little-endian"},
                   {"samples_hash", h.hex()}};
  const std::string text = manifest.dump(2) + "\n";
  io::write_atomically(out_dir / "manifest.json", text.data(), text.size());
}

Dataset gen_dataset(const SceneConfig& cfg, std::size_t n, std::uint64_t seed,
                    const fs::path& out_dir) {
  if (n == 0) throw Error(ErrorKind::kEmptyDataset, "dataset size must be >= 1");
  Dataset ds;
  ds.scene = cfg;
  ds.seed = seed;
  ds.samples = generate_samples(cfg, n, seed);
  write_dataset(ds, out_dir);
  ds.samples_hash = hash_file(out_dir / "samples.bin");
  return ds;
}

Dataset load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream min(manifest_path);
  if (!min) throw Error(ErrorKind::kIo, "cannot open " + manifest_path.string());
  json manifest;
  try {
    manifest = json::parse(min);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::kMalformed, manifest_path.string() + ": " + e.what());
  }

  Dataset ds;
  std::size_t count = 0;
  std::string expected_hash;
  try {
    if (manifest.at("format") != "tricam-dataset" || manifest.at("version") != kDatasetVersion) {
      throw Error(ErrorKind::kMalformed, manifest_path.string() + ": unsupported format/version");
    }
    ds.scene = scene_from_json(manifest.at("scene"));
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    count = manifest.at("count").get<std::size_t>();
    expected_hash = manifest.at("samples_hash").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformed, manifest_path.string() + ": " + e.what());
  }

  const fs::path bin = dir / "samples.bin";
  const std::vector<std::uint8_t> blob = io::read_file(bin);
  if (blob.size() != kHeaderBytes + count * kRecordBytes ||
      std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::kMalformed, bin.string() + ": size or magic does not match manifest");
  }
  io::ByteReader hr(blob.data() + sizeof kMagic);
  const auto version = hr.u32();
  const auto record = hr.u32();
  const auto stored_count = hr.u64();
  const auto width = hr.u32();
  const auto height = hr.u32();
  if (version != kDatasetVersion || record != kRecordBytes || stored_count != count ||
      width != kEyeImageWidth || height != kEyeImageHeight) {
    throw Error(ErrorKind::kMalformed, bin.string() + ": header does not match manifest");
  }
  Fnv1a h;
  h.update(blob);
  if (h.hex() != expected_hash) {
    throw Error(ErrorKind::kMalformed, bin.string() + ": content hash mismatch");
  }
  ds.samples_hash = h.hex();

  ds.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    ds.samples.push_back(decode_record(blob.data() + kHeaderBytes + i * kRecordBytes));
  }
  return ds;
}

}  // namespace tricam::synth
