#include <cstring>

#include "tricam/error.hpp"
#include "tricam/io.hpp"
#include "tricam/network.hpp"

namespace tricam::nn {

namespace {

constexpr char kMagic[8] = {'T', 'R', 'I', 'C', 'A', 'M', 'C', 'K'};

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& what) {
  throw Error(ErrorKind::kMalformed, path.string() + ": " + what);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const TriCamModel& model, const Rig& rig,
                     const nlohmann::json& extra) {
  const nlohmann::json header = {
      {"config", config_to_json(model.config)}, {"rig", rig_to_json(rig)}, {"extra", extra}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> blob(std::begin(kMagic), std::end(kMagic));
  io::ByteWriter w(blob);
  w.u32(kCheckpointVersion);
  w.u64(text.size());
  w.bytes(text);
  w.u64(model.params.size());
  for (const auto& p : model.params) {
    w.u32(static_cast<std::uint32_t>(p.name.size()));
    w.bytes(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape) w.u64(d);
    for (double v : p.value.data) w.f64(v);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  io::write_atomically(path, blob.data(), blob.size());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> blob = io::read_file(path);
  const std::uint8_t* const end = blob.data() + blob.size();
  io::ByteReader r(blob.data());
  auto need = [&](std::size_t n) {
    if (static_cast<std::size_t>(end - r.pos()) < n) malformed(path, "truncated checkpoint");
  };

  need(sizeof kMagic + 4 + 8);
  if (std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0) malformed(path, "not a checkpoint");
  r.bytes(sizeof kMagic);
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    malformed(path, "unsupported checkpoint version " + std::to_string(version));
  }
  const auto text_len = r.u64();
  need(text_len);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.bytes(text_len));
  } catch (const nlohmann::json::exception& e) {
    malformed(path, e.what());
  }

  Checkpoint ck;
  try {
    ck.model = init_model(config_from_json(header.at("config")));
    ck.rig = rig_from_json(header.at("rig"));
    ck.extra = header.value("extra", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    malformed(path, e.what());
  }

  need(8);
  const auto count = r.u64();
  if (count != ck.model.params.size()) {
    malformed(path, "parameter count " + std::to_string(count) + " does not match config");
  }
  for (auto& p : ck.model.params) {
    need(4);
    const std::uint32_t name_len = r.u32();
    need(name_len + 4);
    const std::string name = r.bytes(name_len);
    if (name != p.name) malformed(path, "expected parameter " + p.name + ", found " + name);
    const std::uint32_t ndim = r.u32();
    need(std::size_t{8} * ndim);
    Shape shape(ndim);
    for (auto& d : shape) d = r.u64();
    if (shape != p.value.shape) {
      malformed(path, p.name + " has shape " + shape_str(shape) + ", config implies " +
                          shape_str(p.value.shape));
    }
    need(8 * p.value.size());
    for (double& v : p.value.data) v = r.f64();
  }
  if (r.pos() != end) malformed(path, "trailing bytes after parameters");
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const TriCamConfig& cfg) {
  Checkpoint ck = load_checkpoint(path);
  if (!(ck.model.config == cfg)) {
    throw Error(ErrorKind::kConfigMismatch,
                path.string() + ": checkpoint config does not match the requested config");
  }
  return ck;
}

}  // namespace tricam::nn
