#include <algorithm>
#include <cmath>

#include "tricam/error.hpp"
#include "tricam/network.hpp"

namespace tricam::nn {

namespace {

constexpr std::size_t kImgH = synth::kEyeImageHeight;
constexpr std::size_t kImgW = synth::kEyeImageWidth;

[[noreturn]] void bad_arch(const std::string& what) {
  throw Error(ErrorKind::kBadArchitecture, what);
}

struct MapDims {
  std::size_t c, h, w;
  std::size_t size() const { return c * h * w; }
};

// Same-style padding; the kernel itself must fit in the incoming map.
MapDims conv_out(const MapDims& in, std::size_t out_c, std::size_t k, std::size_t stride,
                 const char* where) {
  if (k == 0 || k > in.h || k > in.w) {
    bad_arch(std::string(where) + ": kernel " + std::to_string(k) + " does not fit a " +
             std::to_string(in.h) + "x" + std::to_string(in.w) + " map");
  }
  const std::size_t pad = (k - 1) / 2;
  return {out_c, (in.h + 2 * pad - k) / stride + 1, (in.w + 2 * pad - k) / stride + 1};
}

struct Dims {
  MapDims cnn0, cnn1, disc0, disc1;
};

Dims derive_dims(const TriCamConfig& cfg) {
  Dims d;
  const MapDims img{1, kImgH, kImgW};
  d.cnn0 = conv_out(img, cfg.cnn_channels[0], cfg.kernel, 2, "cnn conv 1");
  d.cnn1 = conv_out(d.cnn0, cfg.cnn_channels[1], cfg.kernel, 2, "cnn conv 2");
  d.disc0 = conv_out(img, cfg.disc_channels[0], cfg.kernel, 2, "discriminator conv 1");
  d.disc1 = conv_out(d.disc0, cfg.disc_channels[1], cfg.kernel, 2, "discriminator conv 2");
  return d;
}

std::size_t dense_count(std::size_t in, std::size_t out) { return in * out + out; }

std::size_t coord_in(const TriCamConfig& cfg) {
  return kChannels * kCoordFeatures + kAuxHeads * cfg.aux_hidden;
}

class Builder {
 public:
  Builder(TriCamModel& m, std::uint64_t seed) : m_(m), rng_(seed) {}

  DenseLayer dense(const std::string& name, std::size_t in, std::size_t out) {
    DenseLayer l;
    l.weight = add(name + ".w", {in, out}, in);
    l.bias = add(name + ".b", {out}, 0);
    return l;
  }

  ConvLayer conv(const std::string& name, std::size_t in_c, std::size_t out_c, std::size_t k,
                 std::size_t stride) {
    ConvLayer l;
    l.weight = add(name + ".w", {out_c, in_c * k * k}, in_c * k * k);
    l.bias = add(name + ".b", {out_c}, 0);
    l.stride = stride;
    return l;
  }

 private:
  // fan_in == 0 marks a bias: zero init.
  std::size_t add(std::string name, Shape shape, std::size_t fan_in) {
    Parameter p;
    p.name = std::move(name);
    p.value = Tensor(shape);
    p.grad = Tensor(shape);
    if (fan_in > 0) {
      const double a = std::sqrt(6.0 / static_cast<double>(fan_in));
      for (double& v : p.value.data) v = synth::uniform(rng_, {-a, a});
    }
    m_.params.push_back(std::move(p));
    return m_.params.size() - 1;
  }

  TriCamModel& m_;
  synth::Rng rng_;
};

}  // namespace

void TriCamConfig::validate() const {
  if (!(aux_ratio >= 0.0) || !std::isfinite(aux_ratio)) bad_arch("aux_ratio must be >= 0");
  auto positive = [](std::size_t v, const char* what) {
    if (v == 0) bad_arch(std::string(what) + " must be positive");
  };
  positive(aux_hidden, "aux_hidden");
  positive(kernel, "kernel");
  positive(cnn_feature, "cnn_feature");
  positive(disc_hidden, "disc_hidden");
  positive(reduction, "reduction");
  for (auto c : cnn_channels) positive(c, "cnn_channels");
  for (auto c : disc_channels) positive(c, "disc_channels");
  if (coord_hidden.empty()) bad_arch("coord branch needs at least one layer");
  for (auto w : coord_hidden) positive(w, "coord_hidden");
  for (auto w : mlp_hidden) positive(w, "mlp_hidden");
  derive_dims(*this);
}

nlohmann::json config_to_json(const TriCamConfig& cfg) {
  return {{"aux_hidden", cfg.aux_hidden},     {"coord_hidden", cfg.coord_hidden},
          {"kernel", cfg.kernel},             {"cnn_channels", cfg.cnn_channels},
          {"cnn_feature", cfg.cnn_feature},   {"disc_channels", cfg.disc_channels},
          {"disc_hidden", cfg.disc_hidden},   {"reduction", cfg.reduction},
          {"mlp_hidden", cfg.mlp_hidden},     {"aux_ratio", cfg.aux_ratio},
          {"seed", cfg.seed}};
}

TriCamConfig config_from_json(const nlohmann::json& doc) {
  TriCamConfig cfg;
  try {
    cfg.aux_hidden = doc.value("aux_hidden", cfg.aux_hidden);
    cfg.coord_hidden = doc.value("coord_hidden", cfg.coord_hidden);
    cfg.kernel = doc.value("kernel", cfg.kernel);
    cfg.cnn_channels = doc.value("cnn_channels", cfg.cnn_channels);
    cfg.cnn_feature = doc.value("cnn_feature", cfg.cnn_feature);
    cfg.disc_channels = doc.value("disc_channels", cfg.disc_channels);
    cfg.disc_hidden = doc.value("disc_hidden", cfg.disc_hidden);
    cfg.reduction = doc.value("reduction", cfg.reduction);
    cfg.mlp_hidden = doc.value("mlp_hidden", cfg.mlp_hidden);
    cfg.aux_ratio = doc.value("aux_ratio", cfg.aux_ratio);
    cfg.seed = doc.value("seed", cfg.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformed, std::string("network config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

TriCamConfig tiny_config(std::uint64_t seed) {
  synth::Rng rng(synth::derive_seed(seed, 0x7417));
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(synth::uniform01(rng) * static_cast<double>(hi - lo + 1));
  };
  TriCamConfig cfg;
  cfg.aux_hidden = pick(2, 4);
  cfg.coord_hidden = {pick(3, 6)};
  cfg.kernel = 3;
  cfg.cnn_channels = {pick(1, 2), pick(1, 2)};
  cfg.cnn_feature = pick(2, 4);
  cfg.disc_channels = {pick(1, 2), pick(1, 2)};
  cfg.disc_hidden = pick(2, 4);
  cfg.reduction = pick(3, 6);
  cfg.mlp_hidden = {pick(4, 8)};
  cfg.aux_ratio = 0.1;
  cfg.seed = seed;
  return cfg;
}

TriCamModel init_model(const TriCamConfig& cfg) {
  cfg.validate();
  const Dims d = derive_dims(cfg);
  TriCamModel m;
  m.config = cfg;
  Builder b(m, cfg.seed);
  const std::size_t aux_in = 2 * kCoordFeatures;
  for (std::size_t h = 0; h < kAuxHeads; ++h) {
    m.aux_hidden[h] = b.dense("aux" + std::to_string(h) + ".hidden", aux_in, cfg.aux_hidden);
    m.aux_out[h] = b.dense("aux" + std::to_string(h) + ".out", cfg.aux_hidden, 2);
  }
  std::size_t in = coord_in(cfg);
  for (std::size_t i = 0; i < cfg.coord_hidden.size(); ++i) {
    m.coord.push_back(b.dense("coord" + std::to_string(i), in, cfg.coord_hidden[i]));
    in = cfg.coord_hidden[i];
  }
  const std::size_t k = cfg.kernel;
  m.cnn_conv[0] = b.conv("cnn.conv0", 1, cfg.cnn_channels[0], k, 2);
  m.cnn_conv[1] = b.conv("cnn.conv1", cfg.cnn_channels[0], cfg.cnn_channels[1], k, 2);
  m.cnn_feature = b.dense("cnn.feature", d.cnn1.size(), cfg.cnn_feature);
  m.disc_conv[0] = b.conv("disc.conv0", 1, cfg.disc_channels[0], k, 2);
  m.disc_conv[1] = b.conv("disc.conv1", cfg.disc_channels[0], cfg.disc_channels[1], k, 2);
  m.disc_hidden = b.dense("disc.hidden", d.disc1.size(), cfg.disc_hidden);
  m.disc_score = b.dense("disc.score", cfg.disc_hidden, 1);
  m.reduction = b.dense("reduction", kChannels * cfg.cnn_feature, cfg.reduction);
  in = cfg.reduction + cfg.coord_hidden.back();
  for (std::size_t i = 0; i < cfg.mlp_hidden.size(); ++i) {
    m.mlp.push_back(b.dense("mlp" + std::to_string(i), in, cfg.mlp_hidden[i]));
    in = cfg.mlp_hidden[i];
  }
  m.mlp_out = b.dense("mlp.out", in, 2);
  return m;
}

std::size_t count_params(const TriCamModel& model) {
  std::size_t n = 0;
  for (const auto& p : model.params) n += p.value.size();
  return n;
}

std::size_t count_params(const TriCamConfig& cfg) {
  cfg.validate();
  const Dims d = derive_dims(cfg);
  const std::size_t k2 = cfg.kernel * cfg.kernel;
  std::size_t n = kAuxHeads * (dense_count(2 * kCoordFeatures, cfg.aux_hidden) +
                               dense_count(cfg.aux_hidden, 2));
  std::size_t in = coord_in(cfg);
  for (auto w : cfg.coord_hidden) {
    n += dense_count(in, w);
    in = w;
  }
  n += dense_count(k2, cfg.cnn_channels[0]);
  n += dense_count(cfg.cnn_channels[0] * k2, cfg.cnn_channels[1]);
  n += dense_count(d.cnn1.size(), cfg.cnn_feature);
  n += dense_count(k2, cfg.disc_channels[0]);
  n += dense_count(cfg.disc_channels[0] * k2, cfg.disc_channels[1]);
  n += dense_count(d.disc1.size(), cfg.disc_hidden);
  n += dense_count(cfg.disc_hidden, 1);
  n += dense_count(kChannels * cfg.cnn_feature, cfg.reduction);
  in = cfg.reduction + cfg.coord_hidden.back();
  for (auto w : cfg.mlp_hidden) {
    n += dense_count(in, w);
    in = w;
  }
  return n + dense_count(in, 2);
}

void zero_grads(TriCamModel& model) {
  for (auto& p : model.params) {
    if (p.grad.shape != p.value.shape) p.grad = Tensor(p.value.shape);
    else p.grad.fill(0.0);
  }
}

std::vector<std::size_t> TriCamModel::image_branch_params() const {
  std::vector<std::size_t> ids;
  for (const auto& l : cnn_conv) ids.insert(ids.end(), {l.weight, l.bias});
  ids.insert(ids.end(), {cnn_feature.weight, cnn_feature.bias});
  for (const auto& l : disc_conv) ids.insert(ids.end(), {l.weight, l.bias});
  ids.insert(ids.end(), {disc_hidden.weight, disc_hidden.bias});
  return ids;
}

std::vector<std::size_t> TriCamModel::aux_head_params() const {
  std::vector<std::size_t> ids;
  for (std::size_t h = 0; h < kAuxHeads; ++h) {
    ids.insert(ids.end(), {aux_out[h].weight, aux_out[h].bias});
  }
  return ids;
}

const Parameter& TriCamModel::param(std::string_view name) const {
  auto it = std::find_if(params.begin(), params.end(),
                         [&](const Parameter& p) { return p.name == name; });
  if (it == params.end()) {
    throw Error(ErrorKind::kInvalidArgument, "no parameter named " + std::string(name));
  }
  return *it;
}

}  // namespace tricam::nn
