#include <algorithm>
#include <numeric>

#include "tricam/error.hpp"
#include "tricam/network.hpp"

namespace tricam::nn {

std::array<int, 2> aux_sources(int masked_camera) {
  switch (masked_camera) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    case 2: return {0, 1};
    default:
      throw Error(ErrorKind::kInvalidArgument,
                  "camera index out of range: " + std::to_string(masked_camera));
  }
}

BatchInput make_batch(std::span<const synth::Sample> samples, std::span<const std::size_t> indices,
                      const Rig& rig, const BatchOptions& opts) {
  if (indices.empty()) throw Error(ErrorKind::kEmptyDataset, "empty batch");
  if (rig.cameras.size() != static_cast<std::size_t>(synth::kCameras)) {
    throw Error(ErrorKind::kInvalidArgument, "network expects a three-camera rig");
  }
  if (opts.drop_camera < -1 || opts.drop_camera >= synth::kCameras) {
    throw Error(ErrorKind::kInvalidArgument,
                "drop_camera out of range: " + std::to_string(opts.drop_camera));
  }
  const std::size_t b = indices.size();
  constexpr std::size_t px = synth::kEyeImagePixels;
  BatchInput out;
  out.size = b;
  out.coords = Tensor({b, kChannels * kCoordFeatures});
  out.detected = Tensor({b * kChannels});
  out.images = Tensor({b * kChannels, 1, synth::kEyeImageHeight, synth::kEyeImageWidth});
  out.target = Tensor({b, 2});
  out.aux_target = Tensor({b, kAuxHeads, 2});
  out.aux_valid = Tensor({b, kAuxHeads});

  const auto& screen = rig.screen;
  for (std::size_t r = 0; r < b; ++r) {
    const std::size_t idx = indices[r];
    if (idx >= samples.size()) throw Error(ErrorKind::kInvalidArgument, "sample index out of range");
    const synth::Sample& s = samples[idx];
    for (std::size_t c = 0; c < kChannels; ++c) {
      const int cam = synth::channel_camera(static_cast<int>(c));
      const auto& ch = s.channels[c];
      const bool det = ch.view.detected && cam != opts.drop_camera;
      const auto& model = rig.cameras[static_cast<std::size_t>(cam)];
      const double u = det ? ch.view.u / model.res_w : 0.0;
      const double v = det ? ch.view.v / model.res_h : 0.0;
      double* co = out.coords.data.data() + r * kChannels * kCoordFeatures + c * kCoordFeatures;
      co[0] = u;
      co[1] = v;
      co[2] = det ? 1.0 : 0.0;
      out.detected.data[r * kChannels + c] = det ? 1.0 : 0.0;
      if (det) {
        std::copy(ch.image.pixels.begin(), ch.image.pixels.end(),
                  out.images.data.begin() + static_cast<std::ptrdiff_t>((r * kChannels + c) * px));
      }
      // Head c predicts channel c from the eye's other two cameras.
      out.aux_target.data[(r * kAuxHeads + c) * 2] = u;
      out.aux_target.data[(r * kAuxHeads + c) * 2 + 1] = v;
      out.aux_valid.data[r * kAuxHeads + c] = det ? 1.0 : 0.0;
    }
    out.target.data[r * 2] = s.target_px.x / screen.width_px;
    out.target.data[r * 2 + 1] = s.target_px.y / screen.height_px;
  }
  return out;
}

BatchInput make_batch(std::span<const synth::Sample> samples, const Rig& rig,
                      const BatchOptions& opts) {
  std::vector<std::size_t> idx(samples.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return make_batch(samples, idx, rig, opts);
}

}  // namespace tricam::nn
