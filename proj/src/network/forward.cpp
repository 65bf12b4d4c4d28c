#include <cmath>

#include "tricam/error.hpp"
#include "tricam/network.hpp"

namespace tricam::nn {

namespace {

Var dense(Graph& g, std::span<const Var> p, const DenseLayer& l, Var x) {
  return linear(g, x, p[l.weight], p[l.bias]);
}

Var conv(Graph& g, std::span<const Var> p, const ConvLayer& l, Var x, std::size_t k) {
  return conv2d(g, x, p[l.weight], p[l.bias], k, l.stride, (k - 1) / 2);
}

void check_batch(const BatchInput& batch) {
  const std::size_t b = batch.size;
  if (b == 0) throw Error(ErrorKind::kEmptyDataset, "empty batch");
  auto expect = [](const Tensor& t, const Shape& s, const char* what) {
    if (t.shape != s) {
      throw Error(ErrorKind::kShapeMismatch, std::string(what) + " has shape " +
                                                 shape_str(t.shape) + ", expected " +
                                                 shape_str(s));
    }
  };
  expect(batch.coords, {b, kChannels * kCoordFeatures}, "coords");
  expect(batch.detected, {b * kChannels}, "detected");
  expect(batch.images,
         {b * kChannels, 1, std::size_t{synth::kEyeImageHeight}, std::size_t{synth::kEyeImageWidth}},
         "images");
  expect(batch.target, {b, 2}, "target");
  expect(batch.aux_target, {b, kAuxHeads, 2}, "aux_target");
  expect(batch.aux_valid, {b, kAuxHeads}, "aux_valid");
}

// Per-head slices of the aux targets and validity mask.
Tensor head_target(const BatchInput& batch, std::size_t h) {
  Tensor t({batch.size, 2});
  for (std::size_t r = 0; r < batch.size; ++r) {
    t.data[r * 2] = batch.aux_target.data[(r * kAuxHeads + h) * 2];
    t.data[r * 2 + 1] = batch.aux_target.data[(r * kAuxHeads + h) * 2 + 1];
  }
  return t;
}

Tensor head_mask(const BatchInput& batch, std::size_t h) {
  Tensor m({batch.size});
  for (std::size_t r = 0; r < batch.size; ++r) m.data[r] = batch.aux_valid.data[r * kAuxHeads + h];
  return m;
}

// Plain-tensor version of masked_mse with the same summation order.
double mse_rows(const Tensor& pred, const Tensor& target, const Tensor& mask) {
  const std::size_t rows = pred.dim(0), cols = pred.dim(1);
  std::size_t valid = 0;
  double sum = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask.data[r] == 0.0) continue;
    ++valid;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = pred.data[r * cols + c] - target.data[r * cols + c];
      sum += d * d;
    }
  }
  return valid ? sum / static_cast<double>(valid * cols) : 0.0;
}

}  // namespace

std::vector<Var> bind_params(Graph& g, TriCamModel& model) {
  std::vector<Var> vars;
  vars.reserve(model.params.size());
  for (auto& p : model.params) vars.push_back(g.parameter(p));
  return vars;
}

std::vector<Var> alias_params(Graph& g, const TriCamModel& model) {
  std::vector<Var> vars;
  vars.reserve(model.params.size());
  for (const auto& p : model.params) vars.push_back(g.alias(p.value));
  return vars;
}

ForwardVars forward(Graph& g, const TriCamModel& model, std::span<const Var> p,
                    const BatchInput& batch, const ForwardOptions& opts) {
  check_batch(batch);
  if (p.size() != model.params.size()) {
    throw Error(ErrorKind::kShapeMismatch, "parameter binding does not match the model");
  }
  const TriCamConfig& cfg = model.config;
  const std::size_t b = batch.size;
  const std::size_t k = cfg.kernel;
  ForwardVars fv;

  // Coordinate branch and intra-validation heads.
  const Var coords = g.input(batch.coords);
  std::vector<Var> trunk_in{coords};
  for (std::size_t h = 0; h < kAuxHeads; ++h) {
    const int eye = synth::channel_eye(static_cast<int>(h));
    std::vector<std::size_t> cols;
    for (int src : aux_sources(synth::channel_camera(static_cast<int>(h)))) {
      const auto c = static_cast<std::size_t>(synth::channel_index(eye, src));
      for (std::size_t f = 0; f < kCoordFeatures; ++f) cols.push_back(c * kCoordFeatures + f);
    }
    const Var x = gather_cols(g, coords, std::move(cols));
    const Var hid = relu(g, dense(g, p, model.aux_hidden[h], x));
    fv.aux[h] = dense(g, p, model.aux_out[h], hid);
    trunk_in.push_back(hid);
  }
  Var coord = concat_cols(g, trunk_in);
  for (const auto& l : model.coord) coord = relu(g, dense(g, p, l, coord));

  // Image branch: shared CNN over all B*6 crops.
  const Var images = g.input(batch.images);
  const Var mask = g.input(batch.detected);
  Var x = relu(g, conv(g, p, model.cnn_conv[0], images, k));
  x = relu(g, conv(g, p, model.cnn_conv[1], x, k));
  {
    const Shape& s = g.shape(x);
    x = reshape(g, x, {s[0], s[1] * s[2] * s[3]});
  }
  x = relu(g, dense(g, p, model.cnn_feature, x));
  const Var features = scale_rows(g, x, mask);  // [B*6, F]

  if (opts.uniform_fusion) {
    fv.weights = g.input(Tensor({b, kChannels}, 1.0 / static_cast<double>(kChannels)));
  } else {
    Var d = relu(g, conv(g, p, model.disc_conv[0], images, k));
    d = relu(g, conv(g, p, model.disc_conv[1], d, k));
    const Shape& s = g.shape(d);
    d = reshape(g, d, {s[0], s[1] * s[2] * s[3]});
    d = relu(g, dense(g, p, model.disc_hidden, d));
    d = scale_rows(g, d, mask);
    d = dense(g, p, model.disc_score, d);  // [B*6, 1]
    fv.weights = softmax_rows(g, reshape(g, d, {b, kChannels}));
  }

  Var fused = scale_rows(g, features, reshape(g, fv.weights, {b * kChannels}));
  fused = reshape(g, fused, {b, kChannels * cfg.cnn_feature});
  const Var reduced = relu(g, dense(g, p, model.reduction, fused));

  const Var parts[] = {reduced, coord};
  Var y = concat_cols(g, parts);
  for (const auto& l : model.mlp) y = relu(g, dense(g, p, l, y));
  fv.gaze = dense(g, p, model.mlp_out, y);
  return fv;
}

ForwardOutput predict(const TriCamModel& model, const BatchInput& batch,
                      const ForwardOptions& opts) {
  Graph g;
  const auto params = alias_params(g, model);
  const ForwardVars fv = forward(g, model, params, batch, opts);
  ForwardOutput out;
  out.gaze_pred = g.value(fv.gaze);
  out.fusion_weights = g.value(fv.weights);
  out.aux_preds = Tensor({batch.size, std::size_t{synth::kEyes}, std::size_t{synth::kCameras}, 2});
  for (std::size_t h = 0; h < kAuxHeads; ++h) {
    const Tensor& a = g.value(fv.aux[h]);
    for (std::size_t r = 0; r < batch.size; ++r) {
      out.aux_preds.data[(r * kAuxHeads + h) * 2] = a.data[r * 2];
      out.aux_preds.data[(r * kAuxHeads + h) * 2 + 1] = a.data[r * 2 + 1];
    }
  }
  return out;
}

LossBreakdown combine_losses(double main, const std::array<double, kAuxHeads>& aux, double ratio) {
  LossBreakdown l;
  l.main = main;
  l.aux = aux;
  double sum = 0.0;
  for (double a : aux) sum += a;
  l.joint = main + ratio * sum;
  return l;
}

LossBreakdown joint_loss(const ForwardOutput& out, const BatchInput& batch, double aux_ratio) {
  check_batch(batch);
  if (out.gaze_pred.shape != batch.target.shape) {
    throw Error(ErrorKind::kShapeMismatch, "gaze_pred does not match the batch");
  }
  const double main = mse_rows(out.gaze_pred, batch.target, Tensor({batch.size}, 1.0));
  std::array<double, kAuxHeads> aux{};
  for (std::size_t h = 0; h < kAuxHeads; ++h) {
    Tensor pred({batch.size, 2});
    for (std::size_t r = 0; r < batch.size; ++r) {
      pred.data[r * 2] = out.aux_preds.data[(r * kAuxHeads + h) * 2];
      pred.data[r * 2 + 1] = out.aux_preds.data[(r * kAuxHeads + h) * 2 + 1];
    }
    aux[h] = mse_rows(pred, head_target(batch, h), head_mask(batch, h));
  }
  return combine_losses(main, aux, aux_ratio);
}

LossVars joint_loss(Graph& g, const ForwardVars& fv, const BatchInput& batch, double aux_ratio) {
  std::vector<Var> terms{masked_mse(g, fv.gaze, batch.target, Tensor({batch.size}, 1.0))};
  std::vector<double> coefs{1.0};
  std::array<double, kAuxHeads> aux{};
  for (std::size_t h = 0; h < kAuxHeads; ++h) {
    const Var t = masked_mse(g, fv.aux[h], head_target(batch, h), head_mask(batch, h));
    aux[h] = g.value(t).data[0];
    terms.push_back(t);
    coefs.push_back(aux_ratio);
  }
  LossVars lv;
  lv.joint = weighted_sum(g, terms, coefs);
  lv.values = combine_losses(g.value(terms[0]).data[0], aux, aux_ratio);
  return lv;
}

LossBreakdown compute_gradients(TriCamModel& model, const BatchInput& batch,
                                const StepOptions& opts) {
  zero_grads(model);
  Graph g;
  const auto params = bind_params(g, model);
  const ForwardVars fv = forward(g, model, params, batch, opts.forward);
  const LossVars lv = joint_loss(g, fv, batch, opts.aux_ratio);
  if (!std::isfinite(lv.values.joint)) return lv.values;
  g.backward(lv.joint);
  return lv.values;
}

}  // namespace tricam::nn
