#pragma once

// The split gaze network.
//
//   coordinate branch: six (u, v, detected) triples -> dense stack. Six
//     intra-validation heads (one per eye and masked camera) map the other
//     two cameras' coordinates through a hidden layer to the masked camera's
//     coordinate; their hidden activations also feed the coordinate stack.
//   image branch: a shared CNN (two stride-2 convolutions and a dense layer)
//     turns each 40x20 crop into a feature vector; a
//     shared discriminator scores each crop, the six scores go through one
//     softmax, and the weights scale the features before a reduction layer.
//   decision MLP: concatenates both branches and outputs the gaze point in
//     normalized screen coordinates.
//
// An undetected channel's pipeline output is multiplied by zero right before
// the last dense layer of its branch (reduction layer for features, score
// layer for the discriminator), so neither its pixels nor the parameters
// that only see them affect the result or receive gradient.

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "tricam/autodiff.hpp"
#include "tricam/synthgen.hpp"

namespace tricam::nn {

inline constexpr std::size_t kChannels = synth::kChannels;
inline constexpr std::size_t kCoordFeatures = 3;  // u, v, detected
inline constexpr std::size_t kAuxHeads = kChannels;

struct TriCamConfig {
  std::size_t aux_hidden = 32;
  std::vector<std::size_t> coord_hidden{64, 64};
  std::size_t kernel = 3;
  std::array<std::size_t, 2> cnn_channels{8, 16};
  std::size_t cnn_feature = 64;
  std::array<std::size_t, 2> disc_channels{4, 8};
  std::size_t disc_hidden = 32;
  std::size_t reduction = 128;
  std::vector<std::size_t> mlp_hidden{1024, 896};
  double aux_ratio = 0.1;
  std::uint64_t seed = 1;

  /// Throws Error(kBadArchitecture) for non-positive widths or feature maps.
  void validate() const;

  friend bool operator==(const TriCamConfig&, const TriCamConfig&) = default;
};

nlohmann::json config_to_json(const TriCamConfig& cfg);
TriCamConfig config_from_json(const nlohmann::json& doc);

/// A small configuration (a few thousand parameters) for gradient checks.
TriCamConfig tiny_config(std::uint64_t seed);

struct DenseLayer {
  std::size_t weight = 0;  // index into TriCamModel::params, [in, out]
  std::size_t bias = 0;
};

struct ConvLayer {
  std::size_t weight = 0;  // [out_channels, in_channels * k * k]
  std::size_t bias = 0;
  std::size_t stride = 1;
};

struct TriCamModel {
  TriCamConfig config;
  std::vector<Parameter> params;

  std::array<DenseLayer, kAuxHeads> aux_hidden;
  std::array<DenseLayer, kAuxHeads> aux_out;
  std::vector<DenseLayer> coord;
  std::array<ConvLayer, 2> cnn_conv;
  DenseLayer cnn_feature;
  std::array<ConvLayer, 2> disc_conv;
  DenseLayer disc_hidden;
  DenseLayer disc_score;
  DenseLayer reduction;
  std::vector<DenseLayer> mlp;
  DenseLayer mlp_out;

  /// Parameters that only see the image pixels of individual channels.
  std::vector<std::size_t> image_branch_params() const;
  std::vector<std::size_t> aux_head_params() const;
  const Parameter& param(std::string_view name) const;
};

TriCamModel init_model(const TriCamConfig& cfg);
std::size_t count_params(const TriCamModel& model);
/// Same count derived from the config alone, without allocating.
std::size_t count_params(const TriCamConfig& cfg);
void zero_grads(TriCamModel& model);

/// Network-side view of a batch of samples.
struct BatchInput {
  std::size_t size = 0;
  Tensor coords;      // [B, 18]: per channel (u/res_w, v/res_h, detected)
  Tensor detected;    // [B * 6], 1 where the channel is detected
  Tensor images;      // [B * 6, 1, 20, 40]
  Tensor target;      // [B, 2], gaze pixel / screen resolution
  Tensor aux_target;  // [B, 6, 2], true coords of each head's masked camera
  Tensor aux_valid;   // [B, 6]
};

struct BatchOptions {
  /// Camera index (0-based) whose channels are forced undetected, or -1.
  int drop_camera = -1;
};

/// Builds a batch from samples[indices]. Raw -1 sentinels become flag 0 with
/// zeroed coordinates.
BatchInput make_batch(std::span<const synth::Sample> samples, std::span<const std::size_t> indices,
                      const Rig& rig, const BatchOptions& opts = {});
BatchInput make_batch(std::span<const synth::Sample> samples, const Rig& rig,
                      const BatchOptions& opts = {});

/// Cameras (a, b) that feed the head predicting camera m.
std::array<int, 2> aux_sources(int masked_camera);

struct ForwardOptions {
  /// Replace discriminator weights with 1/6 (weighted-fusion ablation).
  bool uniform_fusion = false;
};

struct ForwardVars {
  Var gaze;                          // [B, 2]
  std::array<Var, kAuxHeads> aux;    // each [B, 2]; head index = masked channel
  Var weights;                       // [B, 6]
};

/// Binds every parameter into g as a trainable leaf.
std::vector<Var> bind_params(Graph& g, TriCamModel& model);
/// Binds parameters as constants (no gradient bookkeeping).
std::vector<Var> alias_params(Graph& g, const TriCamModel& model);
ForwardVars forward(Graph& g, const TriCamModel& model, std::span<const Var> params,
                    const BatchInput& batch, const ForwardOptions& opts = {});

struct ForwardOutput {
  Tensor gaze_pred;       // [B, 2]
  Tensor aux_preds;       // [B, 2, 3, 2]: eye, masked camera, (u, v)
  Tensor fusion_weights;  // [B, 6]
};

/// Inference without gradient bookkeeping.
ForwardOutput predict(const TriCamModel& model, const BatchInput& batch,
                      const ForwardOptions& opts = {});

struct LossBreakdown {
  double main = 0.0;
  std::array<double, kAuxHeads> aux{};
  double joint = 0.0;
};

/// joint = main + ratio * sum(aux).
LossBreakdown combine_losses(double main, const std::array<double, kAuxHeads>& aux, double ratio);

/// Loss from plain forward outputs; mirrors the graph loss exactly.
LossBreakdown joint_loss(const ForwardOutput& out, const BatchInput& batch, double aux_ratio);

struct LossVars {
  Var joint;
  LossBreakdown values;
};
LossVars joint_loss(Graph& g, const ForwardVars& fv, const BatchInput& batch, double aux_ratio);

struct StepOptions {
  double aux_ratio = 0.1;
  ForwardOptions forward;
};

/// Zeroes, then fills every Parameter::grad with d(joint)/d(param).
LossBreakdown compute_gradients(TriCamModel& model, const BatchInput& batch,
                                const StepOptions& opts);

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t step = 0;
};

AdamState make_adam_state(const TriCamModel& model);
void adam_update(TriCamModel& model, AdamState& state, const AdamHyper& hyper);

/// Gradients, then one Adam update. Throws Error(kDiverged) on a
/// non-finite loss, leaving the model untouched.
LossBreakdown train_step(TriCamModel& model, const BatchInput& batch, AdamState& state,
                         const AdamHyper& hyper, const StepOptions& opts);

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
  std::string worst_param;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares analytic gradients of the joint loss to central differences for
/// every scalar parameter. Relative error uses max(|analytic|, |numeric|,
/// rel_floor) as denominator; at eps = 1e-6 the central difference carries
/// about 1e-9 of absolute rounding noise, so smaller gradients are compared
/// on the floor's absolute scale.
GradCheckResult grad_check(TriCamModel& model, const BatchInput& batch, double eps,
                           const StepOptions& opts = {}, double rel_floor = 1e-3);

/// Checkpoint container: magic, version, JSON header (config, rig), then
/// named parameter blobs as little-endian doubles.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TriCamModel model;
  Rig rig;
  nlohmann::json extra;  // free-form metadata (epoch, metrics)
};

void save_checkpoint(const std::filesystem::path& path, const TriCamModel& model, const Rig& rig,
                     const nlohmann::json& extra = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Throws Error(kConfigMismatch) when the stored config differs from cfg.
Checkpoint load_checkpoint(const std::filesystem::path& path, const TriCamConfig& cfg);

}  // namespace tricam::nn
