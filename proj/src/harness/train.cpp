#include <cmath>
#include <fstream>
#include <numeric>

#include "tricam/error.hpp"
#include "tricam/harness.hpp"

namespace tricam::harness {

void TrainRunConfig::validate() const {
  if (epochs == 0) throw Error(ErrorKind::kInvalidArgument, "epochs must be >= 1");
  if (batch == 0) throw Error(ErrorKind::kInvalidArgument, "batch must be >= 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw Error(ErrorKind::kInvalidArgument, "lr must be >= 0");
  if (!(aux_ratio >= 0.0) || !std::isfinite(aux_ratio)) {
    throw Error(ErrorKind::kInvalidArgument, "aux_ratio must be >= 0");
  }
  if (ablation.drop_camera < -1 || ablation.drop_camera >= synth::kCameras) {
    throw Error(ErrorKind::kInvalidArgument, "drop_camera must be none or 1..3");
  }
  network.validate();
}

nlohmann::json run_config_to_json(const TrainRunConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"batch", cfg.batch},
          {"lr", cfg.lr},
          {"aux_ratio", cfg.aux_ratio},
          {"seed", cfg.seed},
          {"ablation",
           {{"no_intra_validation", cfg.ablation.no_intra_validation},
            {"no_weighted_fusion", cfg.ablation.no_weighted_fusion},
            {"drop_camera", cfg.ablation.drop_camera + 1}}},
          {"network", nn::config_to_json(cfg.network)}};
}

TrainRunConfig run_config_from_json(const nlohmann::json& doc) {
  TrainRunConfig cfg;
  try {
    cfg.epochs = doc.value("epochs", cfg.epochs);
    cfg.batch = doc.value("batch", cfg.batch);
    cfg.lr = doc.value("lr", cfg.lr);
    cfg.aux_ratio = doc.value("aux_ratio", cfg.aux_ratio);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("ablation")) {
      const auto& a = doc.at("ablation");
      cfg.ablation.no_intra_validation = a.value("no_intra_validation", false);
      cfg.ablation.no_weighted_fusion = a.value("no_weighted_fusion", false);
      cfg.ablation.drop_camera = a.value("drop_camera", 0) - 1;
    }
    if (doc.contains("network")) cfg.network = nn::config_from_json(doc.at("network"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformed, std::string("run config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

TrainRunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  try {
    return run_config_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kMalformed, path.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.detail());
  }
}

nn::ForwardOptions forward_options(const Ablation& a) {
  nn::ForwardOptions o;
  o.uniform_fusion = a.no_weighted_fusion;
  return o;
}

nn::BatchOptions batch_options(const Ablation& a) {
  nn::BatchOptions o;
  o.drop_camera = a.drop_camera;
  return o;
}

TrainResult train_model(std::span<const synth::Sample> train, std::span<const synth::Sample> val,
                        const Rig& rig, const TrainRunConfig& cfg, const BatchHook& hook) {
  cfg.validate();
  if (train.empty() || val.empty()) {
    throw Error(ErrorKind::kEmptyDataset, "training and validation sets must be non-empty");
  }
  nn::TriCamConfig net = cfg.network;
  net.seed = cfg.seed;
  net.aux_ratio = cfg.effective_aux_ratio();

  TrainResult result;
  result.model = nn::init_model(net);
  nn::TriCamModel model = result.model;
  nn::AdamState adam = nn::make_adam_state(model);
  nn::AdamHyper hyper;
  hyper.lr = cfg.lr;
  nn::StepOptions step;
  step.aux_ratio = net.aux_ratio;
  step.forward = forward_options(cfg.ablation);
  const nn::BatchOptions bopts = batch_options(cfg.ablation);
  EvalOptions eval;
  eval.ablation = cfg.ablation;

  result.best_val_cm = evaluate(model, val, rig, eval).mean_cm;
  result.curves.push_back({0, 0.0, 0.0, result.best_val_cm});
  bool have_best = false;

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    synth::Rng rng(synth::derive_seed(cfg.seed, 0xe0c0000 + epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(synth::uniform01(rng) * static_cast<double>(i));
      std::swap(order[i - 1], order[j]);
    }
    double main_sum = 0.0, joint_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t len = std::min(cfg.batch, order.size() - start);
      const std::span<const std::size_t> idx(order.data() + start, len);
      const nn::BatchInput batch = nn::make_batch(train, idx, rig, bopts);
      if (hook) hook(epoch, batch);
      nn::LossBreakdown l;
      try {
        l = nn::train_step(model, batch, adam, hyper, step);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kDiverged) throw;
        throw Error(ErrorKind::kDiverged, "epoch " + std::to_string(epoch) + ": " + e.detail());
      }
      main_sum += l.main * static_cast<double>(len);
      joint_sum += l.joint * static_cast<double>(len);
    }
    const double n = static_cast<double>(order.size());
    const double val_cm = evaluate(model, val, rig, eval).mean_cm;
    result.curves.push_back({epoch, main_sum / n, joint_sum / n, val_cm});
    if (!have_best || val_cm < result.best_val_cm) {
      have_best = true;
      result.best_val_cm = val_cm;
      result.best_epoch = epoch;
      result.model.params = model.params;
    }
  }
  return result;
}

}  // namespace tricam::harness
