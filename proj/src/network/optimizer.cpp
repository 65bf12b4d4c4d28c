#include <cmath>

#include "tricam/error.hpp"
#include "tricam/network.hpp"

namespace tricam::nn {

AdamState make_adam_state(const TriCamModel& model) {
  AdamState s;
  for (const auto& p : model.params) {
    s.m.emplace_back(p.value.shape);
    s.v.emplace_back(p.value.shape);
  }
  return s;
}

void adam_update(TriCamModel& model, AdamState& state, const AdamHyper& hyper) {
  if (state.m.size() != model.params.size()) {
    throw Error(ErrorKind::kShapeMismatch, "optimizer state does not match the model");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    auto& p = model.params[i];
    auto& m = state.m[i].data;
    auto& v = state.v[i].data;
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad.data[j];
      m[j] = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * g;
      v[j] = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * g * g;
      const double step = hyper.lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + hyper.eps);
      p.value.data[j] -= step;
    }
  }
}

LossBreakdown train_step(TriCamModel& model, const BatchInput& batch, AdamState& state,
                         const AdamHyper& hyper, const StepOptions& opts) {
  const LossBreakdown loss = compute_gradients(model, batch, opts);
  if (!std::isfinite(loss.joint)) {
    throw Error(ErrorKind::kDiverged, "non-finite joint loss");
  }
  adam_update(model, state, hyper);
  return loss;
}

}  // namespace tricam::nn
