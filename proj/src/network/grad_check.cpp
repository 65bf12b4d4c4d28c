#include <algorithm>
#include <cmath>

#include "tricam/network.hpp"

namespace tricam::nn {

GradCheckResult grad_check(TriCamModel& model, const BatchInput& batch, double eps,
                           const StepOptions& opts, double rel_floor) {
  compute_gradients(model, batch, opts);
  auto loss_at = [&]() { return joint_loss(predict(model, batch, opts.forward), batch, opts.aux_ratio).joint; };

  GradCheckResult res;
  for (auto& p : model.params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double saved = p.value.data[i];
      p.value.data[i] = saved + eps;
      const double up = loss_at();
      p.value.data[i] = saved - eps;
      const double down = loss_at();
      p.value.data[i] = saved;

      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = p.grad.data[i];
      const double abs_err = std::abs(analytic - numeric);
      const double rel = abs_err / std::max({std::abs(analytic), std::abs(numeric), rel_floor});
      res.max_abs_error = std::max(res.max_abs_error, abs_err);
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_param = p.name + "[" + std::to_string(i) + "]";
        res.worst_analytic = analytic;
        res.worst_numeric = numeric;
      }
      ++res.checked;
    }
  }
  return res;
}

}  // namespace tricam::nn
