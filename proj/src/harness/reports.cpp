#include <iomanip>
#include <sstream>

#include "tricam/harness.hpp"

namespace tricam::harness {

namespace {

std::ostringstream table() {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6);
  return out;
}

}  // namespace

std::string curves_table(const std::vector<EpochRecord>& curves) {
  auto out = table();
  out << "epoch\ttrain_main\ttrain_joint\tval_cm\n";
  for (const auto& c : curves) {
    out << c.epoch << '\t' << c.train_main << '\t' << c.train_joint << '\t' << c.val_cm << '\n';
  }
  return out.str();
}

std::string eval_table(const EvalReport& r) {
  auto out = table();
  out << "samples\tmean_cm\tmedian_cm\n";
  out << r.errors_cm.size() << '\t' << r.mean_cm << '\t' << r.median_cm << '\n';
  return out.str();
}

std::string angle_table(const std::vector<AngleResult>& rows) {
  auto out = table();
  out << "theta_deg\tdistance_cm\tdx_cm\tsamples\tmean_cm\tmedian_cm\n";
  for (const auto& r : rows) {
    out << r.scenario.theta_deg << '\t' << r.scenario.distance_cm << '\t' << r.scenario.dx_cm << '\t'
        << r.samples << '\t' << r.mean_cm << '\t' << r.median_cm << '\n';
  }
  return out.str();
}

std::string heatmap_table(const HeatmapGrid& grid) {
  auto out = table();
  out << "row\tcol\tx0_px\ty0_px\tcount\tmean_cm\n";
  for (std::size_t r = 0; r < grid.rows; ++r) {
    for (std::size_t c = 0; c < grid.cols; ++c) {
      const std::size_t i = r * grid.cols + c;
      out << r << '\t' << c << '\t' << c * grid.bin_px << '\t' << r * grid.bin_px << '\t'
          << grid.counts[i] << '\t' << grid.mean_cm[i] << '\n';
    }
  }
  return out.str();
}

std::string sweep_table(const std::vector<SweepRow>& rows, std::string_view value_name) {
  auto out = table();
  out << value_name << "\tmedian_cm\tdelta_pct\tper_seed_cm\n";
  for (const auto& r : rows) {
    if (value_name == "variant") out << r.label;
    else out << r.value;
    out << '\t' << r.median_cm << '\t' << r.delta_pct << '\t';
    for (std::size_t i = 0; i < r.per_seed_cm.size(); ++i) {
      out << (i ? "," : "") << r.per_seed_cm[i];
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace tricam::harness
