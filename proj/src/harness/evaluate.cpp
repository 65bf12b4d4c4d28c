#include <algorithm>
#include <cmath>
#include <fstream>

#include "tricam/error.hpp"
#include "tricam/harness.hpp"
#include "tricam/io.hpp"

namespace tricam::harness {

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<geometry::PixelPoint> predict_pixels(const nn::TriCamModel& model,
                                                 std::span<const synth::Sample> samples,
                                                 const Rig& rig, const EvalOptions& opts) {
  const nn::ForwardOptions fopts = forward_options(opts.ablation);
  const nn::BatchOptions bopts = batch_options(opts.ablation);
  const double w = rig.screen.width_px, h = rig.screen.height_px;
  const std::size_t chunk = std::max<std::size_t>(opts.chunk, 1);
  std::vector<geometry::PixelPoint> out;
  out.reserve(samples.size());
  for (std::size_t start = 0; start < samples.size(); start += chunk) {
    const auto part = samples.subspan(start, std::min(chunk, samples.size() - start));
    const nn::ForwardOutput f = nn::predict(model, nn::make_batch(part, rig, bopts), fopts);
    for (std::size_t r = 0; r < part.size(); ++r) {
      out.push_back({f.gaze_pred.data[r * 2] * w, f.gaze_pred.data[r * 2 + 1] * h});
    }
  }
  return out;
}

EvalReport score_predictions(std::vector<geometry::PixelPoint> predicted,
                             std::vector<geometry::PixelPoint> targets,
                             const geometry::ScreenModel& screen, const EvalOptions& opts) {
  if (predicted.empty()) throw Error(ErrorKind::kEmptyDataset, "nothing to evaluate");
  if (predicted.size() != targets.size()) {
    throw Error(ErrorKind::kShapeMismatch, "prediction and target counts differ");
  }
  if (opts.smoothing) {
    const double a = opts.smoothing_alpha;
    for (std::size_t i = 1; i < predicted.size(); ++i) {
      predicted[i].x = a * predicted[i].x + (1.0 - a) * predicted[i - 1].x;
      predicted[i].y = a * predicted[i].y + (1.0 - a) * predicted[i - 1].y;
    }
  }
  EvalReport r;
  r.errors_cm.reserve(predicted.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const double e = geometry::pixel_distance_cm(screen, predicted[i], targets[i]);
    r.errors_cm.push_back(e);
    sum += e;
  }
  r.mean_cm = sum / static_cast<double>(predicted.size());
  r.median_cm = median(r.errors_cm);
  r.predicted = std::move(predicted);
  r.targets = std::move(targets);
  return r;
}

EvalReport evaluate(const nn::TriCamModel& model, std::span<const synth::Sample> test,
                    const Rig& rig, const EvalOptions& opts) {
  if (test.empty()) throw Error(ErrorKind::kEmptyDataset, "empty test set");
  std::vector<geometry::PixelPoint> targets;
  targets.reserve(test.size());
  for (const auto& s : test) targets.push_back(s.target_px);
  return score_predictions(predict_pixels(model, test, rig, opts), std::move(targets), rig.screen,
                           opts);
}

std::vector<AngleScenario> angle_scenarios(std::span<const double> thetas_deg,
                                           double distance_cm) {
  std::vector<AngleScenario> out;
  for (double t : thetas_deg) {
    out.push_back({t, distance_cm, distance_cm * std::tan(t * M_PI / 180.0)});
  }
  return out;
}

synth::SceneConfig angle_scene(const synth::SceneConfig& base, const AngleScenario& s) {
  synth::SceneConfig cfg = base;
  cfg.lateral_cm = {s.dx_cm, s.dx_cm};
  cfg.distance_cm = {s.distance_cm, s.distance_cm};
  return cfg;
}

std::vector<AngleResult> angle_sweep(const nn::TriCamModel& model,
                                     std::span<const AngleScenario> scenarios,
                                     const synth::SceneConfig& base, std::size_t n,
                                     std::uint64_t seed, const EvalOptions& opts) {
  std::vector<AngleResult> out;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const synth::SceneConfig cfg = angle_scene(base, scenarios[i]);
    const Samples test = synth::generate_samples(cfg, n, synth::derive_seed(seed, 0xa9e0 + i));
    const EvalReport r = evaluate(model, test, cfg.rig, opts);
    out.push_back({scenarios[i], n, r.mean_cm, r.median_cm});
  }
  return out;
}

double HeatmapGrid::weighted_mean() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    sum += mean_cm[i] * static_cast<double>(counts[i]);
    n += counts[i];
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

HeatmapGrid spatial_heatmap(const EvalReport& report, const geometry::ScreenModel& screen,
                            std::size_t bin_px) {
  if (bin_px == 0) throw Error(ErrorKind::kInvalidArgument, "heatmap bin must be positive");
  HeatmapGrid g;
  g.bin_px = bin_px;
  g.cols = (static_cast<std::size_t>(screen.width_px) + bin_px - 1) / bin_px;
  g.rows = (static_cast<std::size_t>(screen.height_px) + bin_px - 1) / bin_px;
  g.mean_cm.assign(g.cols * g.rows, 0.0);
  g.counts.assign(g.cols * g.rows, 0);
  for (std::size_t i = 0; i < report.targets.size(); ++i) {
    const auto& t = report.targets[i];
    const auto col = std::min(g.cols - 1, static_cast<std::size_t>(std::max(0.0, t.x)) / bin_px);
    const auto row = std::min(g.rows - 1, static_cast<std::size_t>(std::max(0.0, t.y)) / bin_px);
    g.mean_cm[row * g.cols + col] += report.errors_cm[i];
    ++g.counts[row * g.cols + col];
  }
  for (std::size_t i = 0; i < g.counts.size(); ++i) {
    if (g.counts[i]) g.mean_cm[i] /= static_cast<double>(g.counts[i]);
  }
  g.global_mean_cm = report.mean_cm;
  return g;
}

void write_pgm(const HeatmapGrid& grid, const std::filesystem::path& path) {
  const double top = grid.mean_cm.empty() ? 0.0 : *std::max_element(grid.mean_cm.begin(), grid.mean_cm.end());
  std::string data = "P5\n" + std::to_string(grid.cols) + " " + std::to_string(grid.rows) + "\n255\n";
  for (double v : grid.mean_cm) {
    data.push_back(static_cast<char>(top > 0.0 ? std::lround(255.0 * v / top) : 0));
  }
  io::write_atomically(path, data);
}

}  // namespace tricam::harness
