#include <algorithm>
#include <cmath>
#include <numeric>

#include "tricam/error.hpp"
#include "tricam/harness.hpp"

namespace tricam::harness {

namespace {

struct Run {
  std::size_t row = 0;
  std::size_t seed_index = 0;
  TrainRunConfig cfg;
  const Samples* train = nullptr;
};

// Trains and tests every run; rows[run.row].per_seed_cm[run.seed_index] gets
// the test error. Runs share nothing, so they go in parallel.
void execute(const Experiment& data, std::vector<Run>& runs, std::vector<SweepRow>& rows,
             std::size_t n_seeds) {
  for (auto& r : rows) r.per_seed_cm.assign(n_seeds, 0.0);
  const auto n = static_cast<long long>(runs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < n; ++i) {
    const Run& run = runs[static_cast<std::size_t>(i)];
    const Samples& train = run.train ? *run.train : data.train;
    const TrainResult t = train_model(train, data.val, data.rig, run.cfg);
    EvalOptions eval;
    eval.ablation = run.cfg.ablation;
    rows[run.row].per_seed_cm[run.seed_index] = evaluate(t.model, data.test, data.rig, eval).mean_cm;
  }
  for (auto& r : rows) r.median_cm = median(r.per_seed_cm);
  for (auto& r : rows) {
    r.delta_pct = rows.front().median_cm > 0.0
                      ? 100.0 * (r.median_cm - rows.front().median_cm) / rows.front().median_cm
                      : 0.0;
  }
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kNoIntraValidation: return "no-intra-validation";
    case Variant::kNoWeightedFusion: return "no-weighted-fusion";
    case Variant::kDropCamera1: return "drop-camera-1";
    case Variant::kDropCamera2: return "drop-camera-2";
    case Variant::kDropCamera3: return "drop-camera-3";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (to_string(v) == name) return v;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown variant '" + std::string(name) + "'");
}

Ablation ablation_for(Variant v) {
  Ablation a;
  switch (v) {
    case Variant::kFull: break;
    case Variant::kNoIntraValidation: a.no_intra_validation = true; break;
    case Variant::kNoWeightedFusion: a.no_weighted_fusion = true; break;
    case Variant::kDropCamera1: a.drop_camera = 0; break;
    case Variant::kDropCamera2: a.drop_camera = 1; break;
    case Variant::kDropCamera3: a.drop_camera = 2; break;
  }
  return a;
}

std::vector<SweepRow> ablation_suite(const Experiment& data, const TrainRunConfig& base,
                                     std::span<const std::uint64_t> seeds,
                                     std::span<const Variant> variants) {
  if (seeds.empty() || variants.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "ablation needs at least one seed and variant");
  }
  std::vector<SweepRow> rows;
  std::vector<Run> runs;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    rows.push_back({std::string(to_string(variants[v])), 0.0, {}, 0.0, 0.0});
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      Run run{v, s, base, nullptr};
      run.cfg.ablation = ablation_for(variants[v]);
      run.cfg.seed = seeds[s];
      runs.push_back(run);
    }
  }
  execute(data, runs, rows, seeds.size());
  return rows;
}

std::vector<SweepRow> aux_ratio_sweep(const Experiment& data, const TrainRunConfig& base,
                                      std::span<const double> ratios,
                                      std::span<const std::uint64_t> seeds) {
  if (seeds.empty() || ratios.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "sweep needs at least one seed and ratio");
  }
  std::vector<SweepRow> rows;
  std::vector<Run> runs;
  for (std::size_t k = 0; k < ratios.size(); ++k) {
    rows.push_back({"aux_ratio", ratios[k], {}, 0.0, 0.0});
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      Run run{k, s, base, nullptr};
      run.cfg.ablation.no_intra_validation = false;
      run.cfg.aux_ratio = ratios[k];
      run.cfg.seed = seeds[s];
      runs.push_back(run);
    }
  }
  execute(data, runs, rows, seeds.size());
  return rows;
}

double implicit_noise_sigma(double mean_offset_cm) {
  // The radial offset of an isotropic 2-D Gaussian is Rayleigh distributed
  // with mean sigma * sqrt(pi / 2).
  return mean_offset_cm / std::sqrt(M_PI / 2.0);
}

Samples implicit_labels(std::span<const synth::Sample> samples, const geometry::ScreenModel& screen,
                        double sigma_cm, std::uint64_t seed) {
  Samples out(samples.begin(), samples.end());
  const double sx = geometry::cm_to_px(screen, sigma_cm, geometry::Axis::kHorizontal);
  const double sy = geometry::cm_to_px(screen, sigma_cm, geometry::Axis::kVertical);
  for (std::size_t i = 0; i < out.size(); ++i) {
    synth::Rng rng(synth::derive_seed(seed, 0x1a6e1 + i));
    auto& t = out[i].target_px;
    t.x = std::clamp(t.x + sx * synth::standard_normal(rng), 0.0, static_cast<double>(screen.width_px));
    t.y = std::clamp(t.y + sy * synth::standard_normal(rng), 0.0, static_cast<double>(screen.height_px));
  }
  return out;
}

Samples mix_training_set(std::span<const synth::Sample> explicit_set,
                         std::span<const synth::Sample> implicit_set, double pct,
                         std::uint64_t seed) {
  if (explicit_set.size() != implicit_set.size()) {
    throw Error(ErrorKind::kShapeMismatch, "explicit and implicit sets differ in size");
  }
  if (!(pct >= 0.0 && pct <= 100.0)) {
    throw Error(ErrorKind::kInvalidArgument, "mix percentage must lie in [0, 100]");
  }
  const std::size_t n = explicit_set.size();
  const auto swap = static_cast<std::size_t>(std::llround(pct / 100.0 * static_cast<double>(n)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  synth::Rng rng(synth::derive_seed(seed, 0x313c));
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(synth::uniform01(rng) * static_cast<double>(i));
    std::swap(order[i - 1], order[j]);
  }
  Samples out(explicit_set.begin(), explicit_set.end());
  for (std::size_t k = 0; k < swap; ++k) out[order[k]] = implicit_set[order[k]];
  return out;
}

std::vector<SweepRow> mix_experiment(const Experiment& data, std::span<const double> pcts,
                                     const TrainRunConfig& base,
                                     std::span<const std::uint64_t> seeds, double mean_offset_cm) {
  if (seeds.empty() || pcts.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "mix experiment needs at least one seed and percentage");
  }
  const Samples implicit =
      implicit_labels(data.train, data.rig.screen, implicit_noise_sigma(mean_offset_cm), base.seed);
  std::vector<Samples> sets;
  sets.reserve(pcts.size());
  for (double p : pcts) sets.push_back(mix_training_set(data.train, implicit, p, base.seed));

  std::vector<SweepRow> rows;
  std::vector<Run> runs;
  for (std::size_t k = 0; k < pcts.size(); ++k) {
    rows.push_back({"implicit_pct", pcts[k], {}, 0.0, 0.0});
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      Run run{k, s, base, &sets[k]};
      run.cfg.seed = seeds[s];
      runs.push_back(run);
    }
  }
  execute(data, runs, rows, seeds.size());
  return rows;
}

}  // namespace tricam::harness
