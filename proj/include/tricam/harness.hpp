#pragma once

// Experiment protocol: splits, training with validation-based model
// selection, cm-error evaluation, angle sweeps, heatmaps, ablations, aux-ratio
// sweeps and explicit/implicit label mixing.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tricam/network.hpp"
#include "tricam/synthgen.hpp"

namespace tricam::harness {

using Samples = std::vector<synth::Sample>;

struct SplitSpec {
  double train_frac = 0.7;
  double val_frac = 0.1;
  double test_frac = 0.2;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Split {
  std::vector<std::size_t> train, val, test;
};

/// Seeded shuffle of [0, n), then slices of round(n * frac) for train and
/// val; test takes the rest. Throws Error(kEmptyDataset) when n < 10.
Split split_dataset(std::size_t n, const SplitSpec& spec);

Samples gather(std::span<const synth::Sample> samples, std::span<const std::size_t> indices);

struct Ablation {
  bool no_intra_validation = false;  // aux_ratio forced to 0
  bool no_weighted_fusion = false;   // fusion weights forced to 1/6
  int drop_camera = -1;              // 0-based camera forced undetected, -1 for none

  friend bool operator==(const Ablation&, const Ablation&) = default;
};

struct TrainRunConfig {
  std::size_t epochs = 150;
  std::size_t batch = 64;
  double lr = 1e-3;
  double aux_ratio = 0.1;
  Ablation ablation;
  /// Seeds both the model initialization and the per-epoch shuffles.
  std::uint64_t seed = 1;
  nn::TriCamConfig network;

  void validate() const;
  double effective_aux_ratio() const { return ablation.no_intra_validation ? 0.0 : aux_ratio; }
};

nlohmann::json run_config_to_json(const TrainRunConfig& cfg);
/// Missing keys keep their defaults. "drop_camera" is 1-based in documents
/// (0 = none), matching the CLI.
TrainRunConfig run_config_from_json(const nlohmann::json& doc);
TrainRunConfig load_run_config(const std::filesystem::path& path);

nn::ForwardOptions forward_options(const Ablation& a);
nn::BatchOptions batch_options(const Ablation& a);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based; 0 is the untrained model
  double train_main = 0.0;
  double train_joint = 0.0;
  double val_cm = 0.0;
};

struct TrainResult {
  nn::TriCamModel model;  // parameters with the lowest validation error
  std::size_t best_epoch = 0;
  double best_val_cm = 0.0;
  std::vector<EpochRecord> curves;  // curves[0] is the untrained model
};

/// Called with every training batch before its step.
using BatchHook = std::function<void(std::size_t epoch, const nn::BatchInput&)>;

/// Throws Error(kDiverged) naming the epoch when a loss goes non-finite.
TrainResult train_model(std::span<const synth::Sample> train, std::span<const synth::Sample> val,
                        const Rig& rig, const TrainRunConfig& cfg, const BatchHook& hook = {});

struct EvalOptions {
  Ablation ablation;
  /// Exponential moving average over consecutive predictions, off by default.
  bool smoothing = false;
  double smoothing_alpha = 0.5;
  std::size_t chunk = 256;
};

struct EvalReport {
  std::vector<geometry::PixelPoint> predicted;
  std::vector<geometry::PixelPoint> targets;
  std::vector<double> errors_cm;
  double mean_cm = 0.0;
  double median_cm = 0.0;
};

std::vector<geometry::PixelPoint> predict_pixels(const nn::TriCamModel& model,
                                                 std::span<const synth::Sample> samples,
                                                 const Rig& rig, const EvalOptions& opts = {});

/// Per-sample cm distance between predicted and target pixels. Throws
/// Error(kEmptyDataset) for empty input.
EvalReport score_predictions(std::vector<geometry::PixelPoint> predicted,
                             std::vector<geometry::PixelPoint> targets,
                             const geometry::ScreenModel& screen, const EvalOptions& opts = {});

EvalReport evaluate(const nn::TriCamModel& model, std::span<const synth::Sample> test,
                    const Rig& rig, const EvalOptions& opts = {});

struct AngleScenario {
  double theta_deg = 0.0;
  double distance_cm = 50.0;
  double dx_cm = 0.0;  // distance_cm * tan(theta)
};

inline constexpr double kDefaultAngles[] = {-30, -20, -10, -5, 0, 5, 10, 20, 30};

std::vector<AngleScenario> angle_scenarios(std::span<const double> thetas_deg,
                                           double distance_cm = 50.0);

/// Scene for one angle: head centered dx_cm right of the screen center at
/// distance_cm, with the base config's remaining variation.
synth::SceneConfig angle_scene(const synth::SceneConfig& base, const AngleScenario& s);

struct AngleResult {
  AngleScenario scenario;
  std::size_t samples = 0;
  double mean_cm = 0.0;
  double median_cm = 0.0;
};

/// Fresh test set of n samples per angle, seeded by (seed, angle index).
std::vector<AngleResult> angle_sweep(const nn::TriCamModel& model,
                                     std::span<const AngleScenario> scenarios,
                                     const synth::SceneConfig& base, std::size_t n,
                                     std::uint64_t seed, const EvalOptions& opts = {});

struct HeatmapGrid {
  std::size_t bin_px = 0;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::vector<double> mean_cm;  // row-major [rows][cols], 0 for empty bins
  std::vector<std::size_t> counts;
  double global_mean_cm = 0.0;

  double weighted_mean() const;
};

/// Bins by true target pixel; the last row/column is narrower when bin_px
/// does not divide the screen.
HeatmapGrid spatial_heatmap(const EvalReport& report, const geometry::ScreenModel& screen,
                            std::size_t bin_px);

/// Binary graymap, one pixel per bin, brighter = larger error.
void write_pgm(const HeatmapGrid& grid, const std::filesystem::path& path);

struct Experiment {
  Samples train, val, test;
  Rig rig;
};

Experiment make_experiment(std::span<const synth::Sample> samples, const Rig& rig,
                           const SplitSpec& spec);

enum class Variant {
  kFull,
  kNoIntraValidation,
  kNoWeightedFusion,
  kDropCamera1,
  kDropCamera2,
  kDropCamera3
};

inline constexpr Variant kAllVariants[] = {Variant::kFull,        Variant::kNoIntraValidation,
                                           Variant::kNoWeightedFusion, Variant::kDropCamera1,
                                           Variant::kDropCamera2, Variant::kDropCamera3};

std::string_view to_string(Variant v);
/// Accepts the names from to_string. Throws Error(kInvalidArgument).
Variant parse_variant(std::string_view name);
Ablation ablation_for(Variant v);

/// Median of the values, mean of the middle two for even counts.
double median(std::vector<double> values);

struct SweepRow {
  std::string label;
  double value = 0.0;  // aux ratio or implicit percentage, when meaningful
  std::vector<double> per_seed_cm;
  double median_cm = 0.0;
  double delta_pct = 0.0;  // relative to the first row
};

/// Trains and tests every (variant, seed) pair. Runs are independent and
/// execute in parallel.
std::vector<SweepRow> ablation_suite(const Experiment& data, const TrainRunConfig& base,
                                     std::span<const std::uint64_t> seeds,
                                     std::span<const Variant> variants = kAllVariants);

std::vector<SweepRow> aux_ratio_sweep(const Experiment& data, const TrainRunConfig& base,
                                      std::span<const double> ratios,
                                      std::span<const std::uint64_t> seeds);

/// Per-axis Gaussian sigma (cm) whose radial mean is mean_offset_cm.
double implicit_noise_sigma(double mean_offset_cm);

/// Copies of the samples whose target pixel carries isotropic Gaussian
/// noise of the given per-axis sigma, clamped to the screen.
Samples implicit_labels(std::span<const synth::Sample> samples, const geometry::ScreenModel& screen,
                        double sigma_cm, std::uint64_t seed);

/// Training set with a seeded choice of round(pct% of n) samples replaced by
/// their implicit counterparts.
Samples mix_training_set(std::span<const synth::Sample> explicit_set,
                         std::span<const synth::Sample> implicit_set, double pct,
                         std::uint64_t seed);

inline constexpr double kImplicitAlignmentCm = 3.28;

std::vector<SweepRow> mix_experiment(const Experiment& data, std::span<const double> pcts,
                                     const TrainRunConfig& base,
                                     std::span<const std::uint64_t> seeds,
                                     double mean_offset_cm = kImplicitAlignmentCm);

// Tab-separated reports.
std::string curves_table(const std::vector<EpochRecord>& curves);
std::string eval_table(const EvalReport& r);
std::string angle_table(const std::vector<AngleResult>& rows);
std::string heatmap_table(const HeatmapGrid& grid);
std::string sweep_table(const std::vector<SweepRow>& rows, std::string_view value_name);

}  // namespace tricam::harness
