// tricam: dataset generation, training, evaluation and click-log replay.
//
// Every subcommand writes its artifacts plus run_manifest.json into --out,
// prints diagnostics on stderr and one summary line on stdout.

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tricam/clickcalib.hpp"
#include "tricam/dataset.hpp"
#include "tricam/error.hpp"
#include "tricam/harness.hpp"
#include "tricam/hash.hpp"
#include "tricam/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tricam;

namespace {

struct Manifest {
  std::string subcommand;
  json config = json::object();
  std::uint64_t seed = 0;
  json inputs = json::object();
  json outputs = json::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void input(const std::string& name, const fs::path& p) {
    inputs[name] = {{"path", p.string()}, {"hash", hash_file(p)}};
  }
  void output(const std::string& name, const fs::path& p) {
    outputs[name] = {{"path", p.string()}, {"hash", hash_file(p)}};
  }
  void write(const fs::path& out_dir) const {
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const json doc = {{"subcommand", subcommand}, {"config", config},   {"seed", seed},
                      {"inputs", inputs},         {"outputs", outputs}, {"seconds", seconds}};
    io::write_atomically(out_dir / "run_manifest.json", doc.dump(2) + "\n");
  }
};

void write_text(const fs::path& path, const std::string& text) { io::write_atomically(path, text); }

json read_json(const fs::path& path) {
  try {
    return json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kMalformed, path.string() + ": " + e.what());
  }
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::istringstream field(item);
    T v;
    if (!(field >> v) || !(field >> std::ws).eof()) {
      throw Error(ErrorKind::kInvalidArgument, std::string("bad ") + what + " '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorKind::kInvalidArgument, std::string("empty ") + what + " list");
  return out;
}

bool same_rig(const Rig& a, const Rig& b) { return rig_to_json(a) == rig_to_json(b); }

// ---- gen

struct GenArgs {
  std::string config, out;
  std::size_t n = 100;
  std::uint64_t seed = 0;
};

int run_gen(const GenArgs& a) {
  Manifest m;
  m.subcommand = "gen";
  m.seed = a.seed;
  synth::SceneConfig scene = synth::default_scene();
  if (!a.config.empty()) {
    scene = synth::load_scene(a.config);
    m.input("config", a.config);
  }
  const fs::path out(a.out);
  fs::create_directories(out);
  const synth::Dataset ds = synth::gen_dataset(scene, a.n, a.seed, out);
  m.config = {{"scene", synth::scene_to_json(scene)}, {"n", a.n}};
  m.output("manifest", out / "manifest.json");
  m.output("samples", out / "samples.bin");
  m.write(out);
  std::cout << "gen: " << a.n << " samples, hash " << ds.samples_hash << "\n";
  return 0;
}

// ---- train

struct TrainArgs {
  std::string data, config, out;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::uint64_t split_seed = 0;
};

int run_train(const TrainArgs& a) {
  Manifest m;
  m.subcommand = "train";
  harness::TrainRunConfig cfg;
  if (!a.config.empty()) {
    cfg = harness::load_run_config(a.config);
    m.input("config", a.config);
  }
  if (a.epochs) cfg.epochs = a.epochs;
  if (a.seed_set) cfg.seed = a.seed;
  cfg.validate();
  m.seed = cfg.seed;

  const synth::Dataset ds = synth::load_dataset(a.data);
  m.input("samples", fs::path(a.data) / "samples.bin");
  harness::SplitSpec spec;
  spec.seed = a.split_seed;
  const harness::Experiment ex = harness::make_experiment(ds.samples, ds.scene.rig, spec);
  std::cerr << "train: " << ex.train.size() << "/" << ex.val.size() << "/" << ex.test.size()
            << " samples, " << cfg.epochs << " epochs\n";

  const harness::TrainResult r = harness::train_model(
      ex.train, ex.val, ex.rig, cfg, [&](std::size_t epoch, const nn::BatchInput&) {
        static std::size_t last = 0;
        if (epoch != last) {
          last = epoch;
          std::cerr << "epoch " << epoch << "\n";
        }
      });

  const fs::path out(a.out);
  fs::create_directories(out);
  const json extra = {{"run_config", harness::run_config_to_json(cfg)},
                      {"split_seed", a.split_seed},
                      {"best_epoch", r.best_epoch},
                      {"best_val_cm", r.best_val_cm},
                      {"dataset_hash", ds.samples_hash}};
  nn::save_checkpoint(out / "model.ckpt", r.model, ex.rig, extra);
  write_text(out / "curves.tsv", harness::curves_table(r.curves));
  m.config = {{"run", harness::run_config_to_json(cfg)}, {"split_seed", a.split_seed}};
  m.output("model", out / "model.ckpt");
  m.output("curves", out / "curves.tsv");
  m.write(out);
  std::cout << "train: best epoch " << r.best_epoch << ", val " << r.best_val_cm << " cm\n";
  return 0;
}

// ---- eval

struct EvalArgs {
  std::string model, data, out, config;
  std::string angles, ablate, mix_pct, seeds = "1,2,3";
  std::size_t heatmap_bin = 0;
  std::size_t n = 200;
  std::size_t epochs = 0;
  std::uint64_t seed = 0;
};

int run_eval(const EvalArgs& a) {
  Manifest m;
  m.subcommand = "eval";
  m.seed = a.seed;
  const nn::Checkpoint ck = nn::load_checkpoint(a.model);
  m.input("model", a.model);
  const synth::Dataset ds = synth::load_dataset(a.data);
  m.input("samples", fs::path(a.data) / "samples.bin");
  if (!same_rig(ck.rig, ds.scene.rig)) {
    throw Error(ErrorKind::kConfigMismatch, "checkpoint rig does not match the dataset rig");
  }

  harness::TrainRunConfig run;
  if (ck.extra.contains("run_config")) run = harness::run_config_from_json(ck.extra["run_config"]);
  if (!a.config.empty()) {
    run = harness::load_run_config(a.config);
    m.input("config", a.config);
  }
  if (a.epochs) run.epochs = a.epochs;
  harness::SplitSpec spec;
  spec.seed = ck.extra.value("split_seed", std::uint64_t{0});
  const harness::Experiment ex = harness::make_experiment(ds.samples, ds.scene.rig, spec);

  const fs::path out(a.out);
  fs::create_directories(out);
  harness::EvalOptions opts;
  opts.ablation = run.ablation;
  const harness::EvalReport r = harness::evaluate(ck.model, ex.test, ex.rig, opts);
  write_text(out / "eval.tsv", harness::eval_table(r));
  m.output("eval", out / "eval.tsv");
  json cfg = {{"split_seed", spec.seed}, {"test_samples", ex.test.size()}};

  if (!a.angles.empty()) {
    const auto thetas = a.angles == "default"
                            ? std::vector<double>(std::begin(harness::kDefaultAngles),
                                                  std::end(harness::kDefaultAngles))
                            : parse_list<double>(a.angles, "angle");
    const auto scenarios = harness::angle_scenarios(thetas);
    const auto rows = harness::angle_sweep(ck.model, scenarios, ds.scene, a.n, a.seed, opts);
    write_text(out / "angles.tsv", harness::angle_table(rows));
    m.output("angles", out / "angles.tsv");
    cfg["angles"] = thetas;
    cfg["angle_samples"] = a.n;
  }
  if (a.heatmap_bin) {
    const auto grid = harness::spatial_heatmap(r, ex.rig.screen, a.heatmap_bin);
    write_text(out / "heatmap.tsv", harness::heatmap_table(grid));
    harness::write_pgm(grid, out / "heatmap.pgm");
    m.output("heatmap", out / "heatmap.tsv");
    m.output("heatmap_pgm", out / "heatmap.pgm");
    cfg["heatmap_bin"] = a.heatmap_bin;
    std::cerr << "heatmap: " << grid.cols << "x" << grid.rows << " bins\n";
  }
  if (!a.ablate.empty() || !a.mix_pct.empty()) {
    cfg["run"] = harness::run_config_to_json(run);
    cfg["seeds"] = parse_list<std::uint64_t>(a.seeds, "seed");
  }
  if (!a.ablate.empty()) {
    std::vector<harness::Variant> variants;
    if (a.ablate == "all") {
      variants.assign(std::begin(harness::kAllVariants), std::end(harness::kAllVariants));
    } else {
      std::stringstream in(a.ablate);
      std::string name;
      while (std::getline(in, name, ',')) variants.push_back(harness::parse_variant(name));
    }
    const auto seeds = parse_list<std::uint64_t>(a.seeds, "seed");
    const auto rows = harness::ablation_suite(ex, run, seeds, variants);
    write_text(out / "ablation.tsv", harness::sweep_table(rows, "variant"));
    m.output("ablation", out / "ablation.tsv");
    cfg["ablate"] = a.ablate;
  }
  if (!a.mix_pct.empty()) {
    const auto pcts = parse_list<double>(a.mix_pct, "percentage");
    const auto seeds = parse_list<std::uint64_t>(a.seeds, "seed");
    const auto rows = harness::mix_experiment(ex, pcts, run, seeds);
    write_text(out / "mix.tsv", harness::sweep_table(rows, "implicit_pct"));
    m.output("mix", out / "mix.tsv");
    cfg["mix_pct"] = pcts;
  }
  m.config = cfg;
  m.write(out);
  std::cout << "eval: " << r.errors_cm.size() << " samples, mean " << r.mean_cm << " cm, median "
            << r.median_cm << " cm\n";
  return 0;
}

// ---- clickfilter

struct ClickArgs {
  std::string log, criteria, gaze, rig, out;
};

int run_clickfilter(const ClickArgs& a) {
  Manifest m;
  m.subcommand = "clickfilter";
  click::FilterCriteria criteria;
  if (!a.criteria.empty()) {
    criteria = click::load_criteria(a.criteria);
    m.input("criteria", a.criteria);
  }
  geometry::ScreenModel screen = geometry::reference_screen();
  if (!a.rig.empty()) {
    screen = load_rig(a.rig).screen;
    m.input("rig", a.rig);
  }
  const auto log = click::load_log(a.log);
  m.input("log", a.log);
  std::vector<click::GazePoint> gaze;
  if (!a.gaze.empty()) {
    gaze = click::gaze_stream(click::load_log(a.gaze));
    m.input("gaze", a.gaze);
  } else {
    gaze = click::gaze_stream(log);
  }
  const auto report = click::alignment_report(log, gaze, criteria, screen);

  const fs::path out(a.out);
  fs::create_directories(out);
  write_text(out / "report.tsv", click::report_table(report));
  write_text(out / "report.json", click::report_json(report).dump(2) + "\n");
  write_text(out / "samples.tsv", click::samples_table(report));
  m.config = {{"criteria", click::criteria_to_json(criteria)},
              {"screen",
               {{"width_px", screen.width_px},
                {"height_px", screen.height_px},
                {"width_cm", screen.width_cm},
                {"height_cm", screen.height_cm}}}};
  m.output("report", out / "report.tsv");
  m.output("report_json", out / "report.json");
  m.output("samples", out / "samples.tsv");
  m.write(out);
  std::cout << "clickfilter: stages " << report.raw.count << " " << report.after_a.count << " "
            << report.after_b.count << " " << report.after_c.count << ", " << report.samples.size()
            << " samples\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tri-camera gaze tracking toolkit"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic dataset");
  g->add_option("--config", gen.config, "Scene config (JSON); default scene when omitted");
  g->add_option("--n", gen.n, "Number of samples")->required();
  g->add_option("--seed", gen.seed, "Generation seed");
  g->add_option("--out", gen.out, "Output dataset directory")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--data", train.data, "Dataset directory")->required();
  t->add_option("--config", train.config, "Run config (JSON)");
  t->add_option("--epochs", train.epochs, "Override epochs");
  auto* seed_opt = t->add_option("--seed", train.seed, "Override run seed");
  t->add_option("--split-seed", train.split_seed, "Shuffle seed of the 70/10/20 split");
  t->add_option("--out", train.out, "Output directory")->required();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint and run experiments");
  e->add_option("--model", eval.model, "Checkpoint")->required();
  e->add_option("--data", eval.data, "Dataset directory")->required();
  e->add_option("--out", eval.out, "Output directory")->required();
  e->add_option("--config", eval.config, "Run config for --ablate/--mix-pct training");
  e->add_option("--angles", eval.angles, "Comma-separated angles in degrees, or 'default'");
  e->add_option("--n", eval.n, "Samples per angle");
  e->add_option("--heatmap-bin", eval.heatmap_bin, "Heatmap bin size in pixels");
  e->add_option("--ablate", eval.ablate, "'all' or comma-separated variants");
  e->add_option("--mix-pct", eval.mix_pct, "Comma-separated implicit-label percentages");
  e->add_option("--seeds", eval.seeds, "Comma-separated training seeds for --ablate/--mix-pct");
  e->add_option("--epochs", eval.epochs, "Override epochs for --ablate/--mix-pct");
  e->add_option("--seed", eval.seed, "Seed for generated angle test sets");

  ClickArgs clk;
  auto* c = app.add_subcommand("clickfilter", "Replay a usage log through the click filters");
  c->add_option("--log", clk.log, "Event log")->required();
  c->add_option("--criteria", clk.criteria, "Filter criteria (JSON)");
  c->add_option("--gaze", clk.gaze, "Separate gaze log; gaze events of --log otherwise");
  c->add_option("--rig", clk.rig, "Rig document for the screen; reference screen otherwise");
  c->add_option("--out", clk.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);
  train.seed_set = seed_opt->count() > 0;

  try {
    if (g->parsed()) return run_gen(gen);
    if (t->parsed()) return run_train(train);
    if (e->parsed()) return run_eval(eval);
    if (c->parsed()) return run_clickfilter(clk);
  } catch (const std::exception& ex) {
    std::cerr << "tricam: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}
