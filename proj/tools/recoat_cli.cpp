#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "recoat/datagen.hpp"
#include "recoat/error.hpp"
#include "recoat/metrics.hpp"
#include "recoat/raster.hpp"
#include "recoat/scene_io.hpp"
#include "recoat/trainer.hpp"

namespace fs = std::filesystem;
using namespace recoat;

namespace {

struct GenerateArgs {
  std::string out_dir;
  int count = 100;
  std::uint64_t seed = 0;
  std::vector<std::string> intents;
  double speed_min = 2.0, speed_max = 8.0;
  int neighbors_min = 0, neighbors_max = 12;
  double noise = 0.1;
  std::string agent_type = "vehicle";
};

int run_generate(const GenerateArgs& a) {
  DatasetConfig cfg;
  cfg.out_dir = a.out_dir;
  cfg.count = a.count;
  cfg.seed = a.seed;
  if (!a.intents.empty()) {
    cfg.intents.clear();
    for (const std::string& s : a.intents) cfg.intents.push_back(parse_intent(s));
  }
  cfg.speed_min = a.speed_min;
  cfg.speed_max = a.speed_max;
  cfg.neighbors_min = a.neighbors_min;
  cfg.neighbors_max = a.neighbors_max;
  cfg.noise_sigma = a.noise;
  cfg.target_type = parse_agent_type(a.agent_type);
  const auto entries = generate_dataset(cfg);
  std::cout << "wrote " << entries.size() << " scenes to " << a.out_dir << "\n";
  return 0;
}

struct RasterizeArgs {
  std::string input;
  std::string output;
  std::string palette_path;
  std::string agent_type = "vehicle";
};

int run_rasterize(const RasterizeArgs& a) {
  const RasterPalette palette = a.palette_path.empty()
                                    ? RasterPalette{}
                                    : load_palette(a.palette_path);
  const AgentType type = parse_agent_type(a.agent_type);
  auto rasterize_one = [&](const std::string& scene_path,
                           const std::string& out_path) {
    Scene scene = read_scene(scene_path);
    validate_scene(scene);
    export_image(rasterize(to_target_frame(scene), type, palette), out_path);
  };
  if (fs::is_directory(a.input)) {
    fs::create_directories(a.output);
    std::size_t count = 0;
    for (const std::string& p : manifest_scene_paths(a.input)) {
      Scene scene = read_scene(p);
      validate_scene(scene);
      const fs::path out = fs::path(a.output) / (scene.scenario_id + ".ppm");
      export_image(rasterize(to_target_frame(scene), type, palette),
                   out.string());
      ++count;
    }
    std::cout << "rasterized " << count << " scenes into " << a.output << "\n";
  } else {
    rasterize_one(a.input, a.output);
    std::cout << "wrote " << a.output << "\n";
  }
  return 0;
}

struct TrainArgs {
  std::string data_dir;
  std::string out_dir;
  std::string config_path;
  std::string resume;
  std::string agent_type;
  double lr = -1.0, decay = -1.0;
  int epochs = -1, batch_size = -1, threads = -1;
  std::int64_t seed = -1;
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg = a.config_path.empty() ? TrainConfig{}
                                          : load_train_config(a.config_path);
  if (!a.agent_type.empty()) cfg.agent_type = parse_agent_type(a.agent_type);
  if (a.lr > 0.0) cfg.learning_rate = a.lr;
  if (a.decay > 0.0) cfg.decay = a.decay;
  if (a.epochs > 0) cfg.epochs = a.epochs;
  if (a.batch_size > 0) cfg.batch_size = a.batch_size;
  if (a.threads > 0) cfg.threads = a.threads;
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  cfg.model.agent_type = cfg.agent_type;
  const TrainResult r = train(cfg, a.data_dir, a.out_dir, a.resume);
  std::cout << "trained " << r.epochs_run << " epochs; last checkpoint "
            << r.last_checkpoint << "\n";
  return 0;
}

struct PredictArgs {
  std::string checkpoint;
  std::string data;
  std::string output;
  std::string agent_type = "vehicle";
  std::uint64_t seed = 0;
  int threads = 0;
};

int run_predict(const PredictArgs& a) {
  ModelConfig mc;
  mc.agent_type = parse_agent_type(a.agent_type);
  RecoatModel model(mc, a.seed);
  load_params(a.checkpoint, model.params());
  std::vector<Scene> scenes;
  for (const std::string& p : manifest_scene_paths(a.data))
    scenes.push_back(read_scene(p));
  const auto records = predict_scenes(model, scenes, RasterPalette{}, a.threads);
  write_predictions(a.output, records);
  std::cout << "wrote " << records.size() << " predictions to " << a.output
            << "\n";
  return 0;
}

struct EvalArgs {
  std::string predictions;
  std::string data;
  std::string output;
  bool horizons = false;
};

int run_eval(const EvalArgs& a) {
  std::vector<Scene> scenes;
  for (const std::string& p : manifest_scene_paths(a.data))
    scenes.push_back(read_scene(p));
  const auto preds = read_predictions(a.predictions);
  const auto records = build_eval_records(scenes, preds);
  const auto rows = compute_metrics(records, a.horizons);
  write_metrics_csv(a.output, rows);
  for (const MetricsRow& r : rows)
    std::cout << r.metric << " = " << r.value << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ReCoAt multi-modal motion prediction pipeline"};
  app.require_subcommand(1);

  GenerateArgs gen;
  CLI::App* cgen = app.add_subcommand("generate", "synthesize a scene dataset");
  cgen->add_option("--out", gen.out_dir, "output directory")->required();
  cgen->add_option("--count", gen.count, "number of scenes");
  cgen->add_option("--seed", gen.seed, "dataset seed");
  cgen->add_option("--intents", gen.intents,
                   "intent cycle (straight left_turn right_turn stop)");
  cgen->add_option("--speed-min", gen.speed_min, "min initial speed m/s");
  cgen->add_option("--speed-max", gen.speed_max, "max initial speed m/s");
  cgen->add_option("--neighbors-min", gen.neighbors_min, "min neighbor count");
  cgen->add_option("--neighbors-max", gen.neighbors_max, "max neighbor count");
  cgen->add_option("--noise", gen.noise, "waypoint noise sigma in meters");
  cgen->add_option("--agent-type", gen.agent_type, "target agent type");

  RasterizeArgs ras;
  CLI::App* cras = app.add_subcommand("rasterize", "scene file(s) -> PPM image(s)");
  cras->add_option("--in", ras.input, "scene file or dataset directory")->required();
  cras->add_option("--out", ras.output, "output image file or directory")->required();
  cras->add_option("--palette", ras.palette_path, "palette config file");
  cras->add_option("--agent-type", ras.agent_type, "target agent type");

  TrainArgs tr;
  CLI::App* ctr = app.add_subcommand("train", "train a type-specific model");
  ctr->add_option("--data", tr.data_dir, "dataset directory")->required();
  ctr->add_option("--out", tr.out_dir, "output directory")->required();
  ctr->add_option("--config", tr.config_path, "JSON config file");
  ctr->add_option("--resume", tr.resume, "checkpoint to resume from");
  ctr->add_option("--agent-type", tr.agent_type, "target agent type");
  ctr->add_option("--lr", tr.lr, "initial learning rate");
  ctr->add_option("--decay", tr.decay, "per-epoch lr decay factor");
  ctr->add_option("--epochs", tr.epochs, "training epochs");
  ctr->add_option("--batch-size", tr.batch_size, "batch size");
  ctr->add_option("--threads", tr.threads, "worker threads");
  ctr->add_option("--seed", tr.seed, "training seed");

  PredictArgs pr;
  CLI::App* cpr = app.add_subcommand("predict", "checkpoint + scenes -> predictions");
  cpr->add_option("--checkpoint", pr.checkpoint, "model checkpoint")->required();
  cpr->add_option("--data", pr.data, "scene file or dataset directory")->required();
  cpr->add_option("--out", pr.output, "predictions file")->required();
  cpr->add_option("--agent-type", pr.agent_type, "target agent type");
  cpr->add_option("--threads", pr.threads, "worker threads");

  EvalArgs ev;
  CLI::App* cev = app.add_subcommand("eval", "predictions + scenes -> metrics CSV");
  cev->add_option("--predictions", ev.predictions, "predictions file")->required();
  cev->add_option("--data", ev.data, "scene file or dataset directory")->required();
  cev->add_option("--out", ev.output, "metrics CSV path")->required();
  cev->add_flag("--horizons", ev.horizons, "also report 3/5/8 s horizons");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help exits 0, usage errors exit 1
  }

  try {
    if (cgen->parsed()) return run_generate(gen);
    if (cras->parsed()) return run_rasterize(ras);
    if (ctr->parsed()) return run_train(tr);
    if (cpr->parsed()) return run_predict(pr);
    if (cev->parsed()) return run_eval(ev);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
