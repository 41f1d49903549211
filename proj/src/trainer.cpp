#include "recoat/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "recoat/error.hpp"
#include "recoat/scene_io.hpp"

namespace recoat {

using nlohmann::json;
namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ValueError("learning rate must be positive");
  if (!(decay > 0.0 && decay <= 1.0)) throw ValueError("decay must be in (0,1]");
  if (epochs < 1) throw ValueError("epochs must be >= 1");
  if (batch_size < 1) throw ValueError("batch size must be >= 1");
  loss.validate();
}

double epoch_learning_rate(const TrainConfig& cfg, int epoch) {
  return cfg.learning_rate * std::pow(cfg.decay, epoch);
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("config parse error: ") + e.what());
  }
  TrainConfig cfg;
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.decay = j.value("decay", cfg.decay);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.grad_clip = j.value("grad_clip", cfg.grad_clip);
  cfg.grad_clip_norm = j.value("grad_clip_norm", cfg.grad_clip_norm);
  if (j.contains("agent_type"))
    cfg.agent_type = parse_agent_type(j["agent_type"].get<std::string>());
  cfg.loss.lambda = j.value("lambda", cfg.loss.lambda);
  cfg.model.dropout_rate = j.value("dropout_rate", cfg.model.dropout_rate);
  cfg.model.attention.alpha = j.value("alpha", cfg.model.attention.alpha);
  cfg.model.agent_type = cfg.agent_type;
  cfg.validate();
  return cfg;
}

void save_train_config(const std::string& path, const TrainConfig& cfg) {
  json j{{"learning_rate", cfg.learning_rate},
         {"decay", cfg.decay},
         {"epochs", cfg.epochs},
         {"batch_size", cfg.batch_size},
         {"seed", cfg.seed},
         {"threads", cfg.threads},
         {"grad_clip", cfg.grad_clip},
         {"grad_clip_norm", cfg.grad_clip_norm},
         {"agent_type", to_string(cfg.agent_type)},
         {"lambda", cfg.loss.lambda},
         {"dropout_rate", cfg.model.dropout_rate},
         {"alpha", cfg.model.attention.alpha}};
  std::ofstream os(path);
  if (!os) throw IoError("cannot open config for writing: " + path);
  os << j.dump(2) << "\n";
}

ExampleResult train_example(const RecoatModel& model, const ModelInputs& in,
                            const LossConfig& loss_cfg, std::uint64_t seed,
                            int epoch, std::size_t example_index) {
  if (in.gt_future.empty())
    throw ValueError("train_example: input lacks ground truth");
  Rng dropout_rng(derive_seed(seed, 0x64726f70 + static_cast<std::uint64_t>(epoch),
                              example_index));
  Graph g;
  ForwardResult fw = model.forward(g, in, Mode::train, &dropout_rng);
  LossVars lv =
      total_loss_graph(g, fw, in.gt_future, in.target_speed, loss_cfg);
  ExampleResult out;
  out.traj = lv.traj.value()[0];
  out.score = lv.score.value()[0];
  out.total = lv.total.value()[0];
  out.winner = lv.winner;
  if (!std::isfinite(out.total))
    throw ValueError("non-finite training loss");
  g.backward(lv.total.id);
  out.grads = g.harvest_grads();
  return out;
}

namespace {

struct LoadedDataset {
  std::vector<ModelInputs> inputs;
  std::vector<std::string> ids;
};

LoadedDataset load_dataset(const std::vector<std::string>& paths,
                           const ModelConfig& cfg, int threads) {
  LoadedDataset out;
  out.inputs.resize(paths.size());
  out.ids.resize(paths.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string error_msg;
  std::mutex error_mutex;
  auto worker = [&]() {
    RasterPalette palette;
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= paths.size() || failed.load()) break;
      try {
        Scene scene = read_scene(paths[i]);
        validate_scene(scene);
        Scene local = to_target_frame(scene);
        out.inputs[i] = build_inputs(local, cfg, palette);
        out.ids[i] = scene.scenario_id;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(error_mutex);
        failed = true;
        error_msg = paths[i] + ": " + e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failed) throw Error("failed to load dataset: " + error_msg);
  return out;
}

void accumulate(GradMap& total, const GradMap& part) {
  if (total.empty()) {
    total = part;
    return;
  }
  for (auto& [name, t] : total) {
    const Tensor& p = part.at(name);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += p[i];
  }
}

void scale_grads(GradMap& grads, double factor) {
  for (auto& [name, t] : grads)
    for (std::size_t i = 0; i < t.size(); ++i) t[i] *= factor;
}

void clip_grads(GradMap& grads, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, t] : grads)
    for (std::size_t i = 0; i < t.size(); ++i) sq += t[i] * t[i];
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) scale_grads(grads, max_norm / norm);
}

int resolve_threads(int configured) {
  if (configured > 0) return configured;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

std::string checkpoint_name(int epoch) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "checkpoint_epoch_%04d.rcat", epoch);
  return buf;
}

}  // namespace

std::vector<std::string> manifest_scene_paths(const std::string& data_dir) {
  const fs::path dir(data_dir);
  const fs::path manifest = dir / kManifestName;
  std::vector<std::string> paths;
  if (fs::exists(manifest)) {
    for (const ManifestEntry& e : read_manifest(manifest.string()))
      paths.push_back((dir / e.path).string());
  } else if (fs::is_regular_file(dir)) {
    paths.push_back(data_dir);
  } else {
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.path().extension() == ".json" &&
          entry.path().filename() != kManifestName)
        paths.push_back(entry.path().string());
    std::sort(paths.begin(), paths.end());
  }
  if (paths.empty()) throw ValueError("no scenes found in " + data_dir);
  return paths;
}

TrainResult train(const TrainConfig& cfg, const std::string& data_dir,
                  const std::string& out_dir,
                  const std::string& resume_checkpoint) {
  cfg.validate();
  ModelConfig model_cfg = cfg.model;
  model_cfg.agent_type = cfg.agent_type;
  const int threads = resolve_threads(cfg.threads);

  const std::vector<std::string> paths = manifest_scene_paths(data_dir);
  LoadedDataset data = load_dataset(paths, model_cfg, threads);
  const std::size_t n = data.inputs.size();

  RecoatModel model(model_cfg, cfg.seed);
  Nadam optimizer;
  optimizer.init(model.params());

  int start_epoch = 0;
  if (!resume_checkpoint.empty()) {
    load_params(resume_checkpoint, model.params());
    NamedTensors state = read_checkpoint(resume_checkpoint + ".opt");
    NamedTensors opt_state;
    for (auto& [name, t] : state) {
      if (name == "__epoch__")
        start_epoch = static_cast<int>(t[0]) + 1;
      else
        opt_state.emplace_back(name, std::move(t));
    }
    optimizer.load_state(opt_state, model.params());
  }

  fs::create_directories(out_dir);
  save_train_config((fs::path(out_dir) / "train_config.json").string(), cfg);
  const std::string log_path = (fs::path(out_dir) / "training_log.csv").string();
  std::ofstream log(log_path, start_epoch == 0 ? std::ios::trunc : std::ios::app);
  if (!log) throw IoError("cannot open training log: " + log_path);
  if (start_epoch == 0) {
    log << "epoch,batch,traj_loss,score_loss,total_loss";
    for (int j = 0; j < model_cfg.k_modes; ++j) log << ",win" << j;
    log << "\n";
  }
  log.precision(17);

  TrainResult result;
  for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
    const double lr = epoch_learning_rate(cfg, epoch);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(cfg.seed, 0x73687566,
                                static_cast<std::uint64_t>(epoch)));
    shuffle_rng.shuffle(order);

    std::size_t cursor = 0;
    int batch_index = 0;
    while (cursor < n) {
      const std::size_t batch_count =
          std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                n - cursor);
      std::vector<ExampleResult> results(batch_count);
      GradMap batch_grads;
      double traj = 0.0, score = 0.0, total = 0.0;
      std::vector<long> winners(static_cast<std::size_t>(model_cfg.k_modes), 0);

      // waves of `threads` examples; accumulation stays in example order so
      // results are independent of the thread count
      std::size_t wave_start = 0;
      while (wave_start < batch_count) {
        const std::size_t wave =
            std::min<std::size_t>(static_cast<std::size_t>(threads),
                                  batch_count - wave_start);
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(wave);
        for (std::size_t w = 0; w < wave; ++w)
          pool.emplace_back([&, w]() {
            const std::size_t bi = wave_start + w;
            try {
              results[bi] = train_example(
                  model, data.inputs[order[cursor + bi]], cfg.loss, cfg.seed,
                  epoch, cursor + bi);
            } catch (...) {
              errors[w] = std::current_exception();
            }
          });
        for (auto& th : pool) th.join();
        for (auto& err : errors)
          if (err) std::rethrow_exception(err);
        for (std::size_t w = 0; w < wave; ++w) {
          ExampleResult& r = results[wave_start + w];
          accumulate(batch_grads, r.grads);
          r.grads.clear();
          traj += r.traj;
          score += r.score;
          total += r.total;
          ++winners[static_cast<std::size_t>(r.winner)];
        }
        wave_start += wave;
      }

      const double inv = 1.0 / static_cast<double>(batch_count);
      scale_grads(batch_grads, inv);
      if (cfg.grad_clip) clip_grads(batch_grads, cfg.grad_clip_norm);
      optimizer.step(model.params(), batch_grads, lr);

      log << epoch << "," << batch_index << "," << traj * inv << ","
          << score * inv << "," << total * inv;
      for (long w : winners) log << "," << w;
      log << "\n";
      result.final_total_loss = total * inv;
      cursor += batch_count;
      ++batch_index;
    }

    // the epoch-boundary state is canonically float32 (checkpoint precision),
    // which makes resumed runs bit-identical to uninterrupted ones
    for (const std::string& name : model.params().names())
      round_to_f32(model.params().at(name));
    optimizer.round_state_to_f32();

    const std::string ckpt =
        (fs::path(out_dir) / checkpoint_name(epoch)).string();
    save_params(ckpt, model.params());
    NamedTensors state = optimizer.state();
    state.emplace_back("__epoch__",
                       Tensor::scalar(static_cast<double>(epoch)));
    write_checkpoint(ckpt + ".opt", state);
    result.last_checkpoint = ckpt;
    result.epochs_run = epoch + 1;
    log.flush();
  }
  return result;
}

std::vector<PredictionRecord> predict_scenes(const RecoatModel& model,
                                             const std::vector<Scene>& scenes,
                                             const RasterPalette& palette,
                                             int threads) {
  const int t_count = resolve_threads(threads);
  std::vector<PredictionRecord> out(scenes.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(t_count));
  auto worker = [&](int tid) {
    try {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= scenes.size()) break;
        validate_scene(scenes[i]);
        Scene local = to_target_frame(scenes[i]);
        ModelInputs in = build_inputs(local, model.config(), palette);
        Graph g;
        ForwardResult fw = model.forward(g, in, Mode::infer);
        out[i] = {scenes[i].scenario_id, fw.prediction()};
      }
    } catch (...) {
      errors[static_cast<std::size_t>(tid)] = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < t_count; ++t) pool.emplace_back(worker, t);
  for (auto& th : pool) th.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
  return out;
}

std::vector<EvalRecord> build_eval_records(
    const std::vector<Scene>& scenes,
    const std::vector<PredictionRecord>& predictions) {
  std::map<std::string, const PredictionRecord*> by_id;
  for (const PredictionRecord& p : predictions) by_id[p.scenario_id] = &p;
  std::vector<EvalRecord> out;
  out.reserve(scenes.size());
  for (const Scene& scene : scenes) {
    auto it = by_id.find(scene.scenario_id);
    if (it == by_id.end())
      throw ValueError("no prediction for scenario " + scene.scenario_id);
    validate_scene(scene);
    Scene local = to_target_frame(scene);
    EvalRecord r;
    r.scenario_id = scene.scenario_id;
    r.pred = it->second->pred;
    r.gt_future = Tensor({kFutureSteps, 2});
    for (int t = 0; t < kFutureSteps; ++t) {
      r.gt_future.at(t, 0) = local.target_future[static_cast<std::size_t>(t)].x;
      r.gt_future.at(t, 1) = local.target_future[static_cast<std::size_t>(t)].y;
    }
    for (const AgentTrack& nb : local.neighbors) {
      const AgentState* last = nullptr;
      for (auto sit = nb.states.rbegin(); sit != nb.states.rend(); ++sit)
        if (sit->valid) {
          last = &*sit;
          break;
        }
      OtherFuture of;
      of.points.resize(kFutureSteps);
      of.valid.assign(kFutureSteps, last != nullptr);
      if (last != nullptr)
        for (int t = 0; t < kFutureSteps; ++t) {
          const double dt = (t + 1) / kFutureHz;
          of.points[static_cast<std::size_t>(t)] = {last->x + last->vx * dt,
                                                    last->y + last->vy * dt};
        }
      r.others_future.push_back(std::move(of));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace recoat
