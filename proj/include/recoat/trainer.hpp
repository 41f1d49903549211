#pragma once

#include <string>
#include <vector>

#include "recoat/datagen.hpp"
#include "recoat/metrics.hpp"
#include "recoat/model.hpp"
#include "recoat/objective.hpp"
#include "recoat/optimizer.hpp"
#include "recoat/predictions_io.hpp"

namespace recoat {

struct TrainConfig {
  double learning_rate = 3e-4;  // per-epoch lr = learning_rate * decay^epoch
  double decay = 0.9;
  int epochs = 50;
  int batch_size = 32;
  std::uint64_t seed = 0;
  AgentType agent_type = AgentType::vehicle;
  int threads = 0;  // 0 = hardware concurrency
  bool grad_clip = false;
  double grad_clip_norm = 5.0;
  LossConfig loss;
  ModelConfig model;

  void validate() const;
};

// JSON mirror of TrainConfig (scalar fields; the model keeps its defaults)
TrainConfig load_train_config(const std::string& path);
void save_train_config(const std::string& path, const TrainConfig& cfg);

double epoch_learning_rate(const TrainConfig& cfg, int epoch);

// one example's contribution to a batch
struct ExampleResult {
  GradMap grads;
  double traj = 0.0;
  double score = 0.0;
  double total = 0.0;
  int winner = 0;
};

// forward + loss + backward for one example; deterministic given
// (seed, epoch, example_index)
ExampleResult train_example(const RecoatModel& model, const ModelInputs& in,
                            const LossConfig& loss_cfg, std::uint64_t seed,
                            int epoch, std::size_t example_index);

struct TrainResult {
  std::string last_checkpoint;
  int epochs_run = 0;
  double final_total_loss = 0.0;
};

// Full training loop: seeded shuffling, WTA routing per step, one checkpoint
// per epoch, machine-parsable CSV log. Resumable bit-exactly from a
// checkpoint written by the same configuration.
TrainResult train(const TrainConfig& cfg, const std::string& data_dir,
                  const std::string& out_dir,
                  const std::string& resume_checkpoint = "");

// scenes are world-frame; predictions come back in the target frame
std::vector<PredictionRecord> predict_scenes(
    const RecoatModel& model, const std::vector<Scene>& scenes,
    const RasterPalette& palette = RasterPalette{}, int threads = 0);

// Pairs predictions with scene ground truth. Neighbor futures are
// constant-velocity extrapolations of each neighbor's last valid state (the
// scene schema carries histories only).
std::vector<EvalRecord> build_eval_records(
    const std::vector<Scene>& scenes,
    const std::vector<PredictionRecord>& predictions);

// scene paths listed in a manifest, resolved relative to its directory
std::vector<std::string> manifest_scene_paths(const std::string& data_dir);

}  // namespace recoat
