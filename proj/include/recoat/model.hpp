#pragma once

#include <string>
#include <vector>

#include "recoat/layers.hpp"
#include "recoat/raster.hpp"
#include "recoat/scene.hpp"

namespace recoat {

struct AttentionConfig {
  double alpha = 10.0;
  double mask_value = -1e9;
  double distance_floor = 0.1;  // meters

  void validate() const;
};

struct ModelConfig {
  AgentType agent_type = AgentType::vehicle;
  int k_modes = 6;
  int future_steps = kFutureSteps;
  int history_steps = kHistorySteps;
  int state_dim = kStateDim;

  int track_conv_kernel = 3;
  int track_conv_channels = 64;
  int lstm_hidden = 128;

  CnnConfig cnn;

  int path_lines = 3;    // nearest centerlines kept
  int path_points = 50;  // resampled points per centerline
  int path_conv_channels = 32;
  int path_conv_kernel = 3;
  int path_conv_stride = 5;

  int traj_embed = 64;
  int score_hidden = 64;
  double dropout_rate = 0.5;
  AttentionConfig attention;

  bool use_paths() const { return agent_type == AgentType::vehicle; }
  int fused_dim() const {
    return lstm_hidden * 2 + cnn.dense_out + (use_paths() ? lstm_hidden : 0);
  }
};

// Fixed-shape numeric inputs for one example.
struct ModelInputs {
  Tensor target_states;    // (T_h, 5)
  Tensor neighbor_states;  // (10, T_h, 5)
  int neighbor_count = 0;
  Tensor neighbor_pos;     // (10, 2) t0 positions of the padded rows
  Tensor image;            // (H, W, 3) in [0,1]
  Tensor centerlines;      // (path_lines, path_points, 2), zero-padded
  int centerline_count = 0;
  double target_speed = 0.0;
  Tensor gt_future;        // (T_f, 2); empty when unknown
};

// K trajectories plus a normalized confidence distribution.
struct PredictionSet {
  Tensor trajectories;        // (K, T_f, 2)
  std::vector<double> probs;  // (K), non-negative, sums to 1
};

void validate_prediction_set(const PredictionSet& p);

// Eq.-style distance attention: score_i = alpha / max(floor, d_i) for real
// rows, mask_value for padded rows.
std::vector<double> att_scores(const Tensor& neighbor_pos, int count,
                               const AttentionConfig& cfg);
// softmax of the scores
std::vector<double> att_weights(const std::vector<double>& scores);

Mode parse_mode(const std::string& s);

struct ForwardResult {
  std::vector<Var> traj_x;  // per decoder, (T_f)
  std::vector<Var> traj_y;  // per decoder, (T_f)
  Var probs;                // (K)

  PredictionSet prediction() const;
};

class RecoatModel {
 public:
  RecoatModel(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Builds the forward graph for one example. Train mode requires an rng for
  // the dropout masks.
  ForwardResult forward(Graph& g, const ModelInputs& in, Mode mode,
                        Rng* dropout_rng = nullptr) const;

  // conv1d + LSTM track encoder; exposed for tests
  Var encode_track(Graph& g, const std::string& prefix, Var states) const;
  // shared per-polyline encoder + max-pool; zero feature when count == 0
  Var encode_paths(Graph& g, const ModelInputs& in) const;

 private:
  ModelConfig cfg_;
  ParamStore params_;
};

// Scene -> fixed-shape inputs: frame normalization is the caller's job; the
// scene passed here must already be in the target frame.
ModelInputs build_inputs(const Scene& scene, const ModelConfig& cfg,
                         const RasterPalette& palette = RasterPalette{});

// arc-length resampling to exactly `points` samples
Polyline resample_polyline(const Polyline& line, int points);

}  // namespace recoat
