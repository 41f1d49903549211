#pragma once

#include <vector>

#include "recoat/model.hpp"
#include "recoat/param_store.hpp"

namespace recoat {

struct LossConfig {
  double lambda = 0.2;

  // per-step weight: (slope * t) * max(floor, base + speed_slope * v),
  // with t in seconds (step/2 at 2 Hz) or the raw step index
  enum class TimeMode { seconds, steps };
  TimeMode time_mode = TimeMode::seconds;
  double time_slope = 0.5;
  double speed_base = 4.0;
  double speed_slope = -0.2;
  double speed_floor = 1.0;
  double future_hz = kFutureHz;

  void validate() const;
};

struct LossBreakdown {
  double traj_loss = 0.0;
  double score_loss = 0.0;
  double total = 0.0;
  int winner_index = 0;
};

// weight of future step `step` (1-based) for a target with initial speed v
double step_weight(int step, double v, const LossConfig& cfg = {});

struct TrajLossResult {
  double loss = 0.0;
  int winner = 0;  // argmin decoder; ties resolved to the lowest index
};

// min over decoders of the weighted mean absolute displacement;
// pred (K,T,2), gt (T,2)
TrajLossResult traj_loss(const Tensor& pred, const Tensor& gt, double v,
                         const LossConfig& cfg = {});

// softmax over -||endpoint_j - gt_endpoint||_2; a constant target, no
// gradient flows through it
std::vector<double> gt_distribution(const Tensor& endpoints,
                                    const Point& gt_endpoint);

// cross entropy -sum_j p_gt_j * log(probs_j), probs clamped at 1e-12
double score_loss(const std::vector<double>& probs,
                  const std::vector<double>& p_gt);

LossBreakdown total_loss(const PredictionSet& pred, const Tensor& gt, double v,
                         const LossConfig& cfg = {});

// Graph-side loss assembly for training. The winner is selected on values;
// gradients flow through the winning decoder's trajectory, every decoder's
// score, and (through the scoring heads' trajectory inputs) every decoder's
// regression branch.
struct LossVars {
  Var traj;
  Var score;
  Var total;
  int winner = 0;
};

LossVars total_loss_graph(Graph& g, const ForwardResult& fw, const Tensor& gt,
                          double v, const LossConfig& cfg = {});

// per-step weight vector (T entries, steps 1..T)
Tensor step_weights(int t_len, double v, const LossConfig& cfg = {});

// Winner-take-all routing of the trajectory-loss gradient: zeroes the
// regression-branch entries of every decoder except the winner. Scoring and
// shared entries pass through untouched. Gradients must be keyed by
// parameters known to the store.
GradMap wta_gradient_mask(GradMap grads, const ParamStore& store, int winner);

}  // namespace recoat
