#include "recoat/objective.hpp"

#include <algorithm>
#include <cmath>

#include "recoat/error.hpp"
#include "recoat/ops.hpp"

namespace recoat {

void LossConfig::validate() const {
  if (!(lambda > 0.0)) throw ValueError("loss lambda must be positive");
  if (!(future_hz > 0.0)) throw ValueError("future_hz must be positive");
}

double step_weight(int step, double v, const LossConfig& cfg) {
  if (step < 1) throw ValueError("step_weight: step index starts at 1");
  if (v < 0.0) throw ValueError("step_weight: speed must be non-negative");
  const double t = cfg.time_mode == LossConfig::TimeMode::seconds
                       ? step / cfg.future_hz
                       : static_cast<double>(step);
  const double speed_factor =
      std::max(cfg.speed_floor, cfg.speed_base + cfg.speed_slope * v);
  return cfg.time_slope * t * speed_factor;
}

Tensor step_weights(int t_len, double v, const LossConfig& cfg) {
  Tensor w({t_len});
  for (int t = 0; t < t_len; ++t) w.at(t) = step_weight(t + 1, v, cfg);
  return w;
}

TrajLossResult traj_loss(const Tensor& pred, const Tensor& gt, double v,
                         const LossConfig& cfg) {
  if (pred.rank() != 3 || pred.dim(2) != 2)
    throw ShapeError("traj_loss: pred must be (K,T,2)");
  if (gt.rank() != 2 || gt.dim(0) != pred.dim(1) || gt.dim(1) != 2)
    throw ShapeError("traj_loss: gt shape " + gt.shape_str() +
                     " does not match pred " + pred.shape_str());
  const int k = pred.dim(0), t_len = pred.dim(1);
  const Tensor w = step_weights(t_len, v, cfg);
  const double inv_t = 1.0 / t_len;
  TrajLossResult out{0.0, 0};
  // same expression order as the graph-side weighted_l2 so both paths pick
  // the same winner even at near-ties
  for (int j = 0; j < k; ++j) {
    double acc = 0.0;
    for (int t = 0; t < t_len; ++t) {
      const double dx = pred.at(j, t, 0) - gt.at(t, 0);
      const double dy = pred.at(j, t, 1) - gt.at(t, 1);
      acc += w.at(t) * std::sqrt(dx * dx + dy * dy);
    }
    acc *= inv_t;
    if (j == 0 || acc < out.loss) {
      out.loss = acc;
      out.winner = j;
    }
  }
  return out;
}

std::vector<double> gt_distribution(const Tensor& endpoints,
                                    const Point& gt_endpoint) {
  if (endpoints.rank() != 2 || endpoints.dim(1) != 2)
    throw ShapeError("gt_distribution: endpoints must be (K,2)");
  if (!endpoints.all_finite() || !std::isfinite(gt_endpoint.x) ||
      !std::isfinite(gt_endpoint.y))
    throw ValueError("gt_distribution: non-finite input");
  const int k = endpoints.dim(0);
  std::vector<double> neg_dist(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    neg_dist[static_cast<std::size_t>(j)] =
        -std::hypot(endpoints.at(j, 0) - gt_endpoint.x,
                    endpoints.at(j, 1) - gt_endpoint.y);
  return softmax_values(neg_dist);
}

double score_loss(const std::vector<double>& probs,
                  const std::vector<double>& p_gt) {
  if (probs.size() != p_gt.size())
    throw ShapeError("score_loss: length mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j)
    acc -= p_gt[j] * std::log(std::max(probs[j], 1e-12));
  return acc;
}

LossBreakdown total_loss(const PredictionSet& pred, const Tensor& gt, double v,
                         const LossConfig& cfg) {
  cfg.validate();
  validate_prediction_set(pred);
  const TrajLossResult tl = traj_loss(pred.trajectories, gt, v, cfg);
  const int k = pred.trajectories.dim(0);
  const int t_last = pred.trajectories.dim(1) - 1;
  Tensor endpoints({k, 2});
  for (int j = 0; j < k; ++j) {
    endpoints.at(j, 0) = pred.trajectories.at(j, t_last, 0);
    endpoints.at(j, 1) = pred.trajectories.at(j, t_last, 1);
  }
  const Point gt_end{gt.at(t_last, 0), gt.at(t_last, 1)};
  const double sl = score_loss(pred.probs, gt_distribution(endpoints, gt_end));
  LossBreakdown out;
  out.traj_loss = tl.loss;
  out.winner_index = tl.winner;
  out.score_loss = sl;
  out.total = sl + cfg.lambda * tl.loss;
  return out;
}

LossVars total_loss_graph(Graph& g, const ForwardResult& fw, const Tensor& gt,
                          double v, const LossConfig& cfg) {
  cfg.validate();
  const int k = static_cast<int>(fw.traj_x.size());
  if (k == 0) throw ShapeError("total_loss_graph: no decoders");
  const int t_len = fw.traj_x[0].value().dim(0);
  if (gt.rank() != 2 || gt.dim(0) != t_len || gt.dim(1) != 2)
    throw ShapeError("total_loss_graph: bad gt shape " + gt.shape_str());
  const Tensor w = step_weights(t_len, v, cfg);
  const double inv_t = 1.0 / t_len;

  LossVars out;
  std::vector<Var> per_decoder;
  per_decoder.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j)
    per_decoder.push_back(weighted_l2(fw.traj_x[static_cast<std::size_t>(j)],
                                      fw.traj_y[static_cast<std::size_t>(j)],
                                      gt, w, inv_t));
  out.winner = 0;
  for (int j = 1; j < k; ++j)
    if (per_decoder[static_cast<std::size_t>(j)].value()[0] <
        per_decoder[static_cast<std::size_t>(out.winner)].value()[0])
      out.winner = j;
  out.traj = per_decoder[static_cast<std::size_t>(out.winner)];

  // p_gt from current endpoint values; detached by construction
  Tensor endpoints({k, 2});
  for (int j = 0; j < k; ++j) {
    endpoints.at(j, 0) = fw.traj_x[static_cast<std::size_t>(j)].value().at(t_len - 1);
    endpoints.at(j, 1) = fw.traj_y[static_cast<std::size_t>(j)].value().at(t_len - 1);
  }
  const std::vector<double> p_gt = gt_distribution(
      endpoints, Point{gt.at(t_len - 1, 0), gt.at(t_len - 1, 1)});
  Tensor p_gt_t({k});
  for (int j = 0; j < k; ++j) p_gt_t.at(j) = p_gt[static_cast<std::size_t>(j)];

  out.score = scale(dot_const(log_clamped(fw.probs), p_gt_t), -1.0);
  out.total = add(out.score, scale(out.traj, cfg.lambda));
  return out;
}

GradMap wta_gradient_mask(GradMap grads, const ParamStore& store, int winner) {
  for (auto& [name, g] : grads) {
    const Partition p = store.partition(name);
    if (p.kind == Partition::Kind::regression && p.decoder != winner)
      g.fill(0.0);
  }
  return grads;
}

}  // namespace recoat
