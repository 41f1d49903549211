#include "recoat/model.hpp"

#include <algorithm>
#include <cmath>

#include "recoat/error.hpp"

namespace recoat {

void AttentionConfig::validate() const {
  if (!(alpha > 0.0)) throw ValueError("attention alpha must be positive");
  if (!(distance_floor > 0.0))
    throw ValueError("attention distance_floor must be positive");
}

void validate_prediction_set(const PredictionSet& p) {
  if (p.trajectories.rank() != 3 || p.trajectories.dim(2) != 2)
    throw ShapeError("prediction trajectories must be (K,T,2)");
  if (static_cast<int>(p.probs.size()) != p.trajectories.dim(0))
    throw ShapeError("prediction probs length must match K");
  double total = 0.0;
  for (double v : p.probs) {
    if (!(v >= 0.0)) throw ValueError("prediction probs must be non-negative");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw ValueError("prediction probs must sum to 1");
  if (!p.trajectories.all_finite())
    throw ValueError("prediction coordinates must be finite");
}

std::vector<double> att_scores(const Tensor& neighbor_pos, int count,
                               const AttentionConfig& cfg) {
  cfg.validate();
  if (neighbor_pos.rank() != 2 || neighbor_pos.dim(1) != 2)
    throw ShapeError("att_scores: positions must be (N,2)");
  const int n = neighbor_pos.dim(0);
  std::vector<double> scores(static_cast<std::size_t>(n), cfg.mask_value);
  for (int i = 0; i < std::min(count, n); ++i) {
    const double d =
        std::hypot(neighbor_pos.at(i, 0), neighbor_pos.at(i, 1));
    scores[static_cast<std::size_t>(i)] =
        cfg.alpha / std::max(cfg.distance_floor, d);
  }
  return scores;
}

std::vector<double> att_weights(const std::vector<double>& scores) {
  for (double s : scores)
    if (!std::isfinite(s)) throw ValueError("att_weights: non-finite score");
  return softmax_values(scores);
}

Mode parse_mode(const std::string& s) {
  if (s == "train") return Mode::train;
  if (s == "infer") return Mode::infer;
  throw ValueError("invalid mode: " + s + " (expected train or infer)");
}

namespace {

std::string decoder_prefix(int j) { return "decoder" + std::to_string(j); }

}  // namespace

RecoatModel::RecoatModel(ModelConfig cfg, std::uint64_t seed)
    : cfg_(std::move(cfg)) {
  cfg_.attention.validate();
  Rng rng(derive_seed(seed, 0x696e6974));

  auto create_track_encoder = [&](const std::string& prefix, int in_dim) {
    params_.create(prefix + ".conv.w",
                   init_uniform({cfg_.track_conv_kernel, in_dim,
                                 cfg_.track_conv_channels},
                                cfg_.track_conv_kernel * in_dim, rng));
    params_.create(prefix + ".conv.b", Tensor({cfg_.track_conv_channels}));
    create_lstm_params(params_, prefix + ".lstm", cfg_.track_conv_channels,
                       cfg_.lstm_hidden, rng, Partition::shared());
  };
  create_track_encoder("target_enc", cfg_.state_dim);
  create_track_encoder("nbr_enc", cfg_.state_dim);

  create_cnn_params(params_, "cnn", cfg_.cnn, rng);

  if (cfg_.use_paths()) {
    params_.create("path_enc.conv.w",
                   init_uniform({cfg_.path_conv_kernel, 2,
                                 cfg_.path_conv_channels},
                                cfg_.path_conv_kernel * 2, rng));
    params_.create("path_enc.conv.b", Tensor({cfg_.path_conv_channels}));
    create_lstm_params(params_, "path_enc.lstm", cfg_.path_conv_channels,
                       cfg_.lstm_hidden, rng, Partition::shared());
  }

  const int fused = cfg_.fused_dim();
  for (int j = 0; j < cfg_.k_modes; ++j) {
    const std::string base = decoder_prefix(j);
    params_.create(base + ".reg.x.w",
                   init_uniform({fused, cfg_.future_steps}, fused, rng),
                   Partition::regression(j));
    params_.create(base + ".reg.x.b", Tensor({cfg_.future_steps}),
                   Partition::regression(j));
    params_.create(base + ".reg.y.w",
                   init_uniform({fused, cfg_.future_steps}, fused, rng),
                   Partition::regression(j));
    params_.create(base + ".reg.y.b", Tensor({cfg_.future_steps}),
                   Partition::regression(j));

    params_.create(base + ".score.embed.w",
                   init_uniform({2 * cfg_.future_steps, cfg_.traj_embed},
                                2 * cfg_.future_steps, rng),
                   Partition::scoring(j));
    params_.create(base + ".score.embed.b", Tensor({cfg_.traj_embed}),
                   Partition::scoring(j));
    params_.create(base + ".score.hidden.w",
                   init_uniform({fused + cfg_.traj_embed, cfg_.score_hidden},
                                fused + cfg_.traj_embed, rng),
                   Partition::scoring(j));
    params_.create(base + ".score.hidden.b", Tensor({cfg_.score_hidden}),
                   Partition::scoring(j));
    params_.create(base + ".score.out.w",
                   init_uniform({cfg_.score_hidden, 1}, cfg_.score_hidden, rng),
                   Partition::scoring(j));
    params_.create(base + ".score.out.b", Tensor({1}), Partition::scoring(j));
  }
  params_.validate_partitions(cfg_.k_modes);
}

Var RecoatModel::encode_track(Graph& g, const std::string& prefix,
                              Var states) const {
  Var w = g.param(prefix + ".conv.w", &params_.at(prefix + ".conv.w"));
  Var b = g.param(prefix + ".conv.b", &params_.at(prefix + ".conv.b"));
  Var x = conv1d(states, w, b, 1, Pad::same);
  LstmParams lstm = lstm_param_vars(g, params_, prefix + ".lstm",
                                    cfg_.lstm_hidden);
  return lstm_sequence(x, lstm);
}

Var RecoatModel::encode_paths(Graph& g, const ModelInputs& in) const {
  if (in.centerline_count <= 0)
    return g.constant(Tensor({cfg_.lstm_hidden}));
  const int n = in.centerline_count;
  const int p = cfg_.path_points;
  Tensor lines({n, p, 2});
  std::copy(in.centerlines.data(),
            in.centerlines.data() + static_cast<std::size_t>(n) * p * 2,
            lines.data());
  Var x = g.constant(std::move(lines));
  Var w = g.param("path_enc.conv.w", &params_.at("path_enc.conv.w"));
  Var b = g.param("path_enc.conv.b", &params_.at("path_enc.conv.b"));
  x = conv1d(x, w, b, cfg_.path_conv_stride, Pad::same);
  LstmParams lstm = lstm_param_vars(g, params_, "path_enc.lstm",
                                    cfg_.lstm_hidden);
  Var feats = lstm_sequence(x, lstm);  // (n, hidden)
  if (n == 1) return col_slice(feats, 0, cfg_.lstm_hidden);
  return max_rows(feats);
}

ForwardResult RecoatModel::forward(Graph& g, const ModelInputs& in, Mode mode,
                                   Rng* dropout_rng) const {
  if (mode == Mode::train && dropout_rng == nullptr)
    throw ValueError("forward: train mode needs a dropout rng");
  if (in.target_states.rank() != 2 ||
      in.target_states.dim(0) != cfg_.history_steps ||
      in.target_states.dim(1) != cfg_.state_dim)
    throw ShapeError("forward: bad target state tensor shape " +
                     in.target_states.shape_str());

  Var target_feat =
      encode_track(g, "target_enc", g.constant(in.target_states));

  // neighbor values: encode the real rows, zero rows for padding
  Var values;
  if (in.neighbor_count > 0) {
    const int n = in.neighbor_count;
    Tensor real({n, cfg_.history_steps, cfg_.state_dim});
    std::copy(in.neighbor_states.data(),
              in.neighbor_states.data() +
                  static_cast<std::size_t>(n) * cfg_.history_steps *
                      cfg_.state_dim,
              real.data());
    Var encoded = encode_track(g, "nbr_enc", g.constant(std::move(real)));
    values = pad_rows(encoded, kMaxNeighbors);
  } else {
    values = g.constant(Tensor({kMaxNeighbors, cfg_.lstm_hidden}));
  }
  const std::vector<double> weights = att_weights(
      att_scores(in.neighbor_pos, in.neighbor_count, cfg_.attention));
  Tensor wt({kMaxNeighbors});
  for (int i = 0; i < kMaxNeighbors; ++i)
    wt.at(i) = weights[static_cast<std::size_t>(i)];
  Var att_feat = att_pool(values, wt);

  Var image_feat = cnn_encode(g, params_, "cnn", cfg_.cnn, in.image, mode,
                              cfg_.dropout_rate, dropout_rng);

  std::vector<Var> parts{target_feat, image_feat, att_feat};
  if (cfg_.use_paths()) parts.push_back(encode_paths(g, in));
  Var fused = concat(parts);

  auto pvar = [&](const std::string& name) {
    return g.param(name, &params_.at(name));
  };

  ForwardResult out;
  std::vector<Var> scores;
  for (int j = 0; j < cfg_.k_modes; ++j) {
    const std::string base = decoder_prefix(j);
    Var xj = dense(fused, pvar(base + ".reg.x.w"), pvar(base + ".reg.x.b"));
    Var yj = dense(fused, pvar(base + ".reg.y.w"), pvar(base + ".reg.y.b"));
    out.traj_x.push_back(xj);
    out.traj_y.push_back(yj);

    Var embed = elu(dense(concat({xj, yj}), pvar(base + ".score.embed.w"),
                          pvar(base + ".score.embed.b")));
    if (mode == Mode::train)
      embed = dropout(embed, cfg_.dropout_rate, mode, *dropout_rng);
    Var hidden = elu(dense(concat({fused, embed}),
                           pvar(base + ".score.hidden.w"),
                           pvar(base + ".score.hidden.b")));
    if (mode == Mode::train)
      hidden = dropout(hidden, cfg_.dropout_rate, mode, *dropout_rng);
    scores.push_back(
        dense(hidden, pvar(base + ".score.out.w"), pvar(base + ".score.out.b")));
  }
  out.probs = softmax(concat(scores));
  return out;
}

PredictionSet ForwardResult::prediction() const {
  PredictionSet p;
  const int k = static_cast<int>(traj_x.size());
  const int t = traj_x.empty() ? 0 : traj_x[0].value().dim(0);
  p.trajectories = Tensor({k, t, 2});
  for (int j = 0; j < k; ++j) {
    const Tensor& xs = traj_x[static_cast<std::size_t>(j)].value();
    const Tensor& ys = traj_y[static_cast<std::size_t>(j)].value();
    for (int i = 0; i < t; ++i) {
      p.trajectories.at(j, i, 0) = xs.at(i);
      p.trajectories.at(j, i, 1) = ys.at(i);
    }
  }
  const Tensor& pr = probs.value();
  p.probs.assign(pr.data(), pr.data() + pr.size());
  return p;
}

Polyline resample_polyline(const Polyline& line, int points) {
  if (line.empty()) return {};
  if (line.size() == 1) return Polyline(static_cast<std::size_t>(points), line[0]);
  std::vector<double> cum(line.size(), 0.0);
  for (std::size_t i = 1; i < line.size(); ++i)
    cum[i] = cum[i - 1] + std::hypot(line[i].x - line[i - 1].x,
                                     line[i].y - line[i - 1].y);
  const double total = cum.back();
  Polyline out;
  out.reserve(static_cast<std::size_t>(points));
  if (total <= 0.0) return Polyline(static_cast<std::size_t>(points), line[0]);
  std::size_t seg = 0;
  for (int i = 0; i < points; ++i) {
    const double s = total * i / (points - 1);
    while (seg + 2 < line.size() && cum[seg + 1] < s) ++seg;
    const double seg_len = cum[seg + 1] - cum[seg];
    const double f = seg_len > 0.0 ? (s - cum[seg]) / seg_len : 0.0;
    out.push_back({line[seg].x + f * (line[seg + 1].x - line[seg].x),
                   line[seg].y + f * (line[seg + 1].y - line[seg].y)});
  }
  return out;
}

ModelInputs build_inputs(const Scene& scene, const ModelConfig& cfg,
                         const RasterPalette& palette) {
  ModelInputs in;
  in.target_states = target_state_tensor(scene);
  NeighborTensor nbr = build_neighbor_tensor(scene);
  in.neighbor_states = std::move(nbr.data);
  in.neighbor_count = nbr.count;
  in.neighbor_pos = Tensor({kMaxNeighbors, 2});
  const std::vector<const AgentTrack*> selected = select_neighbors(scene);
  for (int i = 0; i < nbr.count; ++i) {
    const AgentTrack& t = *selected[static_cast<std::size_t>(i)];
    for (auto it = t.states.rbegin(); it != t.states.rend(); ++it)
      if (it->valid) {
        in.neighbor_pos.at(i, 0) = it->x;
        in.neighbor_pos.at(i, 1) = it->y;
        break;
      }
  }
  in.target_speed = target_speed(scene);

  RasterImage img = rasterize(scene, cfg.agent_type, palette);
  in.image = Tensor({kRasterSize, kRasterSize, 3});
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    in.image[i] = img.pixels[i] / 255.0;

  in.centerlines = Tensor({cfg.path_lines, cfg.path_points, 2});
  if (cfg.use_paths() && !scene.centerlines.empty()) {
    struct Ranked {
      double dist;
      Polyline resampled;
    };
    std::vector<Ranked> ranked;
    for (const Polyline& line : scene.centerlines) {
      if (line.empty()) continue;
      Polyline rs = resample_polyline(line, cfg.path_points);
      double best = std::hypot(rs[0].x, rs[0].y);
      for (const Point& p : rs) best = std::min(best, std::hypot(p.x, p.y));
      ranked.push_back({best, std::move(rs)});
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const Ranked& a, const Ranked& b) {
                       return a.dist < b.dist;
                     });
    in.centerline_count =
        std::min<int>(cfg.path_lines, static_cast<int>(ranked.size()));
    for (int i = 0; i < in.centerline_count; ++i)
      for (int p = 0; p < cfg.path_points; ++p) {
        in.centerlines.at(i, p, 0) =
            ranked[static_cast<std::size_t>(i)].resampled[static_cast<std::size_t>(p)].x;
        in.centerlines.at(i, p, 1) =
            ranked[static_cast<std::size_t>(i)].resampled[static_cast<std::size_t>(p)].y;
      }
  }

  if (scene.target_future.size() == static_cast<std::size_t>(cfg.future_steps)) {
    in.gt_future = Tensor({cfg.future_steps, 2});
    for (int t = 0; t < cfg.future_steps; ++t) {
      in.gt_future.at(t, 0) = scene.target_future[static_cast<std::size_t>(t)].x;
      in.gt_future.at(t, 1) = scene.target_future[static_cast<std::size_t>(t)].y;
    }
  }
  return in;
}

}  // namespace recoat
