#include "recoat/layers.hpp"

#include <cmath>

#include "recoat/error.hpp"

namespace recoat {

Tensor init_uniform(const std::vector<int>& shape, int fan_in, Rng& rng) {
  Tensor t(shape);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

void create_lstm_params(ParamStore& store, const std::string& prefix, int in,
                        int hidden, Rng& rng, Partition partition) {
  store.create(prefix + ".wx", init_uniform({in, 4 * hidden}, in, rng),
               partition);
  store.create(prefix + ".wh", init_uniform({hidden, 4 * hidden}, hidden, rng),
               partition);
  Tensor b({4 * hidden});
  for (int i = hidden; i < 2 * hidden; ++i) b.at(i) = 1.0;  // forget gate
  store.create(prefix + ".b", std::move(b), partition);
}

LstmParams lstm_param_vars(Graph& g, const ParamStore& store,
                           const std::string& prefix, int hidden) {
  LstmParams p;
  p.wx = g.param(prefix + ".wx", &store.at(prefix + ".wx"));
  p.wh = g.param(prefix + ".wh", &store.at(prefix + ".wh"));
  p.b = g.param(prefix + ".b", &store.at(prefix + ".b"));
  p.hidden = hidden;
  return p;
}

LstmState lstm_cell(Var x, const LstmState& prev, const LstmParams& p) {
  const int h = p.hidden;
  Var z = matmul(x, p.wx);
  if (prev.h.valid()) z = add(z, matmul(prev.h, p.wh));
  z = add_bias_rows(z, p.b);
  Var gi = sigmoid(col_slice(z, 0, h));
  Var gf = sigmoid(col_slice(z, h, 2 * h));
  Var gc = tanh_op(col_slice(z, 2 * h, 3 * h));
  Var go = sigmoid(col_slice(z, 3 * h, 4 * h));
  Var c = mul(gi, gc);
  if (prev.c.valid()) c = add(c, mul(gf, prev.c));
  return {mul(go, tanh_op(c)), c};
}

Var lstm_sequence(Var x, const LstmParams& p) {
  const Tensor& tx = x.value();
  if (tx.rank() != 2 && tx.rank() != 3)
    throw ShapeError("lstm_sequence: input must be (T,C) or (N,T,C)");
  const int t_len = tx.rank() == 2 ? tx.dim(0) : tx.dim(1);
  if (t_len < 1) throw ShapeError("lstm_sequence: empty sequence");
  LstmState state;
  for (int t = 0; t < t_len; ++t)
    state = lstm_cell(time_slice(x, t), state, p);
  return state.h;
}

void create_cnn_params(ParamStore& store, const std::string& prefix,
                       const CnnConfig& cfg, Rng& rng) {
  int c_in = cfg.input_c;
  for (std::size_t i = 0; i < cfg.blocks.size(); ++i) {
    const ConvBlockSpec& b = cfg.blocks[i];
    const std::string base = prefix + ".block" + std::to_string(i);
    store.create(base + ".w",
                 init_uniform({b.kernel, b.kernel, c_in, b.channels},
                              b.kernel * b.kernel * c_in, rng));
    store.create(base + ".b", Tensor({b.channels}));
    c_in = b.channels;
  }
  store.create(prefix + ".fc.w",
               init_uniform({cfg.feature_dim(), cfg.dense_out},
                            cfg.feature_dim(), rng));
  store.create(prefix + ".fc.b", Tensor({cfg.dense_out}));
}

Var cnn_encode(Graph& g, const ParamStore& store, const std::string& prefix,
               const CnnConfig& cfg, const Tensor& image, Mode mode,
               double dropout_rate, Rng* rng) {
  if (image.rank() != 3 || image.dim(0) != cfg.input_h ||
      image.dim(1) != cfg.input_w || image.dim(2) != cfg.input_c)
    throw ShapeError("cnn_encode: image shape " + image.shape_str() +
                     " does not match configured input");
  Var x = g.constant(image);
  for (std::size_t i = 0; i < cfg.blocks.size(); ++i) {
    const ConvBlockSpec& b = cfg.blocks[i];
    const std::string base = prefix + ".block" + std::to_string(i);
    Var w = g.param(base + ".w", &store.at(base + ".w"));
    Var bias = g.param(base + ".b", &store.at(base + ".b"));
    x = elu(conv2d(x, w, bias, b.stride, Pad::same));
  }
  Var feat = global_avg_pool(x);
  Var w = g.param(prefix + ".fc.w", &store.at(prefix + ".fc.w"));
  Var bias = g.param(prefix + ".fc.b", &store.at(prefix + ".fc.b"));
  Var out = elu(dense(feat, w, bias));
  if (mode == Mode::train) {
    if (rng == nullptr) throw ValueError("cnn_encode: train mode needs an rng");
    out = dropout(out, dropout_rate, mode, *rng);
  }
  return out;
}

}  // namespace recoat
