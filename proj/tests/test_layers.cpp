#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "recoat/grad_check.hpp"
#include "recoat/layers.hpp"

using namespace recoat;

namespace {

Tensor random_tensor(const std::vector<int>& shape, Rng& rng) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("lstm zero input and zero params give zero hidden state") {
  Graph g;
  ParamStore store;
  store.create("l.wx", Tensor({3, 8}));
  store.create("l.wh", Tensor({2, 8}));
  store.create("l.b", Tensor({8}));
  LstmParams p = lstm_param_vars(g, store, "l", 2);
  Var h = lstm_sequence(g.constant(Tensor({4, 3})), p);
  REQUIRE(h.value().dim(0) == 2);
  for (int i = 0; i < 2; ++i) CHECK(h.value().at(i) == 0.0);
}

TEST_CASE("lstm_sequence with T=1 equals a single cell application") {
  Rng rng(21);
  ParamStore store;
  create_lstm_params(store, "l", 3, 4, rng, Partition::shared());
  Tensor x = random_tensor({1, 3}, rng);
  Graph g;
  LstmParams p = lstm_param_vars(g, store, "l", 4);
  Var seq = lstm_sequence(g.constant(x), p);
  LstmState cell = lstm_cell(time_slice(g.constant(x), 0), LstmState{}, p);
  for (int i = 0; i < 4; ++i)
    CHECK(seq.value().at(i) == cell.h.value().at(i));
}

TEST_CASE("lstm matches a step-by-step per-gate scalar oracle") {
  Rng rng(31);
  const int in = 2, hidden = 3, t_len = 3;
  ParamStore store;
  create_lstm_params(store, "l", in, hidden, rng, Partition::shared());
  Tensor x = random_tensor({t_len, in}, rng);

  Graph g;
  LstmParams p = lstm_param_vars(g, store, "l", hidden);
  Var h_var = lstm_sequence(g.constant(x), p);

  // unrolled oracle with explicit gate math
  const Tensor& wx = store.at("l.wx");
  const Tensor& wh = store.at("l.wh");
  const Tensor& b = store.at("l.b");
  std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
  for (int t = 0; t < t_len; ++t) {
    std::vector<double> z(4 * hidden, 0.0);
    for (int j = 0; j < 4 * hidden; ++j) {
      double acc = b.at(j);
      for (int i = 0; i < in; ++i) acc += x.at(t, i) * wx.at(i, j);
      for (int i = 0; i < hidden; ++i) acc += h[static_cast<std::size_t>(i)] * wh.at(i, j);
      z[static_cast<std::size_t>(j)] = acc;
    }
    for (int i = 0; i < hidden; ++i) {
      const double gi = sig(z[static_cast<std::size_t>(i)]);
      const double gf = sig(z[static_cast<std::size_t>(hidden + i)]);
      const double gc = std::tanh(z[static_cast<std::size_t>(2 * hidden + i)]);
      const double go = sig(z[static_cast<std::size_t>(3 * hidden + i)]);
      c[static_cast<std::size_t>(i)] = gf * c[static_cast<std::size_t>(i)] + gi * gc;
      h[static_cast<std::size_t>(i)] = go * std::tanh(c[static_cast<std::size_t>(i)]);
    }
  }
  for (int i = 0; i < hidden; ++i)
    CHECK(h_var.value().at(i) ==
          doctest::Approx(h[static_cast<std::size_t>(i)]).epsilon(1e-10));
}

TEST_CASE("batched lstm equals per-row lstm") {
  Rng rng(41);
  const int n = 3, t_len = 4, in = 2, hidden = 5;
  ParamStore store;
  create_lstm_params(store, "l", in, hidden, rng, Partition::shared());
  Tensor batch = random_tensor({n, t_len, in}, rng);

  Graph g;
  LstmParams p = lstm_param_vars(g, store, "l", hidden);
  Var batched = lstm_sequence(g.constant(batch), p);
  REQUIRE(batched.value().dim(0) == n);

  for (int row = 0; row < n; ++row) {
    Tensor single({t_len, in});
    for (int t = 0; t < t_len; ++t)
      for (int i = 0; i < in; ++i) single.at(t, i) = batch.at(row, t, i);
    Graph g2;
    LstmParams p2 = lstm_param_vars(g2, store, "l", hidden);
    Var h = lstm_sequence(g2.constant(single), p2);
    for (int i = 0; i < hidden; ++i)
      CHECK(batched.value().at(row, i) ==
            doctest::Approx(h.value().at(i)).epsilon(1e-12));
  }
}

TEST_CASE("lstm gradients pass finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Rng rng(seed);
    ParamStore store;
    create_lstm_params(store, "l", 2, 3, rng, Partition::shared());
    store.create("x", random_tensor({3, 2}, rng));
    auto fn = [](Graph& g, const ParamStore& p) {
      LstmParams lp = lstm_param_vars(g, p, "l", 3);
      Var h = lstm_sequence(g.param("x", &p.at("x")), lp);
      Tensor w({3}, {0.7, -1.3, 0.4});
      return dot_const(h, w);
    };
    GradCheckReport report = grad_check(fn, store);
    CHECK(report.passed(1e-4));
  }
}

TEST_CASE("cnn_encode zero image and zero bias give a zero feature") {
  Rng rng(51);
  CnnConfig cfg;
  cfg.input_h = 12;
  cfg.input_w = 12;
  cfg.input_c = 2;
  cfg.blocks = {{3, 2, 3}, {3, 2, 4}};
  cfg.dense_out = 5;
  ParamStore store;
  create_cnn_params(store, "cnn", cfg, rng);
  Graph g;
  Var f = cnn_encode(g, store, "cnn", cfg, Tensor({12, 12, 2}), Mode::infer,
                     0.5, nullptr);
  REQUIRE(f.value().dim(0) == 5);
  for (int i = 0; i < 5; ++i) CHECK(f.value().at(i) == 0.0);
}

TEST_CASE("cnn_encode output length and shape validation") {
  Rng rng(52);
  CnnConfig cfg;
  cfg.input_h = 16;
  cfg.input_w = 16;
  cfg.input_c = 3;
  cfg.blocks = {{3, 2, 4}, {3, 2, 6}};
  cfg.dense_out = 128;
  ParamStore store;
  create_cnn_params(store, "cnn", cfg, rng);
  Graph g;
  Tensor img = random_tensor({16, 16, 3}, rng);
  Var f = cnn_encode(g, store, "cnn", cfg, img, Mode::infer, 0.5, nullptr);
  CHECK(f.value().dim(0) == 128);
  Graph g2;
  CHECK_THROWS_AS(cnn_encode(g2, store, "cnn", cfg, Tensor({8, 16, 3}),
                             Mode::infer, 0.5, nullptr),
                  ShapeError);
}

TEST_CASE("conv2d stack matches a naive 2-D convolution oracle") {
  Rng rng(53);
  const int h = 7, w = 7, cin = 2, cout = 3, k = 3, stride = 2;
  Tensor img = random_tensor({h, w, cin}, rng);
  Tensor kern = random_tensor({k, k, cin, cout}, rng);
  Tensor bias = random_tensor({cout}, rng);
  Graph g;
  Var y = conv2d(g.constant(img), g.constant(kern), g.constant(bias), stride,
                 Pad::valid);
  const int out = (h - k) / stride + 1;
  REQUIRE(y.value().dim(0) == out);
  REQUIRE(y.value().dim(1) == out);
  for (int oh = 0; oh < out; ++oh)
    for (int ow = 0; ow < out; ++ow)
      for (int co = 0; co < cout; ++co) {
        double acc = bias.at(co);
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx)
            for (int ci = 0; ci < cin; ++ci) {
              const std::size_t kidx =
                  ((static_cast<std::size_t>(ky) * k + kx) * cin + ci) * cout +
                  co;
              acc += img.at(oh * stride + ky, ow * stride + kx, ci) *
                     kern[kidx];
            }
        CHECK(y.value().at(oh, ow, co) == doctest::Approx(acc).epsilon(1e-10));
      }
}

TEST_CASE("cnn_encode gradients pass finite differences on a tiny config") {
  Rng rng(54);
  CnnConfig cfg;
  cfg.input_h = 8;
  cfg.input_w = 8;
  cfg.input_c = 2;
  cfg.blocks = {{3, 2, 2}, {3, 2, 3}};
  cfg.dense_out = 4;
  ParamStore store;
  create_cnn_params(store, "cnn", cfg, rng);
  Tensor img = random_tensor({8, 8, 2}, rng);
  auto fn = [&img, &cfg](Graph& g, const ParamStore& p) {
    Var f = cnn_encode(g, p, "cnn", cfg, img, Mode::infer, 0.5, nullptr);
    Tensor w({4}, {1.0, -0.5, 0.25, 2.0});
    return dot_const(f, w);
  };
  GradCheckReport report = grad_check(fn, store);
  CHECK(report.passed(1e-4));
}

TEST_CASE("dropout gradients flow through a fixed mask") {
  Rng rng(55);
  ParamStore store;
  store.create("x", random_tensor({20}, rng));
  auto fn = [](Graph& g, const ParamStore& p) {
    Rng mask_rng(777);  // fixed mask across evaluations
    Var y = dropout(g.param("x", &p.at("x")), 0.5, Mode::train, mask_rng);
    return sum(elu(y));
  };
  GradCheckReport report = grad_check(fn, store);
  CHECK(report.passed(1e-4));
}
