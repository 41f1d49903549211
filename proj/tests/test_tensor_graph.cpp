#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "recoat/grad_check.hpp"
#include "recoat/ops.hpp"
#include "recoat/rng.hpp"

using namespace recoat;

namespace {

Tensor random_tensor(const std::vector<int>& shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(shape);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

// reduce any tensor to a scalar with fixed random weights so output grads are
// non-uniform
Var scalarize(Var v, Rng& rng) {
  Tensor w(v.value().shape());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
  return sum(mul(v, v.g->constant(w)));
}

}  // namespace

TEST_CASE("tensor shape bookkeeping") {
  Tensor t({2, 3}, 1.5);
  CHECK(t.size() == 6);
  CHECK(t.at(1, 2) == 1.5);
  CHECK_THROWS_AS(Tensor({2}, {1.0, 2.0, 3.0}), ShapeError);
  CHECK(Tensor({3, 0}).size() == 0);
}

TEST_CASE("dense identity and bias") {
  Graph g;
  Tensor x({3}, {1.0, -2.0, 0.5});
  Tensor eye({3, 3});
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  Var y = dense(g.constant(x), g.constant(eye), g.constant(Tensor({3})));
  for (int i = 0; i < 3; ++i) CHECK(y.value().at(i) == x.at(i));

  Tensor b({3}, {3.0, 4.0, 5.0});
  Var z = dense(g.constant(x), g.constant(Tensor({3, 3})), g.constant(b));
  for (int i = 0; i < 3; ++i) CHECK(z.value().at(i) == b.at(i));
}

TEST_CASE("dense matches triple-loop oracle") {
  Rng rng(7);
  Tensor x = random_tensor({4}, rng);
  Tensor w = random_tensor({4, 3}, rng);
  Tensor b = random_tensor({3}, rng);
  Graph g;
  Var y = dense(g.constant(x), g.constant(w), g.constant(b));
  for (int j = 0; j < 3; ++j) {
    double acc = b.at(j);
    for (int i = 0; i < 4; ++i) acc += x.at(i) * w.at(i, j);
    CHECK(y.value().at(j) == doctest::Approx(acc).epsilon(1e-12));
  }
  CHECK_THROWS_AS(
      dense(g.constant(Tensor({5})), g.constant(w), g.constant(b)),
      ShapeError);
}

TEST_CASE("elu values and smoothness") {
  Graph g;
  Tensor x({5}, {0.0, 1.0, -1.0, 1e-9, -1e-9});
  Var y = elu(g.constant(x));
  CHECK(y.value().at(0) == 0.0);
  CHECK(y.value().at(1) == 1.0);
  CHECK(y.value().at(2) == doctest::Approx(std::expm1(-1.0)).epsilon(1e-12));
  // value continuity at 0
  CHECK(std::abs(y.value().at(3) - y.value().at(4)) < 1e-8);

  // monotone non-decreasing on a random sorted grid
  Rng rng(3);
  std::vector<double> grid;
  for (int i = 0; i < 100; ++i) grid.push_back(rng.uniform(-4.0, 4.0));
  std::sort(grid.begin(), grid.end());
  Tensor gt({100}, std::vector<double>(grid));
  Var gy = elu(g.constant(gt));
  for (int i = 1; i < 100; ++i)
    CHECK(gy.value().at(i) >= gy.value().at(i - 1));
}

TEST_CASE("dropout contract") {
  Rng rng(11);
  Graph g;
  Tensor x = random_tensor({100}, rng);
  Var xv = g.constant(x);
  // inference mode and rate 0 are the exact identity (same node)
  CHECK(dropout(xv, 0.5, Mode::infer, rng).id == xv.id);
  CHECK(dropout(xv, 0.0, Mode::train, rng).id == xv.id);
  CHECK_THROWS_AS(dropout(xv, 1.0, Mode::train, rng), ValueError);
  CHECK_THROWS_AS(dropout(xv, -0.1, Mode::train, rng), ValueError);

  // Monte Carlo survivor fraction at rate 0.5 over 1e5 elements
  Tensor big({100000}, 1.0);
  Var y = dropout(g.constant(big), 0.5, Mode::train, rng);
  int survivors = 0;
  for (std::size_t i = 0; i < y.value().size(); ++i) {
    if (y.value()[i] != 0.0) {
      ++survivors;
      CHECK(y.value()[i] == 2.0);  // 1/(1-rate) scaling
    }
  }
  CHECK(std::abs(survivors / 1e5 - 0.5) < 0.01);
}

TEST_CASE("conv1d identity and averaging kernels") {
  Graph g;
  Rng rng(5);
  Tensor x = random_tensor({6, 2}, rng);
  // k=1 identity kernel
  Tensor k1({1, 2, 2});
  k1.at(0, 0, 0) = 1.0;
  k1.at(0, 1, 1) = 1.0;
  Var y = conv1d(g.constant(x), g.constant(k1), g.constant(Tensor({2})));
  REQUIRE(y.value().same_shape(x));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y.value()[i] == x[i]);

  // averaging kernel over a constant sequence stays constant
  Tensor cx({6, 1}, 3.25);
  Tensor ak({3, 1, 1}, 1.0 / 3.0);
  Var cy = conv1d(g.constant(cx), g.constant(ak), g.constant(Tensor({1})));
  REQUIRE(cy.value().dim(0) == 4);  // valid padding
  for (int t = 0; t < 4; ++t)
    CHECK(cy.value().at(t, 0) == doctest::Approx(3.25).epsilon(1e-12));
}

TEST_CASE("conv1d matches sliding-window oracle") {
  Rng rng(17);
  for (int stride : {1, 2}) {
    for (Pad pad : {Pad::valid, Pad::same}) {
      Tensor x = random_tensor({9, 3}, rng);
      Tensor k = random_tensor({3, 3, 4}, rng);
      Tensor b = random_tensor({4}, rng);
      Graph g;
      Var y = conv1d(g.constant(x), g.constant(k), g.constant(b), stride, pad);
      const int t_in = 9, kk = 3;
      int out_len, pad_lo;
      if (pad == Pad::valid) {
        out_len = (t_in - kk) / stride + 1;
        pad_lo = 0;
      } else {
        out_len = (t_in + stride - 1) / stride;
        pad_lo = std::max(0, (out_len - 1) * stride + kk - t_in) / 2;
      }
      REQUIRE(y.value().dim(0) == out_len);
      for (int t = 0; t < out_len; ++t)
        for (int co = 0; co < 4; ++co) {
          double acc = b.at(co);
          for (int dk = 0; dk < kk; ++dk) {
            const int ti = t * stride - pad_lo + dk;
            if (ti < 0 || ti >= t_in) continue;
            for (int ci = 0; ci < 3; ++ci)
              acc += x.at(ti, ci) * k.at(dk, ci, co);
          }
          CHECK(y.value().at(t, co) == doctest::Approx(acc).epsilon(1e-12));
        }
    }
  }
}

TEST_CASE("conv1d and dense are linear in bias-free form") {
  Rng rng(23);
  Tensor k = random_tensor({3, 2, 3}, rng);
  Tensor zb({3});
  Tensor xa = random_tensor({7, 2}, rng);
  Tensor xb = random_tensor({7, 2}, rng);
  const double a = 1.7, b = -0.6;
  Tensor mix({7, 2});
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * xa[i] + b * xb[i];
  Graph g;
  Var ya = conv1d(g.constant(xa), g.constant(k), g.constant(zb));
  Var yb = conv1d(g.constant(xb), g.constant(k), g.constant(zb));
  Var ym = conv1d(g.constant(mix), g.constant(k), g.constant(zb));
  for (std::size_t i = 0; i < ym.value().size(); ++i)
    CHECK(std::abs(ym.value()[i] - (a * ya.value()[i] + b * yb.value()[i])) <
          1e-9);
}

TEST_CASE("backward basics") {
  Tensor xt({4}, {1.0, 2.0, 3.0, 4.0});
  // loss = sum(x) -> gradient all ones
  {
    Graph g;
    Var x = g.param("x", &xt);
    Var loss = sum(x);
    g.backward(loss.id);
    const Tensor gx = g.param_grad("x");
    for (int i = 0; i < 4; ++i) CHECK(gx.at(i) == 1.0);
  }

  // loss = x*x at x=3 -> gradient 6
  Tensor x3 = Tensor::scalar(3.0);
  {
    Graph g;
    Var x = g.param("x", &x3);
    Var loss = sum(mul(x, x));
    g.backward(loss.id);
    CHECK(g.param_grad("x")[0] == 6.0);
  }

  // non-scalar loss rejected
  {
    Graph g;
    Var x = g.param("x", &xt);
    CHECK_THROWS_AS(g.backward(x.id), ShapeError);
  }

  // unreachable parameters get exact zeros
  {
    Graph g;
    Var x = g.param("x", &x3);
    Var unused = g.param("unused", &xt);
    (void)unused;
    Var loss = sum(mul(x, x));
    g.backward(loss.id);
    const Tensor gu = g.param_grad("unused");
    for (int i = 0; i < 4; ++i) CHECK(gu.at(i) == 0.0);
  }
}

TEST_CASE("grad_check validates every op over random shapes") {
  Rng shape_rng(1234);
  int seeds_run = 0;
  for (int trial = 0; trial < 4; ++trial) {
    const std::uint64_t seed = 100 + static_cast<std::uint64_t>(trial);
    Rng rng(seed);
    const int t_len = 4 + static_cast<int>(shape_rng.uniform_int(4));
    const int c_in = 1 + static_cast<int>(shape_rng.uniform_int(3));
    const int c_out = 1 + static_cast<int>(shape_rng.uniform_int(4));

    struct Case {
      const char* name;
      LossBuilder fn;
    };
    ParamStore store;
    store.create("x", random_tensor({t_len, c_in}, rng));
    store.create("w", random_tensor({c_in, c_out}, rng));
    store.create("b", random_tensor({c_out}, rng));
    store.create("k", random_tensor({3, c_in, c_out}, rng));
    store.create("v", random_tensor({t_len, c_in}, rng, 0.1, 1.0));
    store.create("img", random_tensor({6, 6, 2}, rng));
    store.create("k2", random_tensor({3, 3, 2, 3}, rng));

    const std::uint64_t sseed = seed * 77;
    auto sc = [sseed](Var v) {
      Rng r(sseed);
      return scalarize(v, r);
    };

    std::vector<Case> cases;
    cases.push_back({"dense", [&](Graph& g, const ParamStore& p) {
                       return sc(dense(g.param("x", &p.at("x")),
                                       g.param("w", &p.at("w")),
                                       g.param("b", &p.at("b"))));
                     }});
    cases.push_back({"elu", [&](Graph& g, const ParamStore& p) {
                       return sc(elu(g.param("x", &p.at("x"))));
                     }});
    cases.push_back({"sigmoid_tanh", [&](Graph& g, const ParamStore& p) {
                       return sc(tanh_op(sigmoid(g.param("x", &p.at("x")))));
                     }});
    cases.push_back({"conv1d", [&](Graph& g, const ParamStore& p) {
                       return sc(conv1d(g.param("x", &p.at("x")),
                                        g.param("k", &p.at("k")),
                                        g.param("b", &p.at("b")), 1,
                                        Pad::same));
                     }});
    cases.push_back({"conv1d_stride_valid", [&](Graph& g, const ParamStore& p) {
                       return sc(conv1d(g.param("x", &p.at("x")),
                                        g.param("k", &p.at("k")),
                                        g.param("b", &p.at("b")), 2,
                                        Pad::valid));
                     }});
    cases.push_back({"conv2d", [&](Graph& g, const ParamStore& p) {
                       return sc(conv2d(g.param("img", &p.at("img")),
                                        g.param("k2", &p.at("k2")),
                                        g.param("v", &p.at("v")), 2,
                                        Pad::same));
                     }});
    cases.push_back({"softmax", [&](Graph& g, const ParamStore& p) {
                       return sc(softmax(col_slice(
                           time_slice(g.param("x", &p.at("x")), 0), 0, c_in)));
                     }});
    cases.push_back({"log_clamped", [&](Graph& g, const ParamStore& p) {
                       return sc(log_clamped(g.param("v", &p.at("v"))));
                     }});
    cases.push_back({"max_rows_pad", [&](Graph& g, const ParamStore& p) {
                       return sc(max_rows(
                           pad_rows(g.param("x", &p.at("x")), t_len + 2)));
                     }});
    cases.push_back({"att_pool", [&](Graph& g, const ParamStore& p) {
                       Rng wr(9);
                       Tensor w({t_len});
                       for (int i = 0; i < t_len; ++i)
                         w.at(i) = wr.uniform(0.0, 1.0);
                       return sc(att_pool(g.param("x", &p.at("x")), w));
                     }});
    cases.push_back({"gap", [&](Graph& g, const ParamStore& p) {
                       return sc(global_avg_pool(g.param("img", &p.at("img"))));
                     }});

    for (auto& c : cases) {
      ParamStore view;
      for (const std::string& n : store.names())
        view.create(n, store.at(n));
      // conv2d case borrows "v" as a bias of wrong length; rebuild it
      if (std::string(c.name) == "conv2d") {
        view.at("v") = random_tensor({3}, rng);
      }
      GradCheckReport report = grad_check(c.fn, view);
      INFO(c.name);
      CHECK(report.passed(1e-4));
      ++seeds_run;
    }
  }
  CHECK(seeds_run >= 20);
}

TEST_CASE("grad_check on a linear map is near machine precision") {
  Rng rng(55);
  ParamStore store;
  store.create("x", random_tensor({6}, rng));
  auto fn = [](Graph& g, const ParamStore& p) {
    Tensor w({6});
    for (int i = 0; i < 6; ++i) w.at(i) = i + 1.0;
    return dot_const(g.param("x", &p.at("x")), w);
  };
  GradCheckReport report = grad_check(fn, store);
  CHECK(report.max_rel_err < 1e-8);
}

TEST_CASE("grad_check flags a corrupted gradient") {
  Rng rng(56);
  ParamStore store;
  store.create("x", random_tensor({4}, rng));
  // op that claims dy/dx = 3 but computes y = 2x
  auto fn = [](Graph& g, const ParamStore& p) {
    Var x = g.param("x", &p.at("x"));
    Tensor out(p.at("x").shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 2.0 * p.at("x")[i];
    int ix = x.id;
    Var bad = g.add_op(std::move(out), {ix}, [ix](Graph& gr, int self) {
      const Tensor& dy = gr.grad(self);
      Tensor& dx = gr.grad(ix);
      for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += 3.0 * dy[i];
    });
    return sum(bad);
  };
  GradCheckReport report = grad_check(fn, store);
  CHECK(!report.passed(1e-4));
  CHECK(!report.failures(1e-4).empty());
}

TEST_CASE("weighted_l2 subgradient at zero offset is zero") {
  Tensor gt({2, 2});
  gt.at(0, 0) = 1.0;
  gt.at(1, 0) = 2.0;
  Tensor xs({2}, {1.0, 2.0});  // exactly on gt
  Tensor ys({2});
  Tensor w({2}, {1.0, 1.0});
  Graph g;
  Var vx = g.param("xs", &xs);
  Var vy = g.param("ys", &ys);
  Var loss = weighted_l2(vx, vy, gt, w, 0.5);
  CHECK(loss.value()[0] == 0.0);
  g.backward(loss.id);
  for (int i = 0; i < 2; ++i) {
    CHECK(g.param_grad("xs").at(i) == 0.0);
    CHECK(g.param_grad("ys").at(i) == 0.0);
  }
}

TEST_CASE("softmax_values is a distribution") {
  const auto w = softmax_values({10.0, 5.0});
  CHECK(w[0] == doctest::Approx(0.993307).epsilon(1e-6));
  CHECK(w[1] == doctest::Approx(0.006693).epsilon(1e-4));
  CHECK(w[0] + w[1] == doctest::Approx(1.0).epsilon(1e-12));
}
