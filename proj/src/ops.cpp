#include "recoat/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>

#include "recoat/error.hpp"

namespace recoat {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

namespace {

ConstMatMap as_mat(const Tensor& t, int rows, int cols) {
  return ConstMatMap(t.data(), rows, cols);
}
MatMap as_mat(Tensor& t, int rows, int cols) {
  return MatMap(t.data(), rows, cols);
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw ShapeError(msg);
}

Graph& same_graph(Var a, Var b) {
  if (a.g != b.g) throw ValueError("ops require vars from one graph");
  return *a.g;
}

}  // namespace

Var add(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& ta = a.value();
  const Tensor& tb = b.value();
  require(ta.same_shape(tb), "add: shape mismatch " + ta.shape_str() + " vs " +
                                 tb.shape_str());
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta[i] + tb[i];
  int ia = a.id, ib = b.id;
  return g.add_op(std::move(out), {ia, ib}, [ia, ib](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    Tensor& da = gr.grad(ia);
    Tensor& db = gr.grad(ib);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i];
      db[i] += dy[i];
    }
  });
}

Var sub(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& ta = a.value();
  const Tensor& tb = b.value();
  require(ta.same_shape(tb), "sub: shape mismatch");
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta[i] - tb[i];
  int ia = a.id, ib = b.id;
  return g.add_op(std::move(out), {ia, ib}, [ia, ib](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    Tensor& da = gr.grad(ia);
    Tensor& db = gr.grad(ib);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i];
      db[i] -= dy[i];
    }
  });
}

Var mul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& ta = a.value();
  const Tensor& tb = b.value();
  require(ta.same_shape(tb), "mul: shape mismatch");
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ta[i] * tb[i];
  int ia = a.id, ib = b.id;
  return g.add_op(std::move(out), {ia, ib}, [ia, ib](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    const Tensor& va = gr.value(ia);
    const Tensor& vb = gr.value(ib);
    Tensor& da = gr.grad(ia);
    Tensor& db = gr.grad(ib);
    for (std::size_t i = 0; i < dy.size(); ++i) {
      da[i] += dy[i] * vb[i];
      db[i] += dy[i] * va[i];
    }
  });
}

Var scale(Var a, double c) {
  Graph& g = *a.g;
  const Tensor& ta = a.value();
  Tensor out(ta.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * ta[i];
  int ia = a.id;
  return g.add_op(std::move(out), {ia}, [ia, c](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    Tensor& da = gr.grad(ia);
    for (std::size_t i = 0; i < dy.size(); ++i) da[i] += c * dy[i];
  });
}

Var add_bias_rows(Var m, Var b) {
  Graph& g = same_graph(m, b);
  const Tensor& tm = m.value();
  const Tensor& tb = b.value();
  require(tb.rank() == 1, "add_bias_rows: bias must be rank-1");
  if (tm.rank() == 1) return add(m, b);
  require(tm.rank() == 2 && tm.dim(1) == tb.dim(0),
          "add_bias_rows: shape mismatch");
  const int rows = tm.dim(0), cols = tm.dim(1);
  Tensor out(tm.shape());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) out.at(r, c) = tm.at(r, c) + tb.at(c);
  int im = m.id, ib = b.id;
  return g.add_op(std::move(out), {im, ib},
                  [im, ib, rows, cols](Graph& gr, int self) {
                    const Tensor& dy = gr.grad(self);
                    Tensor& dm = gr.grad(im);
                    Tensor& db = gr.grad(ib);
                    for (int r = 0; r < rows; ++r)
                      for (int c = 0; c < cols; ++c) {
                        dm.at(r, c) += dy.at(r, c);
                        db.at(c) += dy.at(r, c);
                      }
                  });
}

Var matmul(Var a, Var b) {
  Graph& g = same_graph(a, b);
  const Tensor& ta = a.value();
  const Tensor& tb = b.value();
  require(tb.rank() == 2, "matmul: rhs must be rank-2");
  const bool vec = ta.rank() == 1;
  const int m = vec ? 1 : ta.dim(0);
  const int k = vec ? ta.dim(0) : ta.dim(1);
  require(ta.rank() <= 2 && k == tb.dim(0),
          "matmul: inner dimensions disagree " + ta.shape_str() + " x " +
              tb.shape_str());
  const int n = tb.dim(1);
  Tensor out(vec ? std::vector<int>{n} : std::vector<int>{m, n});
  as_mat(out, m, n).noalias() = as_mat(ta, m, k) * as_mat(tb, k, n);
  int ia = a.id, ib = b.id;
  return g.add_op(std::move(out), {ia, ib},
                  [ia, ib, m, k, n](Graph& gr, int self) {
                    const Tensor& dy = gr.grad(self);
                    const Tensor& va = gr.value(ia);
                    const Tensor& vb = gr.value(ib);
                    as_mat(gr.grad(ia), m, k).noalias() +=
                        as_mat(dy, m, n) * as_mat(vb, k, n).transpose();
                    as_mat(gr.grad(ib), k, n).noalias() +=
                        as_mat(va, m, k).transpose() * as_mat(dy, m, n);
                  });
}

Var dense(Var x, Var w, Var b) {
  Graph& g = same_graph(x, w);
  same_graph(x, b);
  const Tensor& tx = x.value();
  const Tensor& tw = w.value();
  const Tensor& tb = b.value();
  require(tw.rank() == 2, "dense: weights must be rank-2");
  const bool vec = tx.rank() == 1;
  const int rows = vec ? 1 : tx.dim(0);
  const int in = vec ? tx.dim(0) : tx.dim(1);
  const int out_dim = tw.dim(1);
  require(tx.rank() <= 2 && in == tw.dim(0),
          "dense: input/weight shapes disagree " + tx.shape_str() + " x " +
              tw.shape_str());
  require(tb.rank() == 1 && tb.dim(0) == out_dim, "dense: bad bias shape");
  Tensor out(vec ? std::vector<int>{out_dim} : std::vector<int>{rows, out_dim});
  auto y = as_mat(out, rows, out_dim);
  y.noalias() = as_mat(tx, rows, in) * as_mat(tw, in, out_dim);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < out_dim; ++c) out[static_cast<std::size_t>(r) * out_dim + c] += tb.at(c);
  int ix = x.id, iw = w.id, ib = b.id;
  return g.add_op(std::move(out), {ix, iw, ib},
                  [ix, iw, ib, rows, in, out_dim](Graph& gr, int self) {
                    const Tensor& dy = gr.grad(self);
                    auto dym = as_mat(dy, rows, out_dim);
                    as_mat(gr.grad(ix), rows, in).noalias() +=
                        dym * as_mat(gr.value(iw), in, out_dim).transpose();
                    as_mat(gr.grad(iw), in, out_dim).noalias() +=
                        as_mat(gr.value(ix), rows, in).transpose() * dym;
                    Tensor& db = gr.grad(ib);
                    for (int r = 0; r < rows; ++r)
                      for (int c = 0; c < out_dim; ++c)
                        db.at(c) += dy[static_cast<std::size_t>(r) * out_dim + c];
                  });
}

Var elu(Var x) {
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = tx[i] > 0.0 ? tx[i] : std::expm1(tx[i]);
  int ix = x.id;
  return g.add_op(std::move(out), {ix}, [ix](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    const Tensor& y = gr.value(self);
    const Tensor& vx = gr.value(ix);
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < dy.size(); ++i)
      dx[i] += dy[i] * (vx[i] > 0.0 ? 1.0 : y[i] + 1.0);
  });
}

Var sigmoid(Var x) {
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = tx[i];
    out[i] = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                      : std::exp(v) / (1.0 + std::exp(v));
  }
  int ix = x.id;
  return g.add_op(std::move(out), {ix}, [ix](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    const Tensor& y = gr.value(self);
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < dy.size(); ++i)
      dx[i] += dy[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh_op(Var x) {
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(tx[i]);
  int ix = x.id;
  return g.add_op(std::move(out), {ix}, [ix](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    const Tensor& y = gr.value(self);
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < dy.size(); ++i)
      dx[i] += dy[i] * (1.0 - y[i] * y[i]);
  });
}

Var log_clamped(Var x, double floor) {
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::log(std::max(tx[i], floor));
  int ix = x.id;
  return g.add_op(std::move(out), {ix}, [ix, floor](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    const Tensor& vx = gr.value(ix);
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < dy.size(); ++i)
      if (vx[i] > floor) dx[i] += dy[i] / vx[i];
  });
}

Var dropout(Var x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw ValueError("dropout rate must be in [0,1)");
  if (mode == Mode::infer || rate == 0.0) return x;
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  auto mask = std::make_shared<Tensor>(tx.shape());
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor out(tx.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = rng.uniform() >= rate ? keep_scale : 0.0;
    out[i] = tx[i] * (*mask)[i];
  }
  int ix = x.id;
  return g.add_op(std::move(out), {ix}, [ix, mask](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] += dy[i] * (*mask)[i];
  });
}

namespace {

struct ConvAxis {
  int k = 0, stride = 1, pad_lo = 0, out = 0;
};

ConvAxis conv_axis(int in, int k, int stride, Pad pad) {
  ConvAxis a;
  a.k = k;
  a.stride = stride;
  if (pad == Pad::valid) {
    require(in >= k, "conv: input shorter than kernel under valid padding");
    a.pad_lo = 0;
    a.out = (in - k) / stride + 1;
  } else {
    a.out = (in + stride - 1) / stride;
    int total = std::max(0, (a.out - 1) * stride + k - in);
    a.pad_lo = total / 2;
  }
  return a;
}

}  // namespace

Var conv1d(Var x, Var kernels, Var bias, int stride, Pad pad) {
  Graph& g = same_graph(x, kernels);
  same_graph(x, bias);
  const Tensor& tx = x.value();
  const Tensor& tk = kernels.value();
  const Tensor& tb = bias.value();
  require(tk.rank() == 3, "conv1d: kernels must be (k,Cin,Cout)");
  require(tx.rank() == 2 || tx.rank() == 3,
          "conv1d: input must be (T,Cin) or (N,T,Cin)");
  const bool batched = tx.rank() == 3;
  const int n = batched ? tx.dim(0) : 1;
  const int t_in = batched ? tx.dim(1) : tx.dim(0);
  const int c_in = batched ? tx.dim(2) : tx.dim(1);
  const int k = tk.dim(0), c_out = tk.dim(2);
  require(tk.dim(1) == c_in, "conv1d: channel mismatch");
  require(tb.rank() == 1 && tb.dim(0) == c_out, "conv1d: bad bias shape");
  require(stride >= 1, "conv1d: stride must be positive");
  const ConvAxis ax = conv_axis(t_in, k, stride, pad);
  const int patch = k * c_in;

  auto cols = std::make_shared<RowMat>(RowMat::Zero(n * ax.out, patch));
  for (int b = 0; b < n; ++b) {
    const double* xb = tx.data() + static_cast<std::size_t>(b) * t_in * c_in;
    for (int t = 0; t < ax.out; ++t) {
      double* row = cols->row(b * ax.out + t).data();
      const int t0 = t * stride - ax.pad_lo;
      for (int kk = 0; kk < k; ++kk) {
        const int ti = t0 + kk;
        if (ti < 0 || ti >= t_in) continue;
        const double* src = xb + static_cast<std::size_t>(ti) * c_in;
        std::copy(src, src + c_in, row + kk * c_in);
      }
    }
  }
  Tensor out(batched ? std::vector<int>{n, ax.out, c_out}
                     : std::vector<int>{ax.out, c_out});
  auto ym = as_mat(out, n * ax.out, c_out);
  ym.noalias() = (*cols) * as_mat(tk, patch, c_out);
  for (int r = 0; r < n * ax.out; ++r)
    for (int c = 0; c < c_out; ++c)
      out[static_cast<std::size_t>(r) * c_out + c] += tb.at(c);

  int ix = x.id, ik = kernels.id, ib = bias.id;
  return g.add_op(
      std::move(out), {ix, ik, ib},
      [=](Graph& gr, int self) {
        const Tensor& dy = gr.grad(self);
        auto dym = as_mat(dy, n * ax.out, c_out);
        as_mat(gr.grad(ik), patch, c_out).noalias() +=
            cols->transpose() * dym;
        Tensor& db = gr.grad(ib);
        for (int r = 0; r < n * ax.out; ++r)
          for (int c = 0; c < c_out; ++c)
            db.at(c) += dy[static_cast<std::size_t>(r) * c_out + c];
        RowMat dcols = dym * as_mat(gr.value(ik), patch, c_out).transpose();
        Tensor& dx = gr.grad(ix);
        for (int b = 0; b < n; ++b) {
          double* dxb = dx.data() + static_cast<std::size_t>(b) * t_in * c_in;
          for (int t = 0; t < ax.out; ++t) {
            const double* row = dcols.row(b * ax.out + t).data();
            const int t0 = t * stride - ax.pad_lo;
            for (int kk = 0; kk < k; ++kk) {
              const int ti = t0 + kk;
              if (ti < 0 || ti >= t_in) continue;
              double* dst = dxb + static_cast<std::size_t>(ti) * c_in;
              const double* src = row + kk * c_in;
              for (int c = 0; c < c_in; ++c) dst[c] += src[c];
            }
          }
        }
      });
}

Var conv2d(Var x, Var kernels, Var bias, int stride, Pad pad) {
  Graph& g = same_graph(x, kernels);
  same_graph(x, bias);
  const Tensor& tx = x.value();
  const Tensor& tk = kernels.value();
  const Tensor& tb = bias.value();
  require(tx.rank() == 3, "conv2d: input must be (H,W,Cin)");
  require(tk.rank() == 4, "conv2d: kernels must be (kh,kw,Cin,Cout)");
  const int h = tx.dim(0), w = tx.dim(1), c_in = tx.dim(2);
  const int kh = tk.dim(0), kw = tk.dim(1), c_out = tk.dim(3);
  require(tk.dim(2) == c_in, "conv2d: channel mismatch");
  require(tb.rank() == 1 && tb.dim(0) == c_out, "conv2d: bad bias shape");
  require(stride >= 1, "conv2d: stride must be positive");
  const ConvAxis ah = conv_axis(h, kh, stride, pad);
  const ConvAxis aw = conv_axis(w, kw, stride, pad);
  const int patch = kh * kw * c_in;
  const int out_pix = ah.out * aw.out;

  auto cols = std::make_shared<RowMat>(RowMat::Zero(out_pix, patch));
  for (int oh = 0; oh < ah.out; ++oh) {
    const int h0 = oh * stride - ah.pad_lo;
    for (int ow = 0; ow < aw.out; ++ow) {
      const int w0 = ow * stride - aw.pad_lo;
      double* row = cols->row(oh * aw.out + ow).data();
      for (int ky = 0; ky < kh; ++ky) {
        const int hi = h0 + ky;
        if (hi < 0 || hi >= h) continue;
        for (int kx = 0; kx < kw; ++kx) {
          const int wi = w0 + kx;
          if (wi < 0 || wi >= w) continue;
          const double* src =
              tx.data() + (static_cast<std::size_t>(hi) * w + wi) * c_in;
          std::copy(src, src + c_in, row + (ky * kw + kx) * c_in);
        }
      }
    }
  }
  Tensor out({ah.out, aw.out, c_out});
  auto ym = as_mat(out, out_pix, c_out);
  ym.noalias() = (*cols) * as_mat(tk, patch, c_out);
  for (int r = 0; r < out_pix; ++r)
    for (int c = 0; c < c_out; ++c)
      out[static_cast<std::size_t>(r) * c_out + c] += tb.at(c);

  int ix = x.id, ik = kernels.id, ib = bias.id;
  return g.add_op(
      std::move(out), {ix, ik, ib},
      [=](Graph& gr, int self) {
        const Tensor& dy = gr.grad(self);
        auto dym = as_mat(dy, out_pix, c_out);
        as_mat(gr.grad(ik), patch, c_out).noalias() +=
            cols->transpose() * dym;
        Tensor& db = gr.grad(ib);
        for (int r = 0; r < out_pix; ++r)
          for (int c = 0; c < c_out; ++c)
            db.at(c) += dy[static_cast<std::size_t>(r) * c_out + c];
        RowMat dcols = dym * as_mat(gr.value(ik), patch, c_out).transpose();
        Tensor& dx = gr.grad(ix);
        for (int oh = 0; oh < ah.out; ++oh) {
          const int h0 = oh * stride - ah.pad_lo;
          for (int ow = 0; ow < aw.out; ++ow) {
            const int w0 = ow * stride - aw.pad_lo;
            const double* row = dcols.row(oh * aw.out + ow).data();
            for (int ky = 0; ky < kh; ++ky) {
              const int hi = h0 + ky;
              if (hi < 0 || hi >= h) continue;
              for (int kx = 0; kx < kw; ++kx) {
                const int wi = w0 + kx;
                if (wi < 0 || wi >= w) continue;
                double* dst =
                    dx.data() + (static_cast<std::size_t>(hi) * w + wi) * c_in;
                const double* src = row + (ky * kw + kx) * c_in;
                for (int c = 0; c < c_in; ++c) dst[c] += src[c];
              }
            }
          }
        }
      });
}

Var global_avg_pool(Var x) {
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  require(tx.rank() == 3, "global_avg_pool: input must be (H,W,C)");
  const int h = tx.dim(0), w = tx.dim(1), c = tx.dim(2);
  const double inv = 1.0 / (static_cast<double>(h) * w);
  Tensor out({c});
  for (int i = 0; i < h * w; ++i)
    for (int ch = 0; ch < c; ++ch)
      out.at(ch) += tx[static_cast<std::size_t>(i) * c + ch];
  for (int ch = 0; ch < c; ++ch) out.at(ch) *= inv;
  int ix = x.id;
  return g.add_op(std::move(out), {ix}, [ix, h, w, c, inv](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    Tensor& dx = gr.grad(ix);
    for (int i = 0; i < h * w; ++i)
      for (int ch = 0; ch < c; ++ch)
        dx[static_cast<std::size_t>(i) * c + ch] += dy.at(ch) * inv;
  });
}

Var time_slice(Var x, int t) {
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  require(tx.rank() == 2 || tx.rank() == 3, "time_slice: rank must be 2 or 3");
  if (tx.rank() == 2) {
    const int t_len = tx.dim(0), c = tx.dim(1);
    require(t >= 0 && t < t_len, "time_slice: index out of range");
    Tensor out({c});
    std::copy(tx.data() + static_cast<std::size_t>(t) * c,
              tx.data() + static_cast<std::size_t>(t + 1) * c, out.data());
    int ix = x.id;
    return g.add_op(std::move(out), {ix}, [ix, t, c](Graph& gr, int self) {
      const Tensor& dy = gr.grad(self);
      Tensor& dx = gr.grad(ix);
      for (int i = 0; i < c; ++i)
        dx[static_cast<std::size_t>(t) * c + i] += dy[static_cast<std::size_t>(i)];
    });
  }
  const int n = tx.dim(0), t_len = tx.dim(1), c = tx.dim(2);
  require(t >= 0 && t < t_len, "time_slice: index out of range");
  Tensor out({n, c});
  for (int b = 0; b < n; ++b)
    std::copy(tx.data() + (static_cast<std::size_t>(b) * t_len + t) * c,
              tx.data() + (static_cast<std::size_t>(b) * t_len + t + 1) * c,
              out.data() + static_cast<std::size_t>(b) * c);
  int ix = x.id;
  return g.add_op(std::move(out), {ix}, [ix, n, t_len, t, c](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    Tensor& dx = gr.grad(ix);
    for (int b = 0; b < n; ++b)
      for (int i = 0; i < c; ++i)
        dx[(static_cast<std::size_t>(b) * t_len + t) * c + i] +=
            dy[static_cast<std::size_t>(b) * c + i];
  });
}

Var col_slice(Var x, int c0, int c1) {
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  require(tx.rank() == 1 || tx.rank() == 2, "col_slice: rank must be 1 or 2");
  const bool vec = tx.rank() == 1;
  const int rows = vec ? 1 : tx.dim(0);
  const int cols = vec ? tx.dim(0) : tx.dim(1);
  require(0 <= c0 && c0 < c1 && c1 <= cols, "col_slice: bad column range");
  const int width = c1 - c0;
  Tensor out(vec ? std::vector<int>{width} : std::vector<int>{rows, width});
  for (int r = 0; r < rows; ++r)
    std::copy(tx.data() + static_cast<std::size_t>(r) * cols + c0,
              tx.data() + static_cast<std::size_t>(r) * cols + c1,
              out.data() + static_cast<std::size_t>(r) * width);
  int ix = x.id;
  return g.add_op(std::move(out), {ix},
                  [ix, rows, cols, c0, width](Graph& gr, int self) {
                    const Tensor& dy = gr.grad(self);
                    Tensor& dx = gr.grad(ix);
                    for (int r = 0; r < rows; ++r)
                      for (int i = 0; i < width; ++i)
                        dx[static_cast<std::size_t>(r) * cols + c0 + i] +=
                            dy[static_cast<std::size_t>(r) * width + i];
                  });
}

Var concat(const std::vector<Var>& xs) {
  if (xs.empty()) throw ValueError("concat: empty input list");
  Graph& g = *xs[0].g;
  int total = 0;
  std::vector<int> ids;
  std::vector<int> lens;
  for (Var v : xs) {
    same_graph(xs[0], v);
    require(v.value().rank() == 1, "concat: rank-1 inputs only");
    ids.push_back(v.id);
    lens.push_back(v.value().dim(0));
    total += v.value().dim(0);
  }
  Tensor out({total});
  int off = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Tensor& t = g.value(ids[i]);
    std::copy(t.data(), t.data() + lens[i], out.data() + off);
    off += lens[i];
  }
  return g.add_op(std::move(out), ids, [ids, lens](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    int off = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      Tensor& dx = gr.grad(ids[i]);
      for (int j = 0; j < lens[i]; ++j) dx.at(j) += dy[static_cast<std::size_t>(off + j)];
      off += lens[i];
    }
  });
}

Var pad_rows(Var x, int total) {
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  require(tx.rank() == 2, "pad_rows: input must be rank-2");
  const int n = tx.dim(0), d = tx.dim(1);
  require(total >= n, "pad_rows: total smaller than row count");
  Tensor out({total, d});
  std::copy(tx.data(), tx.data() + tx.size(), out.data());
  int ix = x.id;
  return g.add_op(std::move(out), {ix}, [ix, n, d](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < static_cast<std::size_t>(n) * d; ++i)
      dx[i] += dy[i];
  });
}

Var att_pool(Var values, const Tensor& weights) {
  Graph& g = *values.g;
  const Tensor& tv = values.value();
  require(tv.rank() == 2, "att_pool: values must be (N,D)");
  const int n = tv.dim(0), d = tv.dim(1);
  require(weights.rank() == 1 && weights.dim(0) == n,
          "att_pool: weights/values shapes disagree");
  Tensor out({d});
  for (int i = 0; i < n; ++i) {
    const double wi = weights.at(i);
    const double* row = tv.data() + static_cast<std::size_t>(i) * d;
    for (int j = 0; j < d; ++j) out.at(j) += wi * row[j];
  }
  int iv = values.id;
  Tensor w_copy = weights;
  return g.add_op(std::move(out), {iv},
                  [iv, n, d, w = std::move(w_copy)](Graph& gr, int self) {
                    const Tensor& dy = gr.grad(self);
                    Tensor& dv = gr.grad(iv);
                    for (int i = 0; i < n; ++i) {
                      const double wi = w.at(i);
                      double* row = dv.data() + static_cast<std::size_t>(i) * d;
                      for (int j = 0; j < d; ++j) row[j] += wi * dy.at(j);
                    }
                  });
}

Var max_rows(Var x) {
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  require(tx.rank() == 2, "max_rows: input must be (N,D)");
  const int n = tx.dim(0), d = tx.dim(1);
  require(n >= 1, "max_rows: needs at least one row");
  Tensor out({d});
  auto argmax = std::make_shared<std::vector<int>>(d, 0);
  for (int j = 0; j < d; ++j) {
    double best = tx.at(0, j);
    for (int i = 1; i < n; ++i)
      if (tx.at(i, j) > best) {
        best = tx.at(i, j);
        (*argmax)[static_cast<std::size_t>(j)] = i;
      }
    out.at(j) = best;
  }
  int ix = x.id;
  return g.add_op(std::move(out), {ix}, [ix, d, argmax](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    Tensor& dx = gr.grad(ix);
    for (int j = 0; j < d; ++j)
      dx.at((*argmax)[static_cast<std::size_t>(j)], j) += dy.at(j);
  });
}

Var softmax(Var x) {
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  require(tx.rank() == 1, "softmax: rank-1 input only");
  const int n = tx.dim(0);
  Tensor out({n});
  double mx = tx[0];
  for (int i = 1; i < n; ++i) mx = std::max(mx, tx.at(i));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    out.at(i) = std::exp(tx.at(i) - mx);
    total += out.at(i);
  }
  for (int i = 0; i < n; ++i) out.at(i) /= total;
  int ix = x.id;
  return g.add_op(std::move(out), {ix}, [ix, n](Graph& gr, int self) {
    const Tensor& dy = gr.grad(self);
    const Tensor& y = gr.value(self);
    Tensor& dx = gr.grad(ix);
    double dot = 0.0;
    for (int i = 0; i < n; ++i) dot += dy.at(i) * y.at(i);
    for (int i = 0; i < n; ++i) dx.at(i) += y.at(i) * (dy.at(i) - dot);
  });
}

Var dot_const(Var x, const Tensor& w) {
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  require(tx.rank() == 1 && w.rank() == 1 && tx.dim(0) == w.dim(0),
          "dot_const: shape mismatch");
  const int n = tx.dim(0);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += tx.at(i) * w.at(i);
  int ix = x.id;
  Tensor w_copy = w;
  return g.add_op(Tensor::scalar(acc), {ix},
                  [ix, n, wc = std::move(w_copy)](Graph& gr, int self) {
                    const double dy = gr.grad(self)[0];
                    Tensor& dx = gr.grad(ix);
                    for (int i = 0; i < n; ++i) dx.at(i) += dy * wc.at(i);
                  });
}

Var sum(Var x) {
  Graph& g = *x.g;
  const Tensor& tx = x.value();
  double acc = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) acc += tx[i];
  int ix = x.id;
  return g.add_op(Tensor::scalar(acc), {ix}, [ix](Graph& gr, int self) {
    const double dy = gr.grad(self)[0];
    Tensor& dx = gr.grad(ix);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy;
  });
}

Var weighted_l2(Var xs, Var ys, const Tensor& gt, const Tensor& w,
                double inv_t) {
  Graph& g = same_graph(xs, ys);
  const Tensor& tx = xs.value();
  const Tensor& ty = ys.value();
  require(tx.rank() == 1 && ty.rank() == 1 && tx.dim(0) == ty.dim(0),
          "weighted_l2: xs/ys must be rank-1 of equal length");
  const int t_len = tx.dim(0);
  require(gt.rank() == 2 && gt.dim(0) == t_len && gt.dim(1) == 2,
          "weighted_l2: gt must be (T,2)");
  require(w.rank() == 1 && w.dim(0) == t_len, "weighted_l2: bad weight shape");
  auto norms = std::make_shared<std::vector<double>>(t_len);
  double acc = 0.0;
  for (int t = 0; t < t_len; ++t) {
    const double dx = tx.at(t) - gt.at(t, 0);
    const double dy = ty.at(t) - gt.at(t, 1);
    (*norms)[static_cast<std::size_t>(t)] = std::sqrt(dx * dx + dy * dy);
    acc += w.at(t) * (*norms)[static_cast<std::size_t>(t)];
  }
  acc *= inv_t;
  int ix = xs.id, iy = ys.id;
  Tensor gt_copy = gt, w_copy = w;
  return g.add_op(
      Tensor::scalar(acc), {ix, iy},
      [ix, iy, t_len, inv_t, norms, gtc = std::move(gt_copy),
       wc = std::move(w_copy)](Graph& gr, int self) {
        const double dy0 = gr.grad(self)[0];
        const Tensor& vx = gr.value(ix);
        const Tensor& vy = gr.value(iy);
        Tensor& dxs = gr.grad(ix);
        Tensor& dys = gr.grad(iy);
        for (int t = 0; t < t_len; ++t) {
          const double r = (*norms)[static_cast<std::size_t>(t)];
          if (r == 0.0) continue;  // subgradient 0 at the kink
          const double c = dy0 * inv_t * wc.at(t) / r;
          dxs.at(t) += c * (vx.at(t) - gtc.at(t, 0));
          dys.at(t) += c * (vy.at(t) - gtc.at(t, 1));
        }
      });
}

std::vector<double> softmax_values(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  double mx = x[0];
  for (double v : x) mx = std::max(mx, v);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace recoat
