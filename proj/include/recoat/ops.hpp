#pragma once

#include <vector>

#include "recoat/graph.hpp"
#include "recoat/rng.hpp"

namespace recoat {

enum class Mode { train, infer };
enum class Pad { valid, same };

// elementwise, same shape
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double c);

// (R,C) + (C) broadcast over rows; rank-1 + rank-1 degenerates to add
Var add_bias_rows(Var m, Var b);

// (m,k)x(k,n) -> (m,n); a rank-1 lhs (k) yields a rank-1 result (n)
Var matmul(Var a, Var b);

// affine map x*W + b; x rank-1 (in) -> (out), or rank-2 (R,in) -> (R,out)
Var dense(Var x, Var w, Var b);

Var elu(Var x);
Var sigmoid(Var x);
Var tanh_op(Var x);

// log(max(x, floor)); zero gradient on the clamped branch
Var log_clamped(Var x, double floor = 1e-12);

// training mode: zero with probability `rate`, scale survivors by 1/(1-rate);
// inference mode or rate 0: exact identity (returns x itself)
Var dropout(Var x, double rate, Mode mode, Rng& rng);

// x (T,Cin) or (N,T,Cin); kernels (k,Cin,Cout); bias (Cout)
Var conv1d(Var x, Var kernels, Var bias, int stride = 1, Pad pad = Pad::valid);

// x (H,W,Cin); kernels (kh,kw,Cin,Cout); bias (Cout)
Var conv2d(Var x, Var kernels, Var bias, int stride = 1, Pad pad = Pad::valid);

// (H,W,C) -> (C)
Var global_avg_pool(Var x);

// (T,C) -> (C) at step t, or (N,T,C) -> (N,C)
Var time_slice(Var x, int t);

// columns [c0,c1) of a rank-1 (C) or rank-2 (N,C) tensor
Var col_slice(Var x, int c0, int c1);

// rank-1 concatenation
Var concat(const std::vector<Var>& xs);

// (n,D) -> (total,D), rows n..total-1 exactly zero
Var pad_rows(Var x, int total);

// weights are constants: out_d = sum_i weights_i * values(i,d)
Var att_pool(Var values, const Tensor& weights);

// elementwise max over the rows of (N,D) -> (D); ties route the gradient to
// the lowest row index
Var max_rows(Var x);

// max-stabilized softmax over a rank-1 tensor
Var softmax(Var x);

// sum_i w_i * x_i for constant w, rank-1 x -> scalar
Var dot_const(Var x, const Tensor& w);

Var sum(Var x);

// scalar inv_t * sum_t w_t * ||(xs_t,ys_t) - gt_t||_2, subgradient 0 at zero
// offset; xs, ys rank-1 of length T, gt (T,2), w (T)
Var weighted_l2(Var xs, Var ys, const Tensor& gt, const Tensor& w,
                double inv_t);

// numeric softmax used by the attention weights and loss targets
std::vector<double> softmax_values(const std::vector<double>& x);

}  // namespace recoat
