#pragma once

#include <string>
#include <vector>

#include "recoat/ops.hpp"
#include "recoat/param_store.hpp"

namespace recoat {

// uniform fan-in initialization U(-1/sqrt(fan_in), +1/sqrt(fan_in))
Tensor init_uniform(const std::vector<int>& shape, int fan_in, Rng& rng);

// LSTM parameters. Gate layout along the 4H axis: input, forget, cell, output.
// Forget-gate bias initialized to 1.
struct LstmParams {
  Var wx;  // (C, 4H)
  Var wh;  // (H, 4H)
  Var b;   // (4H)
  int hidden = 0;
};

void create_lstm_params(ParamStore& store, const std::string& prefix, int in,
                        int hidden, Rng& rng, Partition partition);
LstmParams lstm_param_vars(Graph& g, const ParamStore& store,
                           const std::string& prefix, int hidden);

struct LstmState {
  Var h;  // invalid means zero state
  Var c;
};

// one gated recurrence step; x (C) or (N,C)
LstmState lstm_cell(Var x, const LstmState& prev, const LstmParams& p);

// full recurrence over x (T,C) -> (H), or (N,T,C) -> (N,H); returns the last
// hidden state
Var lstm_sequence(Var x, const LstmParams& p);

struct ConvBlockSpec {
  int kernel = 3;
  int stride = 2;
  int channels = 0;
};

struct CnnConfig {
  int input_h = 240;
  int input_w = 240;
  int input_c = 3;
  std::vector<ConvBlockSpec> blocks{{5, 4, 8}, {5, 4, 16}, {3, 2, 32}, {3, 2, 256}};
  int dense_out = 128;

  int feature_dim() const { return blocks.back().channels; }
};

void create_cnn_params(ParamStore& store, const std::string& prefix,
                       const CnnConfig& cfg, Rng& rng);

// strided conv blocks + ELU, global average pool, dense to cfg.dense_out with
// ELU and dropout; image (H,W,C) in [0,1]
Var cnn_encode(Graph& g, const ParamStore& store, const std::string& prefix,
               const CnnConfig& cfg, const Tensor& image, Mode mode,
               double dropout_rate, Rng* rng);

}  // namespace recoat
