#pragma once

#include "recoat/checkpoint.hpp"
#include "recoat/graph.hpp"
#include "recoat/param_store.hpp"

namespace recoat {

struct NadamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Nesterov-accelerated Adam. Moments mirror the parameter shapes; the step
// counter is shared.
class Nadam {
 public:
  explicit Nadam(NadamConfig cfg = {}) : cfg_(cfg) {}

  // zeroed first/second moments for every parameter
  void init(const ParamStore& params);

  void step(ParamStore& params, const GradMap& grads, double lr);

  long step_count() const { return step_; }

  // moments and step counter as named tensors ("m.<name>", "v.<name>",
  // "__step__"), for resumable checkpoints
  NamedTensors state() const;
  void load_state(const NamedTensors& tensors, const ParamStore& params);
  void round_state_to_f32();

 private:
  NadamConfig cfg_;
  GradMap m_, v_;
  long step_ = 0;
};

}  // namespace recoat
