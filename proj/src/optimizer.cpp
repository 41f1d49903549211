#include "recoat/optimizer.hpp"

#include <cmath>

#include "recoat/error.hpp"

namespace recoat {

void Nadam::init(const ParamStore& params) {
  m_.clear();
  v_.clear();
  step_ = 0;
  for (const std::string& name : params.names()) {
    m_[name] = Tensor(params.at(name).shape());
    v_[name] = Tensor(params.at(name).shape());
  }
}

void Nadam::step(ParamStore& params, const GradMap& grads, double lr) {
  if (m_.empty()) init(params);
  ++step_;
  const double t = static_cast<double>(step_);
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double m_corr = 1.0 - std::pow(b1, t + 1.0);
  const double g_corr = 1.0 - std::pow(b1, t);
  const double v_corr = 1.0 - std::pow(b2, t);
  for (const std::string& name : params.names()) {
    auto git = grads.find(name);
    if (git == grads.end())
      throw ValueError("optimizer step missing gradient for " + name);
    Tensor& p = params.at(name);
    const Tensor& g = git->second;
    if (!p.same_shape(g))
      throw ShapeError("gradient shape mismatch for " + name);
    Tensor& m = m_.at(name);
    Tensor& v = v_.at(name);
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double update = b1 * m[i] / m_corr + (1.0 - b1) * g[i] / g_corr;
      p[i] -= lr * update / (std::sqrt(v[i] / v_corr) + cfg_.epsilon);
    }
  }
}

NamedTensors Nadam::state() const {
  NamedTensors out;
  out.emplace_back("__step__", Tensor::scalar(static_cast<double>(step_)));
  for (const auto& [name, t] : m_) out.emplace_back("m." + name, t);
  for (const auto& [name, t] : v_) out.emplace_back("v." + name, t);
  return out;
}

void Nadam::load_state(const NamedTensors& tensors, const ParamStore& params) {
  init(params);
  bool have_step = false;
  for (const auto& [name, t] : tensors) {
    if (name == "__step__") {
      step_ = static_cast<long>(t[0]);
      have_step = true;
    } else if (name.rfind("m.", 0) == 0) {
      m_.at(name.substr(2)) = t;
    } else if (name.rfind("v.", 0) == 0) {
      v_.at(name.substr(2)) = t;
    } else {
      throw ParseError("unexpected optimizer state entry: " + name);
    }
  }
  if (!have_step) throw ParseError("optimizer state missing step counter");
}

void Nadam::round_state_to_f32() {
  for (auto& [name, t] : m_) round_to_f32(t);
  for (auto& [name, t] : v_) round_to_f32(t);
}

}  // namespace recoat
