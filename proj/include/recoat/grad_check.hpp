#pragma once

#include <functional>
#include <string>
#include <vector>

#include "recoat/graph.hpp"
#include "recoat/param_store.hpp"

namespace recoat {

struct GradCheckEntry {
  std::string param;
  double max_rel_err = 0.0;
  int coords_checked = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;

  bool passed(double tol) const { return max_rel_err < tol; }
  std::vector<std::string> failures(double tol) const;
};

// Builds the scalar loss from the current parameter values. Must be
// deterministic (dropout in inference mode or a fixed mask).
using LossBuilder = std::function<Var(Graph&, const ParamStore&)>;

// Central finite differences against reverse-mode gradients, per coordinate.
// `max_coords_per_param` > 0 checks a seeded random subset of coordinates per
// parameter (still central differences, just subsampled). Relative error is
// |a - f| / (max(|a|,|f|) + 1e-3), i.e. pass at tol means
// |a - f| < tol*max(|a|,|f|) + 1e-3*tol.
GradCheckReport grad_check(const LossBuilder& fn, ParamStore& params,
                           double h = 1e-5, int max_coords_per_param = 0,
                           std::uint64_t seed = 0);

}  // namespace recoat
