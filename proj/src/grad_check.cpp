#include "recoat/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "recoat/error.hpp"
#include "recoat/rng.hpp"

namespace recoat {

std::vector<std::string> GradCheckReport::failures(double tol) const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (!(e.max_rel_err < tol)) out.push_back(e.param);
  return out;
}

GradCheckReport grad_check(const LossBuilder& fn, ParamStore& params,
                           double h, int max_coords_per_param,
                           std::uint64_t seed) {
  GradCheckReport report;

  Graph g;
  Var loss = fn(g, params);
  if (loss.value().size() != 1)
    throw ShapeError("grad_check: loss must be scalar");
  g.backward(loss.id);
  GradMap analytic = g.harvest_grads();

  auto eval = [&]() {
    Graph g2;
    return fn(g2, params).value()[0];
  };

  Rng rng(derive_seed(seed, 0x67636b));
  for (const std::string& name : params.names()) {
    if (!analytic.count(name)) continue;  // not used by this loss
    Tensor& value = params.at(name);
    const Tensor& a = analytic.at(name);
    GradCheckEntry entry{name, 0.0, 0};

    std::vector<std::size_t> coords(value.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    if (max_coords_per_param > 0 &&
        coords.size() > static_cast<std::size_t>(max_coords_per_param)) {
      rng.shuffle(coords);
      coords.resize(static_cast<std::size_t>(max_coords_per_param));
    }

    for (std::size_t i : coords) {
      const double saved = value[i];
      value[i] = saved + h;
      const double up = eval();
      value[i] = saved - h;
      const double down = eval();
      value[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double an = a[i];
      const double rel =
          std::abs(an - fd) / (std::max(std::abs(an), std::abs(fd)) + 1e-3);
      entry.max_rel_err = std::max(entry.max_rel_err, rel);
      ++entry.coords_checked;
    }
    report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace recoat
