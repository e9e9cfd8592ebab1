#pragma once

#include <iomanip>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "rebec/forcing_noise.hpp"
#include "rebec/metrics.hpp"
#include "rebec/parallel.hpp"
#include "rebec/param_space.hpp"
#include "rebec/wave_model.hpp"

namespace rebec {

struct axis_spec {
  std::string parameter;
  double lo = 0.0, hi = 0.0;
  std::size_t points = 1;

  double at(std::size_t i) const { return points == 1 ? lo : lo + (hi - lo) * double(i) / double(points - 1); }
};

struct surface_point {
  parameter_vector theta;
  std::size_t member = 0;
  double rmse_pooled = 0.0;
};

/// Dense pooled-RMSE scan over two parameters with the third held at
/// `fixed`, one surface per forcing. Output order: member, then y, then x.
inline std::vector<surface_point> error_surface(const model_adapter& model, const std::vector<wind_field>& forcings,
                                                const series_set& observations, const axis_spec& x, const axis_spec& y,
                                                const parameter_vector& fixed, const parameter_bounds& bounds,
                                                std::size_t jobs = 1) {
  const auto kx = parameter_index(x.parameter), ky = parameter_index(y.parameter);
  if (kx == ky) throw config_error("surface axes must name two different parameters");
  if (x.points < 1 || y.points < 1) throw config_error("surface axes need at least one point");
  for (const auto* a : {&x, &y}) {
    const auto& r = bounds[parameter_index(a->parameter)];
    if (!r.contains(a->lo) || !r.contains(a->hi)) throw config_error("surface axis " + a->parameter + " leaves bounds");
  }
  const std::size_t cells = x.points * y.points;
  std::vector<surface_point> out(cells * forcings.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const std::size_t m = i / cells, c = i % cells;
    parameter_vector theta = fixed;
    theta[kx] = x.at(c % x.points);
    theta[ky] = y.at(c / x.points);
    out[i] = {theta, m, pooled_objectives(model.evaluate(theta, forcings[m]), observations)[0]};
  });
  return out;
}

/// drg,cfw,stpm,member,rmse_pooled
inline void write_surface_csv(std::ostream& os, const std::vector<surface_point>& pts) {
  os << "drg,cfw,stpm,member,rmse_pooled\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& p : pts)
    os << p.theta.drg << ',' << p.theta.cfw << ',' << p.theta.stpm << ',' << p.member << ',' << p.rmse_pooled << '\n';
}

}  // namespace rebec
