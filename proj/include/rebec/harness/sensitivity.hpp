#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "rebec/metrics.hpp"
#include "rebec/param_space.hpp"
#include "rebec/random.hpp"
#include "rebec/wave_model.hpp"

namespace rebec::harness {

struct sensitivity_row {
  std::string parameter;
  std::size_t run = 0;
  double value = 0.0;
  double rel_input_change = 0.0;   // |p' - p| / |p|
  std::string station;             // station id or "pooled"
  double rel_output_change = 0.0;  // RMSE(out', out) / mean(out)
};

/// One-at-a-time perturbation: each run adds N(0, rel_sd |p|) to the named
/// parameter only, clamps to bounds and compares the surrogate output with
/// the unperturbed run.
inline std::vector<sensitivity_row> run_sensitivity(const std::string& param, std::size_t n, double rel_sd,
                                                    const parameter_vector& base, const wind_field& wind,
                                                    const bathymetry_grid& bathy, const station_set& stations,
                                                    std::uint64_t seed, const parameter_bounds& bounds = {}) {
  const auto k = parameter_index(param);
  if (n < 2) throw config_error("sensitivity analysis needs at least 2 runs");
  if (rel_sd < 0.0) throw config_error("relative sd must be >= 0");

  const auto reference = surrogate_evaluate(base, wind, bathy, stations);
  auto mean_of = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / double(v.size());
  };
  std::vector<double> all_ref;
  for (const auto& s : reference) all_ref.insert(all_ref.end(), s.hs.begin(), s.hs.end());
  const double pooled_scale = mean_of(all_ref);

  std::vector<sensitivity_row> rows;
  auto rng = make_rng(seed, {stream::sensitivity, k});
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t r = 0; r < n; ++r) {
    parameter_vector theta = base;
    theta[k] += normal(rng) * rel_sd * std::abs(base[k]);
    theta = clamp(theta, bounds);
    const double rel_in = std::abs(theta[k] - base[k]) / std::abs(base[k]);
    const auto out = surrogate_evaluate(theta, wind, bathy, stations);

    std::vector<double> all_out;
    for (std::size_t s = 0; s < out.size(); ++s) {
      const double scale = mean_of(reference[s].hs);
      const double change = scale > 0.0 ? rmse(out[s].hs, reference[s].hs) / scale : 0.0;
      rows.push_back({param, r, theta[k], rel_in, out[s].station, change});
      all_out.insert(all_out.end(), out[s].hs.begin(), out[s].hs.end());
    }
    rows.push_back({param, r, theta[k], rel_in, "pooled", pooled_scale > 0.0 ? rmse(all_out, all_ref) / pooled_scale : 0.0});
  }
  return rows;
}

inline double median(std::vector<double> v) {
  if (v.empty()) throw shape_error("median of an empty sample");
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Median relative output change over the rows for `station`.
inline double median_output_change(const std::vector<sensitivity_row>& rows, const std::string& station = "pooled") {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r.station == station) v.push_back(r.rel_output_change);
  return median(v);
}

/// parameter,run,value,rel_input_change,station,rel_output_change
inline void write_sensitivity_csv(std::ostream& os, const std::vector<sensitivity_row>& rows) {
  os << "parameter,run,value,rel_input_change,station,rel_output_change\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows)
    os << r.parameter << ',' << r.run << ',' << r.value << ',' << r.rel_input_change << ',' << r.station << ','
       << r.rel_output_change << '\n';
}

}  // namespace rebec::harness
