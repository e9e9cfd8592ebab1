#pragma once

#include <algorithm>
#include <cstdint>
#include <random>

#include "rebec/forcing_noise.hpp"
#include "rebec/param_space.hpp"
#include "rebec/random.hpp"
#include "rebec/wave_model.hpp"

namespace rebec::harness {

struct truth_options {
  parameter_vector theta_star = default_configuration();
  double observation_sd = 0.0;  // meters, i.i.d. Gaussian
  // Relative sigma of a correlated perturbation of the forcing the truth is
  // generated on; 0 means the truth sees exactly the model's forcing.
  double forcing_sigma = 0.0;
  std::size_t forcing_spacing = 10;
  std::uint64_t seed = 0;
};

/// The wind the synthetic truth is generated on.
inline wind_field truth_forcing(const wind_field& base, const truth_options& opt) {
  if (opt.forcing_sigma == 0.0) return base;
  const auto truth_seed = derive_seed(opt.seed, {stream::truth_wind});
  const auto sources = scatter_sources(base.nx(), base.ny(), opt.forcing_spacing, truth_seed);
  return generate_member(base, analyze_noise_structure(base, sources, opt.forcing_sigma), truth_seed, 0);
}

/// Synthetic observations: the surrogate at theta_star, plus optional
/// observation noise (negative heights are clipped to zero).
inline series_set make_truth(const wind_field& base, const bathymetry_grid& bathy, const station_set& stations,
                             const truth_options& opt) {
  auto obs = surrogate_evaluate(opt.theta_star, truth_forcing(base, opt), bathy, stations);
  if (opt.observation_sd > 0.0) {
    auto rng = make_rng(opt.seed, {stream::observation});
    std::normal_distribution<double> noise(0.0, opt.observation_sd);
    for (auto& s : obs)
      for (auto& h : s.hs) h = std::max(0.0, h + noise(rng));
  }
  return obs;
}

}  // namespace rebec::harness
