#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>

#include "rebec/random.hpp"
#include "rebec/timestamp.hpp"
#include "rebec/wave_model.hpp"
#include "rebec/wind_field.hpp"

namespace rebec::harness {

/// The reference calibration domain: a 30 x 30 shelf with depth graded
/// from 3 m (west) to 60 m (east), a small land spit in the north-west,
/// nine stations across the depth classes (three of them at 20 m), and one
/// month of 3-hourly wind with two storms over a calm background.
struct domain {
  bathymetry_grid bathymetry;
  station_set stations;
  wind_field wind;
};

inline constexpr std::size_t domain_size = 30;
inline constexpr std::size_t domain_steps = 31 * 8;
inline constexpr timestamp domain_start = 1538352000;  // 2018-10-01T00:00:00Z
inline constexpr timestamp domain_step_seconds = 3 * 3600;

inline bathymetry_grid synthetic_bathymetry() {
  bathymetry_grid b{domain_size, domain_size, std::vector<double>(domain_size * domain_size)};
  for (std::size_t iy = 0; iy < b.ny; ++iy)
    for (std::size_t ix = 0; ix < b.nx; ++ix) {
      b.at(ix, iy) = std::max(3.0, 2.0 + 2.0 * double(ix));
      if (ix < 2 && iy < 6) b.at(ix, iy) = -2.0;
    }
  return b;
}

inline station_set synthetic_stations() {
  return {{"P1", 0, 15}, {"P2", 2, 5},   {"P3", 4, 22},  {"P4", 9, 4},  {"P5", 9, 15},
          {"P6", 9, 26}, {"P7", 14, 10}, {"P8", 21, 20}, {"P9", 29, 28}};
}

/// Deterministic per seed. Storm timing, strength, track and heading
/// are jittered; the background carries a diurnal cycle.
inline wind_field synthetic_wind(std::uint64_t seed) {
  auto rng = make_rng(seed, {stream::domain});
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  constexpr double pi = std::numbers::pi;

  struct storm {
    double t_peak, duration, peak, y0, speed_cells, heading;
  };
  const storm storms[2] = {
      {64.0 + 6.0 * jitter(rng), 9.0 + 2.0 * jitter(rng), 18.0 + 1.5 * jitter(rng), 10.0 + 4.0 * jitter(rng),
       0.5 + 0.1 * jitter(rng), 0.25 * pi + 0.2 * jitter(rng)},
      {168.0 + 6.0 * jitter(rng), 11.0 + 2.0 * jitter(rng), 16.0 + 1.5 * jitter(rng), 20.0 + 4.0 * jitter(rng),
       0.4 + 0.1 * jitter(rng), 0.6 * pi + 0.2 * jitter(rng)},
  };
  const double bg_heading = 0.15 * pi + 0.1 * jitter(rng);
  const double bg_phase = pi * jitter(rng);

  std::vector<timestamp> times(domain_steps);
  for (std::size_t t = 0; t < domain_steps; ++t) times[t] = domain_start + timestamp(t) * domain_step_seconds;
  wind_field w(domain_size, domain_size, std::move(times));

  for (std::size_t t = 0; t < domain_steps; ++t)
    for (std::size_t iy = 0; iy < domain_size; ++iy)
      for (std::size_t ix = 0; ix < domain_size; ++ix) {
        const double x = double(ix), y = double(iy), tt = double(t);
        const double bg = 3.5 + 1.2 * std::sin(2.0 * pi * tt / 8.0 + bg_phase + 0.05 * x) + 0.03 * y;
        double u = bg * std::cos(bg_heading), v = bg * std::sin(bg_heading);
        for (const auto& s : storms) {
          const double dt = (tt - s.t_peak) / s.duration;
          const double cx = 15.0 + s.speed_cells * (tt - s.t_peak);
          const double dx = (x - cx) / 18.0, dy = (y - s.y0) / 14.0;
          const double amp = s.peak * std::exp(-0.5 * dt * dt) * std::exp(-0.5 * (dx * dx + dy * dy));
          const double heading = s.heading + 0.3 * dt;
          u += amp * std::cos(heading);
          v += amp * std::sin(heading);
        }
        w.u(t, ix, iy) = u;
        w.v(t, ix, iy) = v;
      }
  return w;
}

inline domain synthetic_domain(std::uint64_t seed) {
  return {synthetic_bathymetry(), synthetic_stations(), synthetic_wind(seed)};
}

}  // namespace rebec::harness
