#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rebec/error.hpp"
#include "rebec/random.hpp"

namespace rebec {

inline constexpr std::size_t parameter_count = 3;

/// The calibratable triple. drg is the wind-drag multiplier (also written
/// DRF in some SWAN setups), cfw the Collins bottom-friction coefficient and
/// stpm the whitecapping steepness parameter. All dimensionless.
struct parameter_vector {
  double drg = 1.0;
  double cfw = 0.015;
  double stpm = 0.00302;

  double& operator[](std::size_t i) { return i == 0 ? drg : (i == 1 ? cfw : stpm); }
  double operator[](std::size_t i) const { return i == 0 ? drg : (i == 1 ? cfw : stpm); }

  bool is_finite() const { return std::isfinite(drg) && std::isfinite(cfw) && std::isfinite(stpm); }

  friend bool operator==(const parameter_vector&, const parameter_vector&) = default;
  friend std::ostream& operator<<(std::ostream& os, const parameter_vector& p) {
    return os << "(drg=" << p.drg << ", cfw=" << p.cfw << ", stpm=" << p.stpm << ")";
  }
};

inline constexpr std::array<std::string_view, parameter_count> parameter_names{"drg", "cfw", "stpm"};

inline std::size_t parameter_index(std::string_view name) {
  for (std::size_t i = 0; i < parameter_count; ++i)
    if (parameter_names[i] == name) return i;
  throw config_error("unknown parameter '" + std::string(name) + "' (expected drg, cfw or stpm)");
}

inline parameter_vector default_configuration() { return {1.0, 0.015, 0.00302}; }

struct interval {
  double lo = 0.0;
  double hi = 1.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct parameter_bounds {
  std::array<interval, parameter_count> ranges{{{0.1, 2.0}, {0.0005, 0.1}, {0.0005, 0.01}}};
  // Stratify and sample in log10 space. Requires positive bounds.
  bool log_scale = false;

  const interval& operator[](std::size_t i) const { return ranges[i]; }
  interval& operator[](std::size_t i) { return ranges[i]; }

  bool contains(const parameter_vector& p) const {
    for (std::size_t i = 0; i < parameter_count; ++i)
      if (!ranges[i].contains(p[i])) return false;
    return true;
  }

  void validate() const {
    for (std::size_t i = 0; i < parameter_count; ++i) {
      const auto& r = ranges[i];
      if (!(std::isfinite(r.lo) && std::isfinite(r.hi) && r.lo < r.hi))
        throw config_error("invalid bounds for " + std::string(parameter_names[i]) + ": need lo < hi");
      if (log_scale && r.lo <= 0.0)
        throw config_error("log-scaled bounds for " + std::string(parameter_names[i]) + " must be positive");
    }
  }
};

inline parameter_vector clamp(parameter_vector p, const parameter_bounds& bounds) {
  for (std::size_t i = 0; i < parameter_count; ++i) p[i] = std::clamp(p[i], bounds[i].lo, bounds[i].hi);
  return p;
}

/// Latin hypercube sample: in every dimension each of the n equal-width
/// strata holds exactly one sample, placed uniformly within its stratum.
inline std::vector<parameter_vector> lhs_sample(std::size_t n, const parameter_bounds& bounds, std::uint64_t seed) {
  if (n == 0) throw config_error("lhs_sample: empty request (n = 0)");
  bounds.validate();

  rng_type rng{derive_seed(seed, {stream::init})};
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<parameter_vector> out(n);
  std::vector<std::size_t> strata(n);

  for (std::size_t dim = 0; dim < parameter_count; ++dim) {
    std::iota(strata.begin(), strata.end(), std::size_t{0});
    std::shuffle(strata.begin(), strata.end(), rng);
    const auto& r = bounds[dim];
    const double lo = bounds.log_scale ? std::log10(r.lo) : r.lo;
    const double hi = bounds.log_scale ? std::log10(r.hi) : r.hi;
    const double step = (hi - lo) / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
      const double u = unit(rng);
      double x = lo + (static_cast<double>(strata[k]) + u) * step;
      x = std::min(x, hi);  // guard against round-up past the last stratum
      out[k][dim] = bounds.log_scale ? std::pow(10.0, x) : x;
    }
  }
  for (auto& p : out) p = clamp(p, bounds);
  return out;
}

}  // namespace rebec
