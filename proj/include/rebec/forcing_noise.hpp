#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rebec/error.hpp"
#include "rebec/random.hpp"
#include "rebec/wave_model.hpp"
#include "rebec/wind_field.hpp"

namespace rebec {

/// Pearson correlation; 0 when either series has zero variance.
inline double pearson(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw shape_error("correlation of series with different lengths");
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(n);
  mb /= double(n);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

/// Lag-1 autocorrelation, computed as corr(x[1..], x[..n-1]).
inline double lag1_autocorrelation(std::span<const double> x) {
  if (x.size() < 3) return 0.0;
  return pearson(x.subspan(1), x.first(x.size() - 1));
}

struct noise_source {
  std::size_t ix = 0, iy = 0;
  friend bool operator==(const noise_source&, const noise_source&) = default;
};

using noise_source_set = std::vector<noise_source>;

/// One source per spacing x spacing block (edge blocks may be partial),
/// jittered uniformly inside its block.
inline noise_source_set scatter_sources(std::size_t nx, std::size_t ny, std::size_t spacing, std::uint64_t seed) {
  if (spacing < 1) throw config_error("source spacing must be >= 1");
  if (nx == 0 || ny == 0) throw shape_error("empty grid");
  auto rng = make_rng(seed, {stream::sources});
  noise_source_set out;
  for (std::size_t by = 0; by < ny; by += spacing)
    for (std::size_t bx = 0; bx < nx; bx += spacing) {
      const std::size_t wx = std::min(spacing, nx - bx), wy = std::min(spacing, ny - by);
      std::uniform_int_distribution<std::size_t> jx(0, wx - 1), jy(0, wy - 1);
      const std::size_t ox = jx(rng);
      const std::size_t oy = jy(rng);
      out.push_back({bx + ox, by + oy});
    }
  return out;
}

/// Time series of one component at one grid cell.
inline std::vector<double> cell_series(const wind_field& w, int component, std::size_t cell) {
  const auto& data = w.component(component);
  std::vector<double> s(w.nt());
  for (std::size_t t = 0; t < w.nt(); ++t) s[t] = data[w.index(t, cell)];
  return s;
}

/// Correlation terms of the noise model, computed once from the base field
/// and shared read-only by all members.
struct noise_structure {
  noise_source_set sources;
  struct component_terms {
    double sigma_abs = 0.0;             // relative sigma times mean |component|
    double lag_corr = 0.0;              // lag-1 autocorrelation of the field-mean series
    std::vector<double> cell_to_source; // [cell * n_sources + j] = corr(C_cell, C_source_j)
  };
  std::vector<double> uv_corr;          // corr(U_j, V_j) per source
  std::array<component_terms, 2> comp;  // 0 = u, 1 = v
};

inline noise_structure analyze_noise_structure(const wind_field& base, const noise_source_set& sources, double sigma) {
  if (sigma < 0.0 || !std::isfinite(sigma)) throw config_error("noise sigma must be finite and >= 0");
  for (const auto& s : sources)
    if (s.ix >= base.nx() || s.iy >= base.ny()) throw config_error("noise source outside the grid");

  noise_structure ns;
  ns.sources = sources;
  const std::size_t cells = base.cells();
  const std::size_t nsrc = sources.size();

  std::array<std::vector<std::vector<double>>, 2> series;
  for (int c = 0; c < 2; ++c) {
    series[c].reserve(cells);
    for (std::size_t cell = 0; cell < cells; ++cell) series[c].push_back(cell_series(base, c, cell));
  }
  auto source_cell = [&](const noise_source& s) { return s.iy * base.nx() + s.ix; };

  for (const auto& s : sources) ns.uv_corr.push_back(pearson(series[0][source_cell(s)], series[1][source_cell(s)]));

  for (int c = 0; c < 2; ++c) {
    auto& terms = ns.comp[c];
    const auto& data = base.component(c);
    double mean_abs = 0.0;
    for (double x : data) mean_abs += std::abs(x);
    terms.sigma_abs = sigma * mean_abs / double(data.size());

    std::vector<double> field_mean(base.nt(), 0.0);
    for (std::size_t t = 0; t < base.nt(); ++t) {
      for (std::size_t cell = 0; cell < cells; ++cell) field_mean[t] += data[base.index(t, cell)];
      field_mean[t] /= double(cells);
    }
    terms.lag_corr = lag1_autocorrelation(field_mean);

    terms.cell_to_source.resize(cells * nsrc);
    for (std::size_t cell = 0; cell < cells; ++cell)
      for (std::size_t j = 0; j < nsrc; ++j)
        terms.cell_to_source[cell * nsrc + j] = pearson(series[c][cell], series[c][source_cell(sources[j])]);
  }
  return ns;
}

/// Single-source noise: N(0, sigma_abs) * corr(U_j, V_j) * lag-1 correlation.
/// `standard_normal` is the N(0, 1) draw.
inline double source_noise(double standard_normal, double sigma_abs, double uv_corr, double lag_corr) {
  return standard_normal * sigma_abs * uv_corr * lag_corr;
}

/// Convenience overload drawing from `rng` with correlation terms computed
/// directly from `wind` at source j. component 0 = u, 1 = v.
inline double source_noise(const noise_source& j, int component, double sigma, const wind_field& wind, rng_type& rng) {
  const auto ns = analyze_noise_structure(wind, {j}, sigma);
  std::normal_distribution<double> normal(0.0, 1.0);
  return source_noise(normal(rng), ns.comp[component].sigma_abs, ns.uv_corr[0], ns.comp[component].lag_corr);
}

/// Aggregated noise at one cell: sum_j f*(j) * corr(C_i, C_j).
inline double aggregate_noise(std::span<const double> per_source_noise, std::span<const double> corr_to_sources) {
  if (per_source_noise.size() != corr_to_sources.size()) throw shape_error("source count mismatch");
  double f = 0.0;
  for (std::size_t j = 0; j < per_source_noise.size(); ++j) f += per_source_noise[j] * corr_to_sources[j];
  return f;
}

/// Member k of the ensemble. Depends only on (structure, base, seed, k).
inline wind_field generate_member(const wind_field& base, const noise_structure& ns, std::uint64_t seed,
                                  std::size_t k) {
  wind_field member = base;
  const std::size_t nsrc = ns.sources.size();
  if (nsrc == 0) return member;
  auto rng = make_rng(seed, {stream::member, k});
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> fstar(nsrc);
  for (std::size_t t = 0; t < base.nt(); ++t)
    for (int c = 0; c < 2; ++c) {
      const auto& terms = ns.comp[c];
      for (std::size_t j = 0; j < nsrc; ++j)
        fstar[j] = source_noise(normal(rng), terms.sigma_abs, ns.uv_corr[j], terms.lag_corr);
      auto& data = member.component(c);
      for (std::size_t cell = 0; cell < base.cells(); ++cell)
        data[base.index(t, cell)] +=
            aggregate_noise(fstar, std::span<const double>(terms.cell_to_source).subspan(cell * nsrc, nsrc));
    }
  return member;
}

struct forcing_ensemble {
  wind_field base;
  std::vector<wind_field> members;
  noise_source_set sources;
  double sigma = 0.0;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return members.size(); }
};

inline forcing_ensemble generate_ensemble(const wind_field& base, std::size_t n, double sigma, std::size_t spacing,
                                          std::uint64_t seed) {
  if (n < 1) throw config_error("ensemble needs at least one member");
  const auto sources = scatter_sources(base.nx(), base.ny(), spacing, seed);
  const auto ns = analyze_noise_structure(base, sources, sigma);
  forcing_ensemble ens{base, {}, sources, sigma, seed};
  ens.members.reserve(n);
  for (std::size_t k = 0; k < n; ++k) ens.members.push_back(generate_member(base, ns, seed, k));
  return ens;
}

/// n exact copies of `base`; the unperturbed reference ensemble.
inline forcing_ensemble replicate_forcing(const wind_field& base, std::size_t n) {
  if (n < 1) throw config_error("ensemble needs at least one member");
  return {base, std::vector<wind_field>(n, base), {}, 0.0, 0};
}

inline void save_ensemble(const std::filesystem::path& dir, const forcing_ensemble& ens) {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < ens.size(); ++k)
    save_wfld((dir / ("member_" + std::to_string(k) + ".wfld")).string(), ens.members[k]);
}

struct calm_options {
  double threshold = 0.5;  // Hs meters when applied to model output
  double overshoot = 0.1;
};

/// Where base < threshold, caps member at base * (1 + overshoot).
/// Values elsewhere are left untouched.
inline void suppress_calm(std::span<double> member, std::span<const double> base, const calm_options& opt) {
  if (member.size() != base.size()) throw shape_error("calm suppression needs aligned series");
  for (std::size_t t = 0; t < member.size(); ++t)
    if (base[t] < opt.threshold) member[t] = std::min(member[t], base[t] * (1.0 + opt.overshoot));
}

inline void suppress_calm(series_set& member, const series_set& base, const calm_options& opt) {
  if (member.size() != base.size()) throw shape_error("calm suppression needs matching station sets");
  for (std::size_t s = 0; s < member.size(); ++s) suppress_calm(member[s].hs, base[s].hs, opt);
}

/// Field variant: threshold on base wind speed (m/s); over-calm member
/// vectors are rescaled so their speed respects the cap.
inline void suppress_calm(wind_field& member, const wind_field& base, const calm_options& opt) {
  if (!member.same_shape(base)) throw shape_error("calm suppression needs aligned wind fields");
  for (std::size_t t = 0; t < base.nt(); ++t)
    for (std::size_t iy = 0; iy < base.ny(); ++iy)
      for (std::size_t ix = 0; ix < base.nx(); ++ix) {
        const double b = base.speed(t, ix, iy);
        if (b >= opt.threshold) continue;
        const double cap = b * (1.0 + opt.overshoot);
        const double m = member.speed(t, ix, iy);
        if (m <= cap) continue;
        const double scale = m > 0.0 ? cap / m : 0.0;
        member.u(t, ix, iy) *= scale;
        member.v(t, ix, iy) *= scale;
      }
}

}  // namespace rebec
