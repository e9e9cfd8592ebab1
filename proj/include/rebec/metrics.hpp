#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "rebec/error.hpp"
#include "rebec/param_space.hpp"
#include "rebec/wave_model.hpp"

namespace rebec {

enum class metric_kind { rmse, mae, peak_rmse, peak_mae };

inline constexpr std::array<metric_kind, 4> all_metrics{metric_kind::rmse, metric_kind::mae, metric_kind::peak_rmse,
                                                        metric_kind::peak_mae};

inline const char* metric_name(metric_kind m) {
  switch (m) {
    case metric_kind::rmse: return "rmse";
    case metric_kind::mae: return "mae";
    case metric_kind::peak_rmse: return "peak_rmse";
    case metric_kind::peak_mae: return "peak_mae";
  }
  return "?";
}

namespace detail {
inline void check_pair(std::span<const double> pred, std::span<const double> obs) {
  if (pred.size() != obs.size())
    throw shape_error("series lengths differ (" + std::to_string(pred.size()) + " vs " + std::to_string(obs.size()) + ")");
  if (pred.empty()) throw shape_error("empty series");
}
}  // namespace detail

inline double rmse(std::span<const double> pred, std::span<const double> obs) {
  detail::check_pair(pred, obs);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += (pred[i] - obs[i]) * (pred[i] - obs[i]);
  return std::sqrt(acc / static_cast<double>(pred.size()));
}

inline double mae(std::span<const double> pred, std::span<const double> obs) {
  detail::check_pair(pred, obs);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - obs[i]);
  return acc / static_cast<double>(pred.size());
}

/// Nearest-rank empirical quantile: the sorted value at 1-based rank
/// floor(q n) + 1, so the selection {x >= quantile} always covers the
/// top (1 - q) share and never comes out empty for q < 1.
inline double empirical_quantile(std::span<const double> values, double q) {
  if (values.empty()) throw shape_error("quantile of an empty series");
  if (!(q > 0.0 && q < 1.0)) throw config_error("quantile must lie in (0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto rank = std::min(sorted.size(), static_cast<std::size_t>(std::floor(q * double(sorted.size()))) + 1);
  return sorted[rank - 1];
}

/// Indices of time steps where obs reaches its q-quantile.
inline std::vector<std::size_t> peak_indices(std::span<const double> obs, double q) {
  const double threshold = empirical_quantile(obs, q);
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < obs.size(); ++i)
    if (obs[i] >= threshold) idx.push_back(i);
  return idx;
}

inline double peak_metric(std::span<const double> pred, std::span<const double> obs, double q, metric_kind base) {
  detail::check_pair(pred, obs);
  std::vector<double> p, o;
  for (auto i : peak_indices(obs, q)) {
    p.push_back(pred[i]);
    o.push_back(obs[i]);
  }
  return base == metric_kind::mae || base == metric_kind::peak_mae ? mae(p, o) : rmse(p, o);
}

/// Relative improvement in percent; negative when the candidate is worse.
inline double improvement(double err_candidate, double err_default) {
  if (!(err_default > 0.0)) throw config_error("improvement undefined: baseline error is " + std::to_string(err_default));
  return 100.0 * (err_default - err_candidate) / err_default;
}

/// Mean over parameters of the relative sample SD (percent) across runs.
/// Parameters whose mean is zero are skipped and named in `skipped`.
inline double parameter_sd(std::span<const parameter_vector> runs, std::vector<std::string>* skipped = nullptr) {
  if (runs.size() < 2) throw config_error("parameter_sd needs at least two runs");
  const double n = static_cast<double>(runs.size());
  double total = 0.0;
  int used = 0;
  for (std::size_t k = 0; k < parameter_count; ++k) {
    double mean = 0.0;
    for (const auto& p : runs) mean += p[k];
    mean /= n;
    if (mean == 0.0) {
      if (skipped) skipped->emplace_back(parameter_names[k]);
      continue;
    }
    double ss = 0.0;
    for (const auto& p : runs) ss += (p[k] - mean) * (p[k] - mean);
    total += 100.0 * std::sqrt(ss / (n - 1.0)) / std::abs(mean);
    ++used;
  }
  return used ? total / used : 0.0;
}

/// Per-station and pooled errors. Pooling concatenates residuals across
/// stations; peak variants use each station's own observed quantile.
struct metric_report {
  struct entry {
    std::string station;
    double rmse = 0, mae = 0, peak_rmse = 0, peak_mae = 0;
    double get(metric_kind m) const {
      switch (m) {
        case metric_kind::rmse: return rmse;
        case metric_kind::mae: return mae;
        case metric_kind::peak_rmse: return peak_rmse;
        case metric_kind::peak_mae: return peak_mae;
      }
      return 0.0;
    }
  };
  std::vector<entry> per_station;
  entry pooled{"pooled"};
};

inline void check_aligned(const station_series& pred, const station_series& obs) {
  if (pred.station != obs.station)
    throw shape_error("station order differs ('" + pred.station + "' vs '" + obs.station + "')");
  if (pred.times != obs.times) throw shape_error("time axes differ at station '" + pred.station + "'");
}

inline metric_report evaluate_metrics(const series_set& pred, const series_set& obs, double peak_q = 0.75) {
  if (pred.size() != obs.size() || pred.empty()) throw shape_error("prediction and observation station counts differ");
  metric_report r;
  std::vector<double> all_p, all_o, peak_p, peak_o;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    check_aligned(pred[s], obs[s]);
    const auto& p = pred[s].hs;
    const auto& o = obs[s].hs;
    metric_report::entry e{pred[s].station, rmse(p, o), mae(p, o), peak_metric(p, o, peak_q, metric_kind::rmse),
                           peak_metric(p, o, peak_q, metric_kind::mae)};
    r.per_station.push_back(e);
    all_p.insert(all_p.end(), p.begin(), p.end());
    all_o.insert(all_o.end(), o.begin(), o.end());
    for (auto i : peak_indices(o, peak_q)) {
      peak_p.push_back(p[i]);
      peak_o.push_back(o[i]);
    }
  }
  r.pooled.rmse = rmse(all_p, all_o);
  r.pooled.mae = mae(all_p, all_o);
  r.pooled.peak_rmse = rmse(peak_p, peak_o);
  r.pooled.peak_mae = mae(peak_p, peak_o);
  return r;
}

/// Objective vector used during calibration: pooled (RMSE, MAE).
inline std::vector<double> pooled_objectives(const series_set& pred, const series_set& obs) {
  if (pred.size() != obs.size() || pred.empty()) throw shape_error("prediction and observation station counts differ");
  double sq = 0.0, ab = 0.0;
  std::size_t n = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    check_aligned(pred[s], obs[s]);
    for (std::size_t t = 0; t < pred[s].hs.size(); ++t) {
      const double d = pred[s].hs[t] - obs[s].hs[t];
      sq += d * d;
      ab += std::abs(d);
    }
    n += pred[s].hs.size();
  }
  if (n == 0) throw shape_error("empty series");
  return {std::sqrt(sq / double(n)), ab / double(n)};
}

}  // namespace rebec
