#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rebec/error.hpp"
#include "rebec/forcing_noise.hpp"
#include "rebec/metrics.hpp"
#include "rebec/spea2.hpp"
#include "rebec/wave_model.hpp"

namespace rebec {

enum class aggregator_kind { mean, mean_variance };

struct robust_config {
  // Members kept by take_best_by_mean; 0 means ceil(n / 2).
  std::size_t ens_amount = 0;
  aggregator_kind aggregator = aggregator_kind::mean;
  double variance_weight = 1.0;
  bool suppress_calm = true;
  calm_options calm{};

  std::size_t resolved_amount(std::size_t ensemble_size) const {
    const std::size_t k = ens_amount == 0 ? (ensemble_size + 1) / 2 : ens_amount;
    if (k < 1 || k > ensemble_size)
      throw config_error("ens_amount " + std::to_string(k) + " outside [1, " + std::to_string(ensemble_size) + "]");
    return k;
  }
};

inline double coordinate_mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

/// Indices (ascending) of the ens_amount vectors with the smallest mean
/// across coordinates; ties resolved by lower index.
inline std::vector<std::size_t> take_best_by_mean(std::span<const objective_vector> objs, std::size_t ens_amount) {
  if (ens_amount < 1 || ens_amount > objs.size())
    throw config_error("ens_amount " + std::to_string(ens_amount) + " outside [1, " + std::to_string(objs.size()) + "]");
  std::vector<std::size_t> order(objs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> means;
  for (const auto& o : objs) means.push_back(coordinate_mean(o));
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return means[a] < means[b]; });
  order.resize(ens_amount);
  std::sort(order.begin(), order.end());
  return order;
}

/// Coordinate-wise mean, or mean + w * population SD for mean_variance.
/// The mean is accumulated as offsets from the first vector, so identical
/// inputs return that vector bit for bit.
inline objective_vector aggregate(std::span<const objective_vector> selected, const robust_config& cfg) {
  if (selected.empty()) throw config_error("aggregate of an empty selection");
  const std::size_t m = selected.front().size();
  const double n = double(selected.size());
  objective_vector out(m);
  for (std::size_t c = 0; c < m; ++c) {
    const double x0 = selected.front()[c];
    double offset = 0.0;
    for (const auto& v : selected) {
      if (v.size() != m) throw shape_error("objective vectors differ in length");
      offset += v[c] - x0;
    }
    const double mean = x0 + offset / n;
    out[c] = mean;
    if (cfg.aggregator == aggregator_kind::mean_variance) {
      double ss = 0.0;
      for (const auto& v : selected) ss += (v[c] - mean) * (v[c] - mean);
      out[c] += cfg.variance_weight * std::sqrt(ss / n);
    }
  }
  return out;
}

struct ensemble_evaluation {
  parameter_vector genotype;
  std::vector<objective_vector> per_member;
  std::vector<std::size_t> selected;
  objective_vector aggregated;
};

/// Observations must be aligned with the model's stations and time axis.
inline objective_vector evaluate_single(const parameter_vector& theta, const wind_field& wind,
                                        const model_adapter& model, const series_set& observations) {
  return pooled_objectives(model.evaluate(theta, wind), observations);
}

/// One (RMSE, MAE) vector per ensemble member, in member order. When calm
/// suppression is on, each member's output is capped against the run on
/// the unperturbed base forcing.
inline std::vector<objective_vector> evaluate_on_ensemble(const parameter_vector& theta, const forcing_ensemble& ens,
                                                          const model_adapter& model, const series_set& observations,
                                                          const robust_config& cfg = {}) {
  std::vector<objective_vector> out;
  out.reserve(ens.size());
  series_set base_run;
  if (cfg.suppress_calm) base_run = model.evaluate(theta, ens.base);
  for (std::size_t k = 0; k < ens.size(); ++k) {
    try {
      auto run = model.evaluate(theta, ens.members[k]);
      if (cfg.suppress_calm) rebec::suppress_calm(run, base_run, cfg.calm);
      out.push_back(pooled_objectives(run, observations));
    } catch (const error& e) {
      throw model_error("ensemble member " + std::to_string(k) + ": " + e.what());
    }
  }
  return out;
}

inline ensemble_evaluation robust_evaluate(const parameter_vector& theta, const forcing_ensemble& ens,
                                           const model_adapter& model, const series_set& observations,
                                           const robust_config& cfg) {
  ensemble_evaluation ev{theta, evaluate_on_ensemble(theta, ens, model, observations, cfg), {}, {}};
  ev.selected = take_best_by_mean(ev.per_member, cfg.resolved_amount(ens.size()));
  std::vector<objective_vector> chosen;
  for (auto i : ev.selected) chosen.push_back(ev.per_member[i]);
  ev.aggregated = aggregate(chosen, cfg);
  return ev;
}

struct rebec_result {
  evolution_result evolution;
  // Every distinct genotype evaluated, in evaluation order.
  std::vector<ensemble_evaluation> evaluations;
};

/// The SPEA2 loop with each individual's objectives replaced by the
/// aggregate of its best ensemble members.
inline rebec_result run_rebec(const forcing_ensemble& ens, const model_adapter& model, const series_set& observations,
                              const evolution_config& evo, const robust_config& robust) {
  robust.resolved_amount(ens.size());
  rebec_result out;
  auto evaluator = [&](const parameter_vector& theta) {
    out.evaluations.push_back(robust_evaluate(theta, ens, model, observations, robust));
    return out.evaluations.back().aggregated;
  };
  out.evolution = run_evolution(evaluator, evo);
  return out;
}

inline evolution_result run_baseline(const wind_field& wind, const model_adapter& model,
                                     const series_set& observations, const evolution_config& evo) {
  return run_evolution([&](const parameter_vector& theta) { return evaluate_single(theta, wind, model, observations); },
                       evo);
}

/// Audit CSV: generation,individual,member,obj_rmse,obj_mae,selected
/// One block of rows per history entry, taken from the cached evaluation
/// of that individual's genotype.
inline void write_audit_csv(std::ostream& os, const rebec_result& r) {
  os << "generation,individual,member,obj_rmse,obj_mae,selected\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  std::map<std::array<std::uint64_t, parameter_count>, const ensemble_evaluation*> by_genotype;
  for (const auto& ev : r.evaluations) by_genotype.emplace(detail::genotype_key(ev.genotype), &ev);
  for (const auto& row : r.evolution.history) {
    auto it = by_genotype.find(detail::genotype_key(row.genotype));
    if (it == by_genotype.end()) continue;
    const auto& ev = *it->second;
    for (std::size_t k = 0; k < ev.per_member.size(); ++k) {
      const bool sel = std::find(ev.selected.begin(), ev.selected.end(), k) != ev.selected.end();
      os << row.generation << ',' << row.index << ',' << k << ',' << ev.per_member[k][0] << ','
         << ev.per_member[k][1] << ',' << (sel ? 1 : 0) << '\n';
    }
  }
}

}  // namespace rebec
