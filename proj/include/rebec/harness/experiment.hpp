#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "rebec/forcing_noise.hpp"
#include "rebec/harness/scenarios.hpp"
#include "rebec/metrics.hpp"
#include "rebec/parallel.hpp"
#include "rebec/random.hpp"
#include "rebec/robust_fitness.hpp"
#include "rebec/spea2.hpp"
#include "rebec/wave_model.hpp"

namespace rebec::harness {

enum class algorithm { baseline, rebec };

inline const char* algorithm_name(algorithm a) { return a == algorithm::baseline ? "baseline" : "rebec"; }

inline algorithm parse_algorithm(const std::string& s) {
  if (s == "baseline") return algorithm::baseline;
  if (s == "rebec") return algorithm::rebec;
  throw config_error("unknown algorithm '" + s + "' (expected baseline or rebec)");
}

/// Builds the model for a station subset. `slot` identifies the worker so
/// adapters that need private scratch space can separate their runs.
using model_factory = std::function<std::unique_ptr<model_adapter>(const station_set&, std::size_t slot)>;

inline model_factory surrogate_factory(const bathymetry_grid& bathy) {
  return [bathy](const station_set& stations, std::size_t) -> std::unique_ptr<model_adapter> {
    return std::make_unique<surrogate_model>(bathy, stations);
  };
}

/// Everything the calibration runs share. Observations are aligned with
/// `stations` and with the wind's time axis.
struct experiment_inputs {
  station_set stations;
  wind_field wind;
  series_set observations;
  forcing_ensemble ensemble;
  std::vector<scenario> scenarios;
  model_factory make_model;
};

struct experiment_config {
  evolution_config evolution{};
  robust_config robust{};
  std::size_t repeats = 20;
  std::vector<int> scenario_ids;  // empty = all
  std::vector<algorithm> algorithms{algorithm::baseline, algorithm::rebec};
  double peak_quantile = 0.75;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  double max_failure_fraction = 0.2;
  parameter_vector default_theta = default_configuration();
};

enum class station_subset { validation, calibration };

inline const char* subset_name(station_subset s) { return s == station_subset::validation ? "validation" : "calibration"; }

struct run_record {
  int scenario = 0;
  scenario_group group = scenario_group::singleton;
  algorithm algo = algorithm::baseline;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string message;
  parameter_vector genotype;
  // [subset][metric]
  std::array<std::array<double, 4>, 2> error{};
  std::array<std::array<double, 4>, 2> default_error{};
  std::array<std::array<double, 4>, 2> improvement{};
};

struct report_row {
  std::string scenario_group;
  algorithm algo = algorithm::baseline;
  station_subset set = station_subset::validation;
  metric_kind metric = metric_kind::rmse;
  double mean_improvement = 0.0;
  double max_improvement = 0.0;
  double sd_improvement = 0.0;
  double param_sd = 0.0;
  std::size_t runs = 0;
};

struct experiment_result {
  std::vector<run_record> runs;
  std::vector<report_row> report;
  std::size_t failures = 0;
};

/// Seed shared by both algorithms for one (scenario, repeat) so that
/// the two calibrations start from the same sample.
inline std::uint64_t run_seed(std::uint64_t master, int scenario_id, std::size_t repeat) {
  return derive_seed(master, {stream::calibration, std::uint64_t(scenario_id), repeat});
}

inline std::array<double, 4> metric_values(const metric_report& r) {
  return {r.pooled.rmse, r.pooled.mae, r.pooled.peak_rmse, r.pooled.peak_mae};
}

inline series_set observations_for(const experiment_inputs& in, const std::vector<std::string>& ids) {
  return align_to_stations(in.observations, select_stations(in.stations, ids));
}

/// One calibration: runs the chosen algorithm on the scenario's
/// calibration stations, picks the best archive member and scores it on
/// both station subsets against the unperturbed forcing.
inline run_record calibrate_once(const experiment_inputs& in, const experiment_config& cfg, const scenario& sc,
                                 algorithm algo, std::size_t repeat, std::size_t slot) {
  run_record rec;
  rec.scenario = sc.id;
  rec.group = sc.group;
  rec.algo = algo;
  rec.repeat = repeat;
  rec.seed = run_seed(cfg.seed, sc.id, repeat);

  evolution_config evo = cfg.evolution;
  evo.seed = rec.seed;
  const auto calib_stations = select_stations(in.stations, sc.calibration);
  const auto calib_obs = observations_for(in, sc.calibration);
  const auto model = in.make_model(calib_stations, slot);

  std::vector<individual> archive;
  if (algo == algorithm::baseline) {
    archive = run_baseline(in.wind, *model, calib_obs, evo).archive;
  } else {
    archive = run_rebec(in.ensemble, *model, calib_obs, evo, cfg.robust).evolution.archive;
  }
  rec.genotype = archive[best_index(archive)].genotype;

  const std::vector<std::string>* sets[2] = {&sc.validation, &sc.calibration};
  for (int s = 0; s < 2; ++s) {
    const auto st = select_stations(in.stations, *sets[s]);
    const auto obs = observations_for(in, *sets[s]);
    const auto m = in.make_model(st, slot);
    rec.error[s] = metric_values(evaluate_metrics(m->evaluate(rec.genotype, in.wind), obs, cfg.peak_quantile));
    rec.default_error[s] =
        metric_values(evaluate_metrics(m->evaluate(cfg.default_theta, in.wind), obs, cfg.peak_quantile));
    for (int k = 0; k < 4; ++k) rec.improvement[s][k] = improvement(rec.error[s][k], rec.default_error[s][k]);
  }
  return rec;
}

namespace detail {
inline double sample_sd(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double m = 0.0;
  for (double v : x) m += v;
  m /= double(x.size());
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / double(x.size() - 1));
}
}  // namespace detail

/// Summary statistics per scenario group plus "All": mean, max and
/// sample SD of improvement across successful runs, and the mean over the
/// group's scenarios of the relative parameter SD across repeats.
inline std::vector<report_row> aggregate_report(const std::vector<run_record>& runs,
                                                const std::vector<scenario>& scenarios,
                                                const std::vector<algorithm>& algorithms) {
  struct group_def {
    std::string label;
    std::function<bool(const run_record&)> member;
  };
  std::vector<group_def> groups;
  for (auto g : {scenario_group::singleton, scenario_group::mid, scenario_group::large}) {
    bool present = false;
    for (const auto& r : runs) present |= r.group == g;
    if (present) groups.push_back({group_label(scenarios, g), [g](const run_record& r) { return r.group == g; }});
  }
  groups.push_back({"All", [](const run_record&) { return true; }});

  std::vector<report_row> rows;
  for (const auto& g : groups)
    for (auto algo : algorithms) {
      std::vector<const run_record*> sel;
      for (const auto& r : runs)
        if (!r.failed && r.algo == algo && g.member(r)) sel.push_back(&r);

      std::vector<double> psd;
      std::vector<int> ids;
      for (const auto* r : sel)
        if (std::find(ids.begin(), ids.end(), r->scenario) == ids.end()) ids.push_back(r->scenario);
      for (int id : ids) {
        std::vector<parameter_vector> gs;
        for (const auto* r : sel)
          if (r->scenario == id) gs.push_back(r->genotype);
        if (gs.size() >= 2) psd.push_back(parameter_sd(gs));
      }
      double param_sd = std::numeric_limits<double>::quiet_NaN();
      if (!psd.empty()) {
        param_sd = 0.0;
        for (double v : psd) param_sd += v;
        param_sd /= double(psd.size());
      }

      for (auto set : {station_subset::validation, station_subset::calibration})
        for (auto metric : all_metrics) {
          std::vector<double> x;
          for (const auto* r : sel) x.push_back(r->improvement[int(set)][int(metric)]);
          report_row row{g.label, algo, set, metric, 0.0, 0.0, 0.0, param_sd, x.size()};
          if (!x.empty()) {
            double sum = 0.0, mx = -std::numeric_limits<double>::infinity();
            for (double v : x) {
              sum += v;
              mx = std::max(mx, v);
            }
            row.mean_improvement = sum / double(x.size());
            row.max_improvement = mx;
            row.sd_improvement = detail::sample_sd(x);
          } else {
            row.mean_improvement = row.max_improvement = row.sd_improvement = std::numeric_limits<double>::quiet_NaN();
          }
          rows.push_back(row);
        }
    }
  return rows;
}

/// Every (scenario, repeat, algorithm) calibration as an independent job
/// on up to cfg.jobs workers. Results do not depend on the worker count.
inline experiment_result run_experiment(const experiment_inputs& in, const experiment_config& cfg,
                                        std::ostream* log = nullptr) {
  if (cfg.repeats < 1) throw config_error("repeats must be >= 1");
  if (cfg.algorithms.empty()) throw config_error("no algorithms selected");
  std::vector<const scenario*> chosen;
  for (const auto& s : in.scenarios)
    if (cfg.scenario_ids.empty() || std::find(cfg.scenario_ids.begin(), cfg.scenario_ids.end(), s.id) != cfg.scenario_ids.end())
      chosen.push_back(&s);
  if (chosen.empty()) throw config_error("no scenarios selected");

  struct job {
    const scenario* sc;
    std::size_t repeat;
    algorithm algo;
  };
  std::vector<job> jobs;
  for (const auto* sc : chosen)
    for (std::size_t r = 0; r < cfg.repeats; ++r)
      for (auto a : cfg.algorithms) jobs.push_back({sc, r, a});

  experiment_result out;
  out.runs.resize(jobs.size());
  const std::size_t workers = std::max<std::size_t>(1, cfg.jobs);
  parallel_for(jobs.size(), workers, [&](std::size_t i, std::size_t worker) {
    const auto& j = jobs[i];
    try {
      out.runs[i] = calibrate_once(in, cfg, *j.sc, j.algo, j.repeat, worker);
    } catch (const std::exception& e) {
      run_record rec;
      rec.scenario = j.sc->id;
      rec.group = j.sc->group;
      rec.algo = j.algo;
      rec.repeat = j.repeat;
      rec.seed = run_seed(cfg.seed, j.sc->id, j.repeat);
      rec.failed = true;
      rec.message = e.what();
      out.runs[i] = rec;
    }
  });

  for (const auto& r : out.runs)
    if (r.failed) {
      ++out.failures;
      if (log)
        *log << "warning: scenario " << r.scenario << " repeat " << r.repeat << " (" << algorithm_name(r.algo)
             << ") failed: " << r.message << '\n';
    }
  if (double(out.failures) > cfg.max_failure_fraction * double(jobs.size()))
    throw model_error(std::to_string(out.failures) + " of " + std::to_string(jobs.size()) +
                      " calibration runs failed; aborting");

  out.report = aggregate_report(out.runs, in.scenarios, cfg.algorithms);
  return out;
}

namespace detail {
inline void put(std::ostream& os, double x) {
  if (std::isnan(x))
    os << "nan";
  else
    os << x;
}
}  // namespace detail

/// Long format, one row per (run, subset, metric).
inline void write_runs_csv(std::ostream& os, const std::vector<run_record>& runs,
                           const std::vector<scenario>& scenarios) {
  os << "scenario,group,algorithm,repeat,seed,status,drg,cfw,stpm,set,metric,error,default_error,improvement\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : runs) {
    for (auto set : {station_subset::validation, station_subset::calibration})
      for (auto metric : all_metrics) {
        os << r.scenario << ',' << group_label(scenarios, r.group) << ',' << algorithm_name(r.algo) << ','
           << r.repeat << ',' << r.seed << ',' << (r.failed ? "failed" : "ok") << ',' << r.genotype.drg << ','
           << r.genotype.cfw << ',' << r.genotype.stpm << ',' << subset_name(set) << ',' << metric_name(metric)
           << ',';
        detail::put(os, r.error[int(set)][int(metric)]);
        os << ',';
        detail::put(os, r.default_error[int(set)][int(metric)]);
        os << ',';
        detail::put(os, r.improvement[int(set)][int(metric)]);
        os << '\n';
      }
  }
}

/// scenario_group,algorithm,set,metric,mean_improvement,max_improvement,sd_improvement,param_sd
inline void write_report_csv(std::ostream& os, const std::vector<report_row>& rows) {
  os << "scenario_group,algorithm,set,metric,mean_improvement,max_improvement,sd_improvement,param_sd\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    os << r.scenario_group << ',' << algorithm_name(r.algo) << ',' << subset_name(r.set) << ','
       << metric_name(r.metric) << ',';
    detail::put(os, r.mean_improvement);
    os << ',';
    detail::put(os, r.max_improvement);
    os << ',';
    detail::put(os, r.sd_improvement);
    os << ',';
    detail::put(os, r.param_sd);
    os << '\n';
  }
}

}  // namespace rebec::harness
