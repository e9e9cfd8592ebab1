#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rebec/error.hpp"
#include "rebec/external_model.hpp"
#include "rebec/forcing_noise.hpp"
#include "rebec/harness/experiment.hpp"
#include "rebec/harness/scenarios.hpp"
#include "rebec/harness/synthetic_domain.hpp"
#include "rebec/harness/truth.hpp"
#include "rebec/robust_fitness.hpp"
#include "rebec/spea2.hpp"

namespace rebec::harness {

struct noise_config {
  std::size_t members = 10;
  double sigma = 0.25;
  std::size_t spacing = 10;
};

struct model_config {
  std::string type = "surrogate";  // or "external"
  std::string command;
  double timeout_s = 600.0;
  std::string scratch = "scratch";
};

/// Top-level configuration document. See README for the key schema.
struct app_config {
  std::uint64_t seed = 1;
  // Empty paths select the built-in synthetic domain.
  std::string wind_path, bathymetry_path, stations_path, observations_path;
  // Reference truth for the scenario experiment: away from the default
  // configuration, with observation noise and a forcing the model does not
  // see exactly, so that the default has a nonzero error to improve on.
  truth_options truth{{1.2, 0.02, 0.0025}, 0.05, 0.25, 10, 1};
  parameter_vector default_theta = default_configuration();
  parameter_bounds bounds{};
  evolution_config evolution{};
  robust_config robust{};
  noise_config noise{};
  scenario_layout layout{};
  std::size_t repeats = 20;
  std::vector<int> scenario_ids;
  double peak_quantile = 0.75;
  model_config model{};
};

namespace detail {

using nlohmann::json;

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw config_error(std::string("config key '") + key + "': " + e.what());
  }
}

inline void read_theta(const json& j, parameter_vector& p) {
  read(j, "drg", p.drg);
  read(j, "cfw", p.cfw);
  read(j, "stpm", p.stpm);
}

inline std::string resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return p;
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (base / path).string();
}

}  // namespace detail

inline app_config parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  using detail::read;
  if (!j.is_object()) throw config_error("configuration must be a JSON object");
  app_config c;
  read(j, "seed", c.seed);

  if (j.contains("domain")) {
    const auto& d = j.at("domain");
    read(d, "wind", c.wind_path);
    read(d, "bathymetry", c.bathymetry_path);
    read(d, "stations", c.stations_path);
    c.wind_path = detail::resolve(base_dir, c.wind_path);
    c.bathymetry_path = detail::resolve(base_dir, c.bathymetry_path);
    c.stations_path = detail::resolve(base_dir, c.stations_path);
    const int given = !c.wind_path.empty() + !c.bathymetry_path.empty() + !c.stations_path.empty();
    if (given != 0 && given != 3) throw config_error("domain needs all of wind, bathymetry and stations, or none");
  }
  read(j, "observations", c.observations_path);
  c.observations_path = detail::resolve(base_dir, c.observations_path);

  if (j.contains("truth")) {
    const auto& t = j.at("truth");
    detail::read_theta(t, c.truth.theta_star);
    read(t, "observation_sd", c.truth.observation_sd);
    read(t, "forcing_sigma", c.truth.forcing_sigma);
    read(t, "forcing_spacing", c.truth.forcing_spacing);
  }
  if (j.contains("default")) detail::read_theta(j.at("default"), c.default_theta);

  if (j.contains("bounds")) {
    const auto& b = j.at("bounds");
    for (std::size_t k = 0; k < parameter_count; ++k) {
      const std::string name(parameter_names[k]);
      if (!b.contains(name)) continue;
      std::vector<double> lohi;
      read(b, name.c_str(), lohi);
      if (lohi.size() != 2) throw config_error("bounds." + name + " must be [lo, hi]");
      c.bounds[k] = {lohi[0], lohi[1]};
    }
    read(b, "log_scale", c.bounds.log_scale);
  }
  c.bounds.validate();
  if (!c.bounds.contains(c.default_theta)) throw config_error("default configuration lies outside the bounds");

  if (j.contains("evolution")) {
    const auto& e = j.at("evolution");
    read(e, "population_size", c.evolution.population_size);
    read(e, "generations", c.evolution.generations);
    read(e, "archive_size", c.evolution.archive_size);
    read(e, "crossover_rate", c.evolution.crossover_rate);
    read(e, "mutation_rate", c.evolution.mutation_rate);
    read(e, "mutation_scale", c.evolution.mutation_scale);
    read(e, "early_stop", c.evolution.early_stop);
    read(e, "stagnation_generations", c.evolution.stagnation_generations);
  }
  c.evolution.bounds = c.bounds;
  c.evolution.validate();

  if (j.contains("robust")) {
    const auto& r = j.at("robust");
    read(r, "ens_amount", c.robust.ens_amount);
    std::string agg = "mean";
    read(r, "aggregator", agg);
    if (agg == "mean")
      c.robust.aggregator = aggregator_kind::mean;
    else if (agg == "mean_variance")
      c.robust.aggregator = aggregator_kind::mean_variance;
    else
      throw config_error("robust.aggregator must be mean or mean_variance");
    read(r, "variance_weight", c.robust.variance_weight);
    read(r, "suppress_calm", c.robust.suppress_calm);
    read(r, "calm_threshold", c.robust.calm.threshold);
    read(r, "calm_overshoot", c.robust.calm.overshoot);
  }

  if (j.contains("noise")) {
    const auto& n = j.at("noise");
    read(n, "members", c.noise.members);
    read(n, "sigma", c.noise.sigma);
    read(n, "spacing", c.noise.spacing);
  }
  if (c.noise.members < 1 || c.noise.spacing < 1 || c.noise.sigma < 0.0)
    throw config_error("noise needs members >= 1, spacing >= 1, sigma >= 0");
  c.robust.resolved_amount(c.noise.members);

  if (j.contains("experiment")) {
    const auto& x = j.at("experiment");
    read(x, "repeats", c.repeats);
    read(x, "scenarios", c.scenario_ids);
    read(x, "peak_quantile", c.peak_quantile);
    std::vector<std::size_t> mid{c.layout.mid_min, c.layout.mid_max};
    read(x, "mid_sizes", mid);
    if (mid.size() != 2) throw config_error("experiment.mid_sizes must be [min, max]");
    c.layout.mid_min = mid[0];
    c.layout.mid_max = mid[1];
    read(x, "large_size", c.layout.large_size);
  }
  if (c.repeats < 1) throw config_error("experiment.repeats must be >= 1");
  if (!(c.peak_quantile > 0.0 && c.peak_quantile < 1.0)) throw config_error("peak_quantile must lie in (0, 1)");

  if (j.contains("model")) {
    const auto& m = j.at("model");
    read(m, "type", c.model.type);
    read(m, "command", c.model.command);
    read(m, "timeout_s", c.model.timeout_s);
    read(m, "scratch", c.model.scratch);
    c.model.scratch = detail::resolve(base_dir, c.model.scratch);
  }
  if (c.model.type != "surrogate" && c.model.type != "external")
    throw config_error("model.type must be surrogate or external");
  if (c.model.type == "external" && c.model.command.empty()) throw config_error("external model needs model.command");
  c.truth.seed = c.seed;
  return c;
}

inline app_config load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open config " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j, std::filesystem::path(path).parent_path());
}

// Stations file: CSV with header `id,ix,iy`.
inline station_set read_stations_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || (line != "id,ix,iy" && line != "id,ix,iy\r"))
    throw format_error("stations CSV: expected header 'id,ix,iy'");
  station_set out;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, ix, iy;
    if (!std::getline(ss, id, ',') || !std::getline(ss, ix, ',') || !std::getline(ss, iy))
      throw format_error("stations CSV: bad row '" + line + "'");
    try {
      out.push_back({id, std::stoul(ix), std::stoul(iy)});
    } catch (const std::exception&) {
      throw format_error("stations CSV: bad indices in row '" + line + "'");
    }
  }
  return out;
}

inline void write_stations_csv(std::ostream& os, const station_set& stations) {
  os << "id,ix,iy\n";
  for (const auto& s : stations) os << s.id << ',' << s.ix << ',' << s.iy << '\n';
}

/// Resolved inputs: domain files or the synthetic domain, plus
/// observations from file or generated from the surrogate truth.
struct loaded_domain {
  bathymetry_grid bathymetry;
  station_set stations;
  wind_field wind;
  series_set observations;
};

inline loaded_domain load_domain(const app_config& c) {
  loaded_domain d;
  if (c.wind_path.empty()) {
    auto syn = synthetic_domain(c.seed);
    d.bathymetry = std::move(syn.bathymetry);
    d.stations = std::move(syn.stations);
    d.wind = std::move(syn.wind);
  } else {
    d.wind = load_wfld(c.wind_path);
    std::ifstream b(c.bathymetry_path);
    if (!b) throw config_error("cannot open " + c.bathymetry_path);
    d.bathymetry = read_bath(b);
    std::ifstream s(c.stations_path);
    if (!s) throw config_error("cannot open " + c.stations_path);
    d.stations = read_stations_csv(s);
  }
  if (d.wind.nx() != d.bathymetry.nx || d.wind.ny() != d.bathymetry.ny)
    throw shape_error("wind and bathymetry grids differ");
  validate_stations(d.stations, d.bathymetry);

  if (c.observations_path.empty()) {
    d.observations = make_truth(d.wind, d.bathymetry, d.stations, c.truth);
  } else {
    d.observations = align_to_stations(load_series_csv(c.observations_path), d.stations);
    for (const auto& o : d.observations)
      if (o.times != d.wind.times())
        throw format_error("observations for '" + o.station + "' are not aligned with the wind time axis");
  }
  return d;
}

inline model_factory make_model_factory(const app_config& c, const bathymetry_grid& bathy) {
  if (c.model.type == "surrogate") return surrogate_factory(bathy);
  const auto spec = c.model;
  return [spec](const station_set& stations, std::size_t slot) -> std::unique_ptr<model_adapter> {
    external_run_spec run{spec.command,
                          std::filesystem::path(spec.scratch) / ("worker_" + std::to_string(slot)),
                          std::chrono::milliseconds(static_cast<long long>(spec.timeout_s * 1000.0))};
    return std::make_unique<external_model>(std::move(run), stations);
  };
}

inline experiment_config make_experiment_config(const app_config& c) {
  experiment_config x;
  x.evolution = c.evolution;
  x.robust = c.robust;
  x.repeats = c.repeats;
  x.scenario_ids = c.scenario_ids;
  x.peak_quantile = c.peak_quantile;
  x.seed = c.seed;
  x.default_theta = c.default_theta;
  return x;
}

inline forcing_ensemble make_ensemble(const app_config& c, const wind_field& wind) {
  return generate_ensemble(wind, c.noise.members, c.noise.sigma, c.noise.spacing, derive_seed(c.seed, {stream::ensemble}));
}

}  // namespace rebec::harness
