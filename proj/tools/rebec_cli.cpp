// Command-line driver: synthetic truth, noise ensembles, single
// calibrations, the scenario experiment, sensitivity runs and error
// surfaces. Every output file is a pure function of config and seed.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rebec/harness/config.hpp"
#include "rebec/harness/sensitivity.hpp"
#include "rebec/rebec.hpp"

namespace fs = std::filesystem;
using namespace rebec;
using namespace rebec::harness;

namespace {

struct common_options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  std::size_t jobs = 1;
};

app_config load(const common_options& o) {
  app_config c = o.config.empty() ? parse_config(nlohmann::json::object()) : load_config(o.config);
  if (o.seed) {
    c.seed = *o.seed;
    c.truth.seed = *o.seed;
  }
  return c;
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw config_error("cannot create output directory " + dir + ": " + ec.message());
  return p;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw config_error("cannot write " + path.string());
  return os;
}

void write_domain(const fs::path& dir, const loaded_domain& d) {
  save_wfld((dir / "wind.wfld").string(), d.wind);
  auto b = open_out(dir / "bathymetry.bath");
  write_bath(b, d.bathymetry);
  auto s = open_out(dir / "stations.csv");
  write_stations_csv(s, d.stations);
}

const scenario& find_scenario(const std::vector<scenario>& all, int id) {
  for (const auto& s : all)
    if (s.id == id) return s;
  throw config_error("no scenario " + std::to_string(id) + " (have 1-" + std::to_string(all.size()) + ")");
}

void write_archive_csv(std::ostream& os, const std::vector<individual>& archive) {
  os << "drg,cfw,stpm,obj_rmse,obj_mae,fitness\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& ind : archive)
    os << ind.genotype.drg << ',' << ind.genotype.cfw << ',' << ind.genotype.stpm << ',' << ind.objectives[0] << ','
       << ind.objectives[1] << ',' << ind.fitness << '\n';
}

void write_metrics_csv(std::ostream& os, const std::string& set, const metric_report& r, bool header) {
  if (header) os << "set,station,rmse,mae,peak_rmse,peak_mae\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  auto row = [&](const std::string& id, const metric_report::entry& e) {
    os << set << ',' << id << ',' << e.rmse << ',' << e.mae << ',' << e.peak_rmse << ',' << e.peak_mae << '\n';
  };
  for (const auto& e : r.per_station) row(e.station, e);
  row("pooled", r.pooled);
}

int cmd_gen_wind_noise(const common_options& o, std::optional<std::size_t> members, std::optional<double> sigma) {
  auto c = load(o);
  if (members) c.noise.members = *members;
  if (sigma) c.noise.sigma = *sigma;
  const auto d = load_domain(c);
  const auto dir = prepare_out(o.out);
  const auto ens = make_ensemble(c, d.wind);
  save_ensemble(dir, ens);
  auto os = open_out(dir / "sources.csv");
  os << "source,ix,iy\n";
  for (std::size_t j = 0; j < ens.sources.size(); ++j) os << j << ',' << ens.sources[j].ix << ',' << ens.sources[j].iy << '\n';
  std::cout << "wrote " << ens.size() << " members to " << dir.string() << '\n';
  return 0;
}

int cmd_make_truth(const common_options& o) {
  const auto c = load(o);
  const auto d = load_domain(c);
  const auto dir = prepare_out(o.out);
  write_domain(dir, d);
  save_series_csv((dir / "observations.csv").string(), d.observations);
  std::cout << "wrote domain and observations for " << d.stations.size() << " stations to " << dir.string() << '\n';
  return 0;
}

int cmd_calibrate(const common_options& o, const std::string& algo_name, int scenario_id, bool audit) {
  const auto c = load(o);
  const auto algo = parse_algorithm(algo_name);
  const auto d = load_domain(c);
  const auto scenarios = build_scenarios(d.stations, c.seed, c.layout);
  const auto& sc = find_scenario(scenarios, scenario_id);
  const auto dir = prepare_out(o.out);

  auto evo = c.evolution;
  evo.seed = derive_seed(c.seed, {stream::calibration, std::uint64_t(sc.id)});
  const auto calib_stations = select_stations(d.stations, sc.calibration);
  const auto calib_obs = align_to_stations(d.observations, calib_stations);
  const auto factory = make_model_factory(c, d.bathymetry);
  const auto model = factory(calib_stations, 0);

  evolution_result evo_out;
  if (algo == algorithm::baseline) {
    evo_out = run_baseline(d.wind, *model, calib_obs, evo);
  } else {
    const auto ens = make_ensemble(c, d.wind);
    auto r = run_rebec(ens, *model, calib_obs, evo, c.robust);
    if (audit) {
      auto os = open_out(dir / "audit.csv");
      write_audit_csv(os, r);
    }
    evo_out = std::move(r.evolution);
  }

  {
    auto os = open_out(dir / "history.csv");
    write_history_csv(os, evo_out.history);
  }
  {
    auto os = open_out(dir / "archive.csv");
    write_archive_csv(os, evo_out.archive);
  }
  const auto& best = evo_out.archive[best_index(evo_out.archive)].genotype;
  {
    auto os = open_out(dir / "metrics.csv");
    bool header = true;
    for (const auto* ids : {&sc.calibration, &sc.validation}) {
      const auto st = select_stations(d.stations, *ids);
      const auto obs = align_to_stations(d.observations, st);
      const auto m = factory(st, 0);
      write_metrics_csv(os, ids == &sc.calibration ? "calibration" : "validation",
                        evaluate_metrics(m->evaluate(best, d.wind), obs, c.peak_quantile), header);
      header = false;
    }
  }
  std::cout << std::setprecision(6) << algorithm_name(algo) << " scenario " << sc.id << ": best " << best << " after "
            << evo_out.generations_run << " generations, " << evo_out.evaluations << " evaluations\n";
  return 0;
}

int cmd_experiment(const common_options& o, std::optional<std::size_t> repeats, const std::vector<int>& scenario_ids,
                   const std::vector<std::string>& algos) {
  auto c = load(o);
  if (repeats) c.repeats = *repeats;
  if (!scenario_ids.empty()) c.scenario_ids = scenario_ids;
  const auto d = load_domain(c);
  experiment_inputs in{d.stations, d.wind, d.observations, make_ensemble(c, d.wind),
                       build_scenarios(d.stations, c.seed, c.layout), make_model_factory(c, d.bathymetry)};
  auto cfg = make_experiment_config(c);
  cfg.jobs = o.jobs;
  if (!algos.empty()) {
    cfg.algorithms.clear();
    for (const auto& a : algos) cfg.algorithms.push_back(parse_algorithm(a));
  }
  const auto dir = prepare_out(o.out);
  const auto res = run_experiment(in, cfg, &std::cerr);
  {
    auto os = open_out(dir / "runs.csv");
    write_runs_csv(os, res.runs, in.scenarios);
  }
  {
    auto os = open_out(dir / "report.csv");
    write_report_csv(os, res.report);
  }
  {
    auto os = open_out(dir / "scenarios.csv");
    os << "scenario,group,calibration,validation\n";
    for (const auto& s : in.scenarios) {
      os << s.id << ',' << group_label(in.scenarios, s.group) << ',';
      for (std::size_t i = 0; i < s.calibration.size(); ++i) os << (i ? ";" : "") << s.calibration[i];
      os << ',';
      for (std::size_t i = 0; i < s.validation.size(); ++i) os << (i ? ";" : "") << s.validation[i];
      os << '\n';
    }
  }
  std::cout << res.runs.size() - res.failures << " of " << res.runs.size() << " runs succeeded; report in "
            << (dir / "report.csv").string() << '\n';
  return 0;
}

int cmd_sensitivity(const common_options& o, const std::vector<std::string>& params, std::size_t runs, double rel_sd,
                    const std::vector<std::string>& station_ids) {
  const auto c = load(o);
  const auto d = load_domain(c);
  const auto stations = station_ids.empty() ? d.stations : select_stations(d.stations, station_ids);
  const auto dir = prepare_out(o.out);
  std::vector<sensitivity_row> all;
  for (const auto& p : params) {
    auto rows = run_sensitivity(p, runs, rel_sd, c.default_theta, d.wind, d.bathymetry, stations, c.seed, c.bounds);
    std::cout << p << " median relative change " << median_output_change(rows) << '\n';
    all.insert(all.end(), rows.begin(), rows.end());
  }
  auto os = open_out(dir / "sensitivity.csv");
  write_sensitivity_csv(os, all);
  return 0;
}

int cmd_surface(const common_options& o, axis_spec x, axis_spec y, bool per_member, int scenario_id) {
  const auto c = load(o);
  const auto d = load_domain(c);
  station_set stations = d.stations;
  if (scenario_id > 0)
    stations = select_stations(d.stations, find_scenario(build_scenarios(d.stations, c.seed, c.layout), scenario_id).calibration);
  const auto obs = align_to_stations(d.observations, stations);
  std::vector<wind_field> forcings;
  if (per_member)
    forcings = make_ensemble(c, d.wind).members;
  else
    forcings.push_back(d.wind);
  for (auto* a : {&x, &y}) {
    const auto& r = c.bounds[parameter_index(a->parameter)];
    if (a->lo == 0.0 && a->hi == 0.0) {
      a->lo = r.lo;
      a->hi = r.hi;
    }
  }
  const auto model = make_model_factory(c, d.bathymetry)(stations, 0);
  const auto pts = error_surface(*model, forcings, obs, x, y, c.default_theta, c.bounds, o.jobs);
  const auto dir = prepare_out(o.out);
  auto os = open_out(dir / "surface.csv");
  write_surface_csv(os, pts);
  std::cout << "wrote " << pts.size() << " surface points\n";
  return 0;
}

void add_common(CLI::App* sub, common_options& o) {
  sub->add_option("-c,--config", o.config, "JSON configuration file (built-in defaults when omitted)");
  sub->add_option("--seed", o.seed, "Override the master seed");
  sub->add_option("-o,--out", o.out, "Run directory for output files")->capture_default_str();
  sub->add_option("-j,--jobs", o.jobs, "Maximum parallel workers")->check(CLI::PositiveNumber)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust ensemble-based calibration of a wave model"};
  app.require_subcommand(1);
  common_options o;

  auto* gen = app.add_subcommand("gen-wind-noise", "Generate a perturbed wind ensemble");
  add_common(gen, o);
  std::optional<std::size_t> members;
  std::optional<double> sigma;
  gen->add_option("--members", members, "Ensemble size");
  gen->add_option("--sigma", sigma, "Relative noise magnitude");

  auto* truth = app.add_subcommand("make-truth", "Write the domain and synthetic observations");
  add_common(truth, o);

  auto* cal = app.add_subcommand("calibrate", "Calibrate on one scenario");
  add_common(cal, o);
  std::string algo = "rebec";
  int scenario_id = 15;
  bool audit = false;
  cal->add_option("--algo", algo, "baseline or rebec")->capture_default_str();
  cal->add_option("--scenario", scenario_id, "Scenario id")->capture_default_str();
  cal->add_flag("--audit", audit, "Write the per-member audit CSV (rebec only)");

  auto* exp = app.add_subcommand("experiment", "Repeated baseline and rebec calibrations over all scenarios");
  add_common(exp, o);
  std::optional<std::size_t> repeats;
  std::vector<int> scenario_ids;
  std::vector<std::string> algos;
  exp->add_option("--repeats", repeats, "Calibrations per scenario and algorithm");
  exp->add_option("--scenarios", scenario_ids, "Restrict to these scenario ids");
  exp->add_option("--algo", algos, "Restrict to these algorithms");

  auto* sens = app.add_subcommand("sensitivity", "One-at-a-time parameter perturbation runs");
  add_common(sens, o);
  std::vector<std::string> params{"drg", "cfw", "stpm"};
  std::size_t runs = 50;
  double rel_sd = 0.25;
  std::vector<std::string> station_ids;
  sens->add_option("--param", params, "Parameters to perturb")->capture_default_str();
  sens->add_option("--runs", runs, "Runs per parameter")->capture_default_str();
  sens->add_option("--rel-sd", rel_sd, "Relative perturbation sd")->capture_default_str();
  sens->add_option("--stations", station_ids, "Restrict to these station ids");

  auto* surf = app.add_subcommand("surface", "Pooled RMSE scan over two parameters");
  add_common(surf, o);
  axis_spec x{"drg", 0.0, 0.0, 21}, y{"stpm", 0.0, 0.0, 21};
  std::vector<double> x_range, y_range;
  bool per_member = false;
  int surf_scenario = 0;
  surf->add_option("--x", x.parameter, "Parameter on the x axis")->capture_default_str();
  surf->add_option("--y", y.parameter, "Parameter on the y axis")->capture_default_str();
  surf->add_option("--x-range", x_range, "lo hi (defaults to bounds)")->expected(2);
  surf->add_option("--y-range", y_range, "lo hi (defaults to bounds)")->expected(2);
  surf->add_option("--points", x.points, "Grid points per axis")->check(CLI::PositiveNumber)->capture_default_str();
  surf->add_flag("--ensemble", per_member, "One surface per ensemble member");
  surf->add_option("--scenario", surf_scenario, "Use this scenario's calibration stations (0 = all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (argc > 1 && !app.got_subcommand(argv[1]) && argv[1][0] != '-')
      std::cerr << "error: unknown subcommand '" << argv[1] << "'\n\n" << app.help();
    else
      std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (gen->parsed()) return cmd_gen_wind_noise(o, members, sigma);
    if (truth->parsed()) return cmd_make_truth(o);
    if (cal->parsed()) return cmd_calibrate(o, algo, scenario_id, audit);
    if (exp->parsed()) return cmd_experiment(o, repeats, scenario_ids, algos);
    if (sens->parsed()) return cmd_sensitivity(o, params, runs, rel_sd, station_ids);
    if (surf->parsed()) {
      y.points = x.points;
      if (!x_range.empty()) x.lo = x_range[0], x.hi = x_range[1];
      if (!y_range.empty()) y.lo = y_range[0], y.hi = y_range[1];
      return cmd_surface(o, x, y, per_member, surf_scenario);
    }
  } catch (const rebec::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(error_kind::model);
  }
  return 1;
}
