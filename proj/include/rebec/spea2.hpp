#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rebec/error.hpp"
#include "rebec/param_space.hpp"
#include "rebec/random.hpp"

namespace rebec {

/// Objective values, all minimized. Calibration uses (RMSE, MAE).
using objective_vector = std::vector<double>;

struct individual {
  parameter_vector genotype;
  objective_vector objectives;
  double fitness = std::numeric_limits<double>::infinity();
};

struct evolution_config {
  std::size_t population_size = 20;
  std::size_t generations = 60;
  std::size_t archive_size = 5;
  double crossover_rate = 0.2;
  double mutation_rate = 0.2;
  // Mutation SD as a fraction of each parameter's bound width.
  double mutation_scale = 0.1;
  bool early_stop = false;
  std::size_t stagnation_generations = 15;
  std::uint64_t seed = 0;
  parameter_bounds bounds{};

  void validate() const {
    if (population_size < 1 || archive_size < 1) throw config_error("population and archive sizes must be >= 1");
    auto rate_ok = [](double r) { return r >= 0.0 && r <= 1.0; };
    if (!rate_ok(crossover_rate) || !rate_ok(mutation_rate)) throw config_error("rates must lie in [0, 1]");
    if (mutation_scale < 0.0) throw config_error("mutation scale must be >= 0");
    if (early_stop && stagnation_generations < 1) throw config_error("stagnation window must be >= 1");
    bounds.validate();
  }
};

/// Pareto dominance under minimization.
inline bool dominates(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw shape_error("objective vectors differ in length");
  bool strictly = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > b[i]) return false;
    if (a[i] < b[i]) strictly = true;
  }
  return strictly;
}

inline double objective_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

struct fitness_terms {
  std::vector<std::size_t> strength;
  std::vector<double> raw;
  std::vector<double> density;
};

/// Strength S(i) = #dominated by i, raw R(i) = sum of S(j) over dominators
/// j, density D(i) = 1 / (dist to k-th nearest neighbour + 2) with
/// k = round(sqrt(pool size)). Writes F = R + D into each individual.
inline fitness_terms assign_fitness(std::span<individual> pool) {
  const std::size_t n = pool.size();
  fitness_terms terms{std::vector<std::size_t>(n, 0), std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  if (n == 0) return terms;

  std::vector<char> dom(n * n, 0);  // dom[i * n + j]: i dominates j
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && dominates(pool[i].objectives, pool[j].objectives)) {
        dom[i * n + j] = 1;
        ++terms.strength[i];
      }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (dom[j * n + i]) terms.raw[i] += double(terms.strength[j]);

  const auto k = static_cast<std::size_t>(std::lround(std::sqrt(double(n))));
  std::vector<double> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dist.push_back(objective_distance(pool[i].objectives, pool[j].objectives));
    double sigma_k = 0.0;
    if (!dist.empty()) {
      const std::size_t kk = std::clamp<std::size_t>(k, 1, dist.size()) - 1;
      std::nth_element(dist.begin(), dist.begin() + std::ptrdiff_t(kk), dist.end());
      sigma_k = dist[kk];
    }
    terms.density[i] = 1.0 / (sigma_k + 2.0);
    pool[i].fitness = terms.raw[i] + terms.density[i];
  }
  return terms;
}

/// Next archive from a pool with assigned fitness. Non-dominated members
/// (F < 1) all enter; overflow is truncated by repeatedly dropping the most
/// crowded point (smallest nearest-neighbour distance, then second-nearest,
/// then lowest index); underflow is filled with the best dominated members.
inline std::vector<std::size_t> environmental_selection_indices(std::span<const individual> pool,
                                                                std::size_t archive_size) {
  std::vector<std::size_t> front, rest;
  for (std::size_t i = 0; i < pool.size(); ++i) (pool[i].fitness < 1.0 ? front : rest).push_back(i);

  if (front.size() < archive_size) {
    std::stable_sort(rest.begin(), rest.end(), [&](auto a, auto b) { return pool[a].fitness < pool[b].fitness; });
    for (std::size_t i = 0; i < rest.size() && front.size() < archive_size; ++i) front.push_back(rest[i]);
  }

  while (front.size() > archive_size) {
    const std::size_t m = front.size();
    std::size_t victim = 0;
    double best1 = std::numeric_limits<double>::infinity(), best2 = best1;
    for (std::size_t a = 0; a < m; ++a) {
      double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
      for (std::size_t b = 0; b < m; ++b) {
        if (a == b) continue;
        const double d = objective_distance(pool[front[a]].objectives, pool[front[b]].objectives);
        if (d < d1) {
          d2 = d1;
          d1 = d;
        } else if (d < d2) {
          d2 = d;
        }
      }
      if (d1 < best1 || (d1 == best1 && d2 < best2)) {
        best1 = d1;
        best2 = d2;
        victim = a;
      }
    }
    front.erase(front.begin() + std::ptrdiff_t(victim));
  }
  return front;
}

inline std::vector<individual> environmental_selection(std::span<const individual> pool, std::size_t archive_size) {
  std::vector<individual> archive;
  for (auto i : environmental_selection_indices(pool, archive_size)) archive.push_back(pool[i]);
  return archive;
}

/// Each winner is the lower-fitness of two uniform draws with replacement;
/// ties go to the first draw.
inline std::vector<individual> binary_tournament(std::span<const individual> archive, std::size_t count, rng_type& rng) {
  std::vector<individual> mates;
  if (count == 0) return mates;
  if (archive.empty()) throw config_error("binary tournament on an empty archive");
  mates.reserve(count);
  std::uniform_int_distribution<std::size_t> pick(0, archive.size() - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const auto a = pick(rng);
    const auto b = pick(rng);
    mates.push_back(archive[archive[b].fitness < archive[a].fitness ? b : a]);
  }
  return mates;
}

/// Uniform per-gene crossover on consecutive pairs, then per-gene Gaussian
/// mutation with SD mutation_scale * (hi - lo), clamped to bounds.
/// Offspring carry no objectives.
inline std::vector<individual> vary(std::span<const individual> mates, const parameter_bounds& bounds,
                                    double crossover_rate, double mutation_rate, double mutation_scale, rng_type& rng) {
  std::vector<individual> kids;
  kids.reserve(mates.size());
  for (const auto& m : mates) kids.push_back({m.genotype, {}, std::numeric_limits<double>::infinity()});

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 0; i + 1 < kids.size(); i += 2) {
    if (unit(rng) >= crossover_rate) continue;
    for (std::size_t g = 0; g < parameter_count; ++g)
      if (unit(rng) < 0.5) std::swap(kids[i].genotype[g], kids[i + 1].genotype[g]);
  }
  for (auto& kid : kids) {
    for (std::size_t g = 0; g < parameter_count; ++g)
      if (unit(rng) < mutation_rate) kid.genotype[g] += normal(rng) * mutation_scale * bounds[g].width();
    kid.genotype = clamp(kid.genotype, bounds);
  }
  return kids;
}

using evaluator_fn = std::function<objective_vector(const parameter_vector&)>;

/// Raised when the evaluator fails; carries the offending genotype.
struct evaluation_error : model_error {
  evaluation_error(const parameter_vector& g, const std::string& what) : model_error(what), genotype(g) {}
  parameter_vector genotype;
};

struct history_row {
  std::size_t generation = 0;
  std::size_t index = 0;
  parameter_vector genotype;
  objective_vector objectives;
  double fitness = 0.0;
  bool in_archive = false;
};

struct evolution_result {
  std::vector<individual> archive;
  std::vector<history_row> history;
  // Per generation: best value of each objective within the archive.
  std::vector<objective_vector> best_objectives;
  std::size_t generations_run = 0;
  std::size_t evaluations = 0;
};

namespace detail {
inline std::array<std::uint64_t, parameter_count> genotype_key(const parameter_vector& p) {
  std::array<std::uint64_t, parameter_count> key{};
  for (std::size_t i = 0; i < parameter_count; ++i) key[i] = std::bit_cast<std::uint64_t>(p[i]);
  return key;
}
}  // namespace detail

/// SPEA2 loop: LHS init, then per generation evaluate -> fitness over
/// archive + population -> environmental selection -> tournament ->
/// variation. Objectives are cached per genotype, so the evaluator must be
/// deterministic. generations = 0 selects the archive from the initial
/// sample only.
inline evolution_result run_evolution(const evaluator_fn& evaluate, const evolution_config& cfg) {
  cfg.validate();
  evolution_result result;
  std::map<std::array<std::uint64_t, parameter_count>, objective_vector> cache;

  auto score = [&](individual& ind) {
    auto [it, fresh] = cache.try_emplace(detail::genotype_key(ind.genotype));
    if (fresh) {
      try {
        it->second = evaluate(ind.genotype);
      } catch (const std::exception& e) {
        cache.erase(it);
        std::ostringstream msg;
        msg << "evaluation failed for genotype " << ind.genotype << ": " << e.what();
        throw evaluation_error(ind.genotype, msg.str());
      }
      ++result.evaluations;
    }
    ind.objectives = it->second;
  };

  std::vector<individual> population;
  for (const auto& g : lhs_sample(cfg.population_size, cfg.bounds, cfg.seed)) population.push_back({g, {}, 0.0});

  std::vector<individual> archive;
  std::size_t stagnant = 0;
  for (std::size_t gen = 0;; ++gen) {
    for (auto& ind : population) score(ind);

    std::vector<individual> pool = archive;
    pool.insert(pool.end(), population.begin(), population.end());
    assign_fitness(pool);
    const auto kept = environmental_selection_indices(pool, cfg.archive_size);
    archive.clear();
    for (auto i : kept) archive.push_back(pool[i]);

    for (std::size_t i = 0; i < pool.size(); ++i) {
      const bool in_archive = std::find(kept.begin(), kept.end(), i) != kept.end();
      result.history.push_back({gen, i, pool[i].genotype, pool[i].objectives, pool[i].fitness, in_archive});
    }

    objective_vector best(archive.front().objectives.size(), std::numeric_limits<double>::infinity());
    for (const auto& a : archive)
      for (std::size_t m = 0; m < best.size(); ++m) best[m] = std::min(best[m], a.objectives[m]);
    if (!result.best_objectives.empty() && cfg.early_stop) {
      const auto& prev = result.best_objectives.back();
      bool improved = false;
      for (std::size_t m = 0; m < best.size(); ++m) improved |= best[m] < prev[m];
      stagnant = improved ? 0 : stagnant + 1;
    }
    result.best_objectives.push_back(best);
    result.generations_run = gen;

    if (gen >= cfg.generations || (cfg.early_stop && stagnant >= cfg.stagnation_generations)) break;

    auto tourney_rng = make_rng(cfg.seed, {stream::tournament, gen});
    auto mates = binary_tournament(archive, cfg.population_size, tourney_rng);
    auto vary_rng = make_rng(cfg.seed, {stream::variation, gen});
    population = vary(mates, cfg.bounds, cfg.crossover_rate, cfg.mutation_rate, cfg.mutation_scale, vary_rng);
  }
  result.archive = std::move(archive);
  return result;
}

/// History CSV: generation,individual,drg,cfw,stpm,obj_rmse,obj_mae,fitness,in_archive
inline void write_history_csv(std::ostream& os, std::span<const history_row> rows) {
  os << "generation,individual,drg,cfw,stpm,obj_rmse,obj_mae,fitness,in_archive\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    os << r.generation << ',' << r.index << ',' << r.genotype.drg << ',' << r.genotype.cfw << ',' << r.genotype.stpm;
    for (std::size_t m = 0; m < 2; ++m) os << ',' << (m < r.objectives.size() ? r.objectives[m] : 0.0);
    os << ',' << r.fitness << ',' << (r.in_archive ? 1 : 0) << '\n';
  }
}

/// The archive member with the smallest mean objective; ties go to the
/// smaller first objective, then to the lower index.
inline std::size_t best_index(std::span<const individual> archive) {
  if (archive.empty()) throw config_error("empty archive");
  auto mean = [](const objective_vector& o) { return std::accumulate(o.begin(), o.end(), 0.0) / double(o.size()); };
  std::size_t best = 0;
  for (std::size_t i = 1; i < archive.size(); ++i) {
    const double mi = mean(archive[i].objectives), mb = mean(archive[best].objectives);
    if (mi < mb || (mi == mb && archive[i].objectives.front() < archive[best].objectives.front())) best = i;
  }
  return best;
}

}  // namespace rebec
