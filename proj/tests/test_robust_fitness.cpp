#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "rebec/harness/synthetic_domain.hpp"
#include "rebec/harness/truth.hpp"
#include "rebec/robust_fitness.hpp"

using namespace rebec;

namespace {

struct small_case {
  harness::domain dom = harness::synthetic_domain(1);
  station_set stations;
  series_set observations;
  std::unique_ptr<surrogate_model> model;

  small_case() {
    stations = select_stations(dom.stations, {"P3", "P5", "P8"});
    harness::truth_options t;
    t.theta_star = {1.2, 0.02, 0.0025};
    observations = harness::make_truth(dom.wind, dom.bathymetry, stations, t);
    model = std::make_unique<surrogate_model>(dom.bathymetry, stations);
  }
};

evolution_config quick(std::uint64_t seed) {
  evolution_config c;
  c.seed = seed;
  c.generations = 10;
  return c;
}

// Model that fails on one forcing, identified by its first U value.
class picky_model : public model_adapter {
public:
  picky_model(const model_adapter& inner, double poison) : inner_(inner), poison_(poison) {}
  series_set evaluate(const parameter_vector& theta, const wind_field& wind) const override {
    if (wind.component(0)[0] == poison_) throw model_error("nonphysical state");
    return inner_.evaluate(theta, wind);
  }
  const station_set& stations() const override { return inner_.stations(); }

private:
  const model_adapter& inner_;
  double poison_;
};

}  // namespace

TEST(TakeBest, WorkedExample) {
  const std::vector<objective_vector> objs{{0.3, 0.2}, {0.5, 0.4}, {0.2, 0.6}};
  EXPECT_EQ(take_best_by_mean(objs, 2), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(take_best_by_mean(objs, 3), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(take_best_by_mean(objs, 1), (std::vector<std::size_t>{0}));
  const std::vector<objective_vector> same(4, {1.0, 1.0});
  EXPECT_EQ(take_best_by_mean(same, 2), (std::vector<std::size_t>{0, 1}));
  EXPECT_THROW(take_best_by_mean(objs, 0), config_error);
  EXPECT_THROW(take_best_by_mean(objs, 4), config_error);
}

TEST(TakeBest, MatchesSortOracleUnderPermutation) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> v(0, 4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<objective_vector> objs(7);
    std::vector<int> ids(7);
    for (int i = 0; i < 7; ++i) {
      objs[i] = {double(v(rng)), double(v(rng))};
      ids[i] = i;
    }
    // Shuffle together with identities; the oracle sorts (mean, position).
    std::vector<int> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<objective_vector> shuffled;
    for (int p : perm) shuffled.push_back(objs[p]);
    const std::size_t k = 1 + trial % 7;
    std::vector<std::pair<double, std::size_t>> keyed;
    for (std::size_t i = 0; i < 7; ++i) keyed.push_back({(shuffled[i][0] + shuffled[i][1]) / 2.0, i});
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < k; ++i) expect.push_back(keyed[i].second);
    std::sort(expect.begin(), expect.end());
    EXPECT_EQ(take_best_by_mean(shuffled, k), expect);
  }
}

TEST(TakeBest, LargerAmountNeverLowersMeanOfMeans) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<objective_vector> objs(10);
    for (auto& o : objs) o = {u(rng), u(rng)};
    double prev = -1.0;
    for (std::size_t k = 1; k <= objs.size(); ++k) {
      double s = 0;
      for (auto i : take_best_by_mean(objs, k)) s += coordinate_mean(objs[i]);
      EXPECT_GE(s / double(k), prev - 1e-15);
      prev = s / double(k);
    }
  }
}

TEST(Aggregate, MeanAndVariance) {
  robust_config mean_cfg;
  const std::vector<objective_vector> sel{{0.3, 0.2}, {0.2, 0.6}};
  const auto m = aggregate(sel, mean_cfg);
  EXPECT_NEAR(m[0], 0.25, 1e-15);
  EXPECT_NEAR(m[1], 0.4, 1e-15);

  robust_config mv;
  mv.aggregator = aggregator_kind::mean_variance;
  mv.variance_weight = 2.0;
  const auto v = aggregate(sel, mv);
  EXPECT_NEAR(v[0], 0.25 + 2.0 * 0.05, 1e-15);
  EXPECT_NEAR(v[1], 0.4 + 2.0 * 0.2, 1e-15);
  mv.variance_weight = 0.0;
  EXPECT_EQ(aggregate(sel, mv), m);

  const std::vector<objective_vector> one{{0.7, 0.1}};
  EXPECT_EQ(aggregate(one, mean_cfg), one[0]);
  mv.variance_weight = 3.0;
  EXPECT_EQ(aggregate(one, mv), one[0]);
  EXPECT_THROW(aggregate(std::vector<objective_vector>{}, mean_cfg), config_error);
}

TEST(Aggregate, IdenticalInputsAreExact) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 200; ++trial) {
    const objective_vector x{u(rng), u(rng)};
    const std::vector<objective_vector> copies(1 + trial % 9, x);
    EXPECT_EQ(aggregate(copies, {}), x);
  }
}

TEST(Aggregate, MeanWithinSelectedRange) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<objective_vector> sel(1 + trial % 6);
    for (auto& o : sel) o = {u(rng), u(rng)};
    const auto a = aggregate(sel, {});
    for (std::size_t c = 0; c < 2; ++c) {
      double lo = 1e9, hi = -1e9;
      for (const auto& o : sel) lo = std::min(lo, o[c]), hi = std::max(hi, o[c]);
      EXPECT_GE(a[c], lo);
      EXPECT_LE(a[c], hi);
    }
  }
}

TEST(Config, ResolvedAmount) {
  robust_config c;
  EXPECT_EQ(c.resolved_amount(10), 5u);
  EXPECT_EQ(c.resolved_amount(9), 5u);
  EXPECT_EQ(c.resolved_amount(1), 1u);
  c.ens_amount = 11;
  EXPECT_THROW(c.resolved_amount(10), config_error);
}

TEST(Ensemble, IdenticalMembersGiveIdenticalObjectives) {
  small_case s;
  const auto ens = replicate_forcing(s.dom.wind, 4);
  const parameter_vector theta{0.9, 0.01, 0.004};
  const auto objs = evaluate_on_ensemble(theta, ens, *s.model, s.observations);
  ASSERT_EQ(objs.size(), 4u);
  const auto single = evaluate_single(theta, s.dom.wind, *s.model, s.observations);
  for (const auto& o : objs) EXPECT_EQ(o, single);
  const auto one = evaluate_on_ensemble(theta, replicate_forcing(s.dom.wind, 1), *s.model, s.observations);
  EXPECT_EQ(one.front(), single);
  EXPECT_EQ(evaluate_on_ensemble(theta, generate_ensemble(s.dom.wind, 4, 0.0, 10, 3), *s.model, s.observations), objs);
}

TEST(Ensemble, FailureNamesMember) {
  small_case s;
  auto ens = generate_ensemble(s.dom.wind, 3, 0.25, 10, 8);
  const picky_model bad(*s.model, ens.members[2].component(0)[0]);
  try {
    evaluate_on_ensemble(default_configuration(), ens, bad, s.observations);
    FAIL();
  } catch (const model_error& e) {
    EXPECT_NE(std::string(e.what()).find("member 2"), std::string::npos);
  }
}

TEST(Ensemble, CalmSuppressionOnlyLowersObjectivesAboveTruth) {
  small_case s;
  const auto ens = generate_ensemble(s.dom.wind, 6, 0.25, 10, 9);
  robust_config on, off;
  off.suppress_calm = false;
  const auto a = evaluate_on_ensemble(default_configuration(), ens, *s.model, s.observations, on);
  const auto b = evaluate_on_ensemble(default_configuration(), ens, *s.model, s.observations, off);
  bool differs = false;
  for (std::size_t k = 0; k < a.size(); ++k) differs |= a[k] != b[k];
  EXPECT_TRUE(differs);
}

TEST(Rebec, IdenticalMembersReduceToBaseline) {
  small_case s;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto base = run_baseline(s.dom.wind, *s.model, s.observations, quick(seed));
    const auto rob = run_rebec(replicate_forcing(s.dom.wind, 5), *s.model, s.observations, quick(seed), {});
    ASSERT_EQ(base.archive.size(), rob.evolution.archive.size());
    for (std::size_t i = 0; i < base.archive.size(); ++i) {
      EXPECT_EQ(base.archive[i].genotype, rob.evolution.archive[i].genotype);
      EXPECT_EQ(base.archive[i].objectives, rob.evolution.archive[i].objectives);
    }
  }
}

TEST(Rebec, SingleBestMember) {
  small_case s;
  const auto ens = generate_ensemble(s.dom.wind, 4, 0.25, 10, 10);
  robust_config c;
  c.ens_amount = 1;
  const auto ev = robust_evaluate({1.1, 0.02, 0.003}, ens, *s.model, s.observations, c);
  ASSERT_EQ(ev.selected.size(), 1u);
  double best = 1e9;
  for (const auto& o : ev.per_member) best = std::min(best, coordinate_mean(o));
  EXPECT_EQ(coordinate_mean(ev.aggregated), best);
  EXPECT_EQ(ev.aggregated, ev.per_member[ev.selected[0]]);
}

TEST(Rebec, DeterministicWithAudit) {
  small_case s;
  const auto ens = generate_ensemble(s.dom.wind, 10, 0.25, 10, 11);
  const auto a = run_rebec(ens, *s.model, s.observations, quick(4), {});
  const auto b = run_rebec(ens, *s.model, s.observations, quick(4), {});
  std::ostringstream sa, sb;
  write_audit_csv(sa, a);
  write_audit_csv(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  std::istringstream is(sa.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "generation,individual,member,obj_rmse,obj_mae,selected");
  std::size_t rows = 0, selected = 0;
  while (std::getline(is, line)) {
    ++rows;
    selected += line.back() == '1';
  }
  EXPECT_EQ(rows, a.evolution.history.size() * 10);
  EXPECT_EQ(selected, a.evolution.history.size() * 5);
}
