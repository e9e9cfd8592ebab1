#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rebec/external_model.hpp"
#include "rebec/wave_model.hpp"

using namespace rebec;

namespace {

wind_field constant_wind(std::size_t nx, std::size_t ny, std::size_t nt, double u, double v = 0.0) {
  std::vector<timestamp> times;
  for (std::size_t t = 0; t < nt; ++t) times.push_back(1538352000 + timestamp(t) * 10800);
  wind_field w(nx, ny, times);
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t iy = 0; iy < ny; ++iy)
      for (std::size_t ix = 0; ix < nx; ++ix) {
        w.u(t, ix, iy) = u;
        w.v(t, ix, iy) = v;
      }
  return w;
}

bathymetry_grid flat(std::size_t nx, std::size_t ny, double depth) { return {nx, ny, std::vector<double>(nx * ny, depth)}; }

// Direct transcription of the closed form, for one station and one step,
// evaluated independently of surrogate_evaluate.
double hand_hs(const parameter_vector& p, double w_eff, double depth) {
  const double h0 = 0.21 * p.drg * w_eff * w_eff / 9.81;
  const double h1 = std::min(h0, 0.5 * depth);
  const double h2 = h1 * std::pow(p.stpm / 0.00302, 0.25);
  return h2 * std::exp(-40.0 * p.cfw / std::max(depth, 2.0));
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("rebec_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST(Surrogate, ConstantFifteenKnotsAtTwentyMetres) {
  const auto w = constant_wind(3, 3, 4, 15.0);
  const auto out = surrogate_evaluate(default_configuration(), w, flat(3, 3, 20.0), {{"A", 1, 1}});
  ASSERT_EQ(out.size(), 1u);
  // The quoted 4.67417 carries rounding from the 5-decimal intermediates.
  for (double h : out[0].hs) {
    EXPECT_NEAR(h, 4.67417, 1e-5);
    EXPECT_NEAR(h, 0.21 * 225.0 / 9.81 * std::exp(-0.03), 1e-12);
  }
  // Intermediate values of the worked example.
  EXPECT_NEAR(0.21 * 225.0 / 9.81, 4.81651, 5e-6);
  EXPECT_NEAR(std::exp(-0.03), 0.970446, 5e-7);
}

TEST(Surrogate, ZeroWindGivesZeroHeight) {
  const auto w = constant_wind(2, 2, 5, 0.0);
  for (const parameter_vector p : {default_configuration(), parameter_vector{2.0, 0.0005, 0.01}}) {
    const auto out = surrogate_evaluate(p, w, flat(2, 2, 15.0), {{"A", 0, 0}});
    for (double h : out[0].hs) EXPECT_EQ(h, 0.0);
  }
}

TEST(Surrogate, LinearInDragBelowDepthCap) {
  const auto w = constant_wind(2, 2, 5, 5.0);
  auto p = default_configuration();
  const auto a = surrogate_evaluate(p, w, flat(2, 2, 50.0), {{"A", 1, 0}})[0].hs;
  p.drg *= 2.0;
  const auto b = surrogate_evaluate(p, w, flat(2, 2, 50.0), {{"A", 1, 0}})[0].hs;
  for (std::size_t t = 0; t < a.size(); ++t) EXPECT_DOUBLE_EQ(b[t], 2.0 * a[t]);
}

TEST(Surrogate, WindMemoryMatchesHandRecursion) {
  auto w = constant_wind(1, 1, 4, 0.0);
  const double speeds[4] = {10.0, 4.0, 12.0, 0.0};
  for (std::size_t t = 0; t < 4; ++t) {
    w.u(t, 0, 0) = speeds[t] * 0.6;
    w.v(t, 0, 0) = speeds[t] * 0.8;
  }
  const parameter_vector p{1.3, 0.02, 0.004};
  const auto hs = surrogate_evaluate(p, w, flat(1, 1, 3.0), {{"A", 0, 0}})[0].hs;
  double w_eff = 10.0;
  EXPECT_NEAR(hs[0], hand_hs(p, w_eff, 3.0), 1e-12);
  for (std::size_t t = 1; t < 4; ++t) {
    w_eff = 0.4 * w_eff + 0.6 * speeds[t];
    EXPECT_NEAR(hs[t], hand_hs(p, w_eff, 3.0), 1e-12) << "t=" << t;
  }
}

TEST(Surrogate, ShallowFrictionUsesFloorDepth) {
  const auto w = constant_wind(1, 1, 2, 3.0);
  const auto hs = surrogate_evaluate(default_configuration(), w, flat(1, 1, 1.0), {{"A", 0, 0}})[0].hs;
  EXPECT_NEAR(hs[0], hand_hs(default_configuration(), 3.0, 1.0), 1e-12);
}

TEST(Surrogate, Errors) {
  const auto w = constant_wind(3, 3, 3, 5.0);
  auto bathy = flat(3, 3, 10.0);
  bathy.at(2, 2) = -1.0;
  EXPECT_THROW(surrogate_evaluate(default_configuration(), w, bathy, {{"L", 2, 2}}), config_error);
  EXPECT_THROW(surrogate_evaluate(default_configuration(), w, flat(4, 3, 10.0), {{"A", 0, 0}}), shape_error);
  EXPECT_THROW(surrogate_evaluate(default_configuration(), w, bathy, {{"A", 0, 0}, {"A", 1, 1}}), config_error);
  EXPECT_THROW(surrogate_evaluate(default_configuration(), w, bathy, {{"A", 5, 0}}), config_error);
}

// Finite differences of +-1% on each parameter, wet station below the cap.
TEST(Surrogate, MonotoneInEachParameter) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> speed(1.0, 12.0), depth(25.0, 80.0);
  std::uniform_real_distribution<double> drg(0.2, 1.5), cfw(0.001, 0.09), stpm(0.001, 0.009);
  for (int trial = 0; trial < 200; ++trial) {
    const auto w = constant_wind(1, 1, 3, speed(rng));
    const auto bathy = flat(1, 1, depth(rng));
    const parameter_vector p{drg(rng), cfw(rng), stpm(rng)};
    auto hs = [&](parameter_vector q) { return surrogate_evaluate(q, w, bathy, {{"A", 0, 0}})[0].hs[2]; };
    const double base = hs(p);
    ASSERT_GT(base, 0.0);
    auto bump = [&](std::size_t k, double f) {
      auto q = p;
      q[k] *= f;
      return hs(q);
    };
    EXPECT_LT(bump(0, 0.99), base);
    EXPECT_GT(bump(0, 1.01), base);
    EXPECT_LT(bump(2, 0.99), base);
    EXPECT_GT(bump(2, 1.01), base);
    EXPECT_GT(bump(1, 0.99), base);
    EXPECT_LT(bump(1, 1.01), base);
  }
}

TEST(Surrogate, BoundedByDepthCapAndSteepness) {
  const parameter_bounds b;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> speed(0.0, 40.0), unit(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const double d = 0.5 + 70.0 * unit(rng);
    auto w = constant_wind(1, 1, 4, 0.0);
    for (std::size_t t = 0; t < 4; ++t) w.u(t, 0, 0) = speed(rng);
    parameter_vector p;
    for (std::size_t k = 0; k < parameter_count; ++k) p[k] = b[k].lo + unit(rng) * b[k].width();
    const double upper = 0.5 * d * std::pow(b[2].hi / 0.00302, 0.25);
    const auto out = surrogate_evaluate(p, w, flat(1, 1, d), {{"A", 0, 0}});
    for (double h : out[0].hs) {
      EXPECT_GE(h, 0.0);
      EXPECT_LE(h, upper + 1e-12);
    }
  }
}

TEST(Surrogate, StationOrderDoesNotChangeSeries) {
  auto w = constant_wind(4, 1, 6, 0.0);
  for (std::size_t t = 0; t < 6; ++t)
    for (std::size_t ix = 0; ix < 4; ++ix) w.u(t, ix, 0) = 2.0 + double(t + ix);
  bathymetry_grid b{4, 1, {3.0, 8.0, 20.0, 40.0}};
  const station_set fwd{{"a", 0, 0}, {"b", 1, 0}, {"c", 2, 0}, {"d", 3, 0}};
  const station_set rev(fwd.rbegin(), fwd.rend());
  const auto x = surrogate_evaluate({1.1, 0.03, 0.004}, w, b, fwd);
  const auto y = surrogate_evaluate({1.1, 0.03, 0.004}, w, b, rev);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(x[i], y[3 - i]);
  EXPECT_EQ(x, surrogate_evaluate({1.1, 0.03, 0.004}, w, b, fwd));
}

// d ln Hs / d ln theta at 20 m, cfw = 0.015: drg 1, stpm 0.25, cfw -0.03.
TEST(Surrogate, LogSensitivitiesAtTwentyMetres) {
  const auto w = constant_wind(1, 1, 2, 10.0);
  const auto bathy = flat(1, 1, 20.0);
  const auto p = default_configuration();
  auto lnhs = [&](parameter_vector q) { return std::log(surrogate_evaluate(q, w, bathy, {{"A", 0, 0}})[0].hs[1]); };
  auto elasticity = [&](std::size_t k) {
    const double h = 1e-5;
    auto up = p, dn = p;
    up[k] *= std::exp(h);
    dn[k] *= std::exp(-h);
    return (lnhs(up) - lnhs(dn)) / (2 * h);
  };
  EXPECT_NEAR(elasticity(0), 1.0, 1e-6);
  EXPECT_NEAR(elasticity(2), 0.25, 1e-6);
  EXPECT_NEAR(elasticity(1), -0.03, 1e-6);
}

TEST(Formats, BathymetryRoundTripAndErrors) {
  bathymetry_grid b{3, 2, {1.5, -2.0, 3.25, 10.0, 20.0, 60.0}};
  std::stringstream ss;
  write_bath(ss, b);
  EXPECT_EQ(ss.str().substr(0, 11), "BATH 1 3 2\n");
  const auto back = read_bath(ss);
  EXPECT_EQ(back.depth, b.depth);
  std::stringstream bad("BATH 1 2 2\n1 2 3\n");
  EXPECT_THROW(read_bath(bad), format_error);
  std::stringstream magic("WFLD 1 2 2\n");
  EXPECT_THROW(read_bath(magic), format_error);
}

TEST(Formats, WindFieldRoundTrip) {
  auto w = constant_wind(3, 2, 3, 0.0);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t iy = 0; iy < 2; ++iy)
      for (std::size_t ix = 0; ix < 3; ++ix) {
        w.u(t, ix, iy) = 0.1 * double(t * 100 + iy * 10 + ix);
        w.v(t, ix, iy) = -1.0 / double(1 + t + ix + iy);
      }
  std::stringstream ss;
  write_wfld(ss, w);
  EXPECT_EQ(ss.str().substr(0, 15), "WFLD 1 3 2 3\n20");
  EXPECT_EQ(read_wfld(ss), w);
  std::stringstream truncated("WFLD 1 2 1 2\n2018-10-01T00:00:00Z\n1 2\n3 4\n");
  EXPECT_THROW(read_wfld(truncated), format_error);
}

TEST(Formats, StationCsv) {
  std::stringstream ss("time,station,hs_m\n2018-10-01T00:00:00Z,P1,0.5\n2018-10-01T00:00:00Z,P2,1.0\n"
                       "2018-10-01T03:00:00Z,P1,0.75\n2018-10-01T03:00:00Z,P2,1.25\n");
  const auto s = read_series_csv(ss);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].station, "P1");
  EXPECT_EQ(s[1].hs, (std::vector<double>{1.0, 1.25}));
  EXPECT_EQ(s[0].times[1] - s[0].times[0], 10800);

  std::stringstream out;
  write_series_csv(out, s);
  EXPECT_EQ(read_series_csv(out), s);

  std::stringstream header_only("time,station,hs_m\n");
  EXPECT_THROW(read_series_csv(header_only), format_error);
  std::stringstream negative("time,station,hs_m\n2018-10-01T00:00:00Z,P1,-0.5\n");
  EXPECT_THROW(read_series_csv(negative), format_error);
  std::stringstream bad_header("t,s,h\n");
  EXPECT_THROW(read_series_csv(bad_header), format_error);
}

TEST(Formats, Iso8601) {
  EXPECT_EQ(format_iso8601(1538352000), "2018-10-01T00:00:00Z");
  EXPECT_EQ(parse_iso8601("2018-10-01T03:00:00Z"), 1538352000 + 10800);
  EXPECT_EQ(parse_iso8601("2020-02-29T23:59:59"), parse_iso8601("2020-03-01T00:00:00Z") - 1);
  EXPECT_THROW(parse_iso8601("2019-02-29T00:00:00Z"), format_error);
  EXPECT_THROW(parse_iso8601("yesterday"), format_error);
}

class ExternalAdapter : public ::testing::Test {
protected:
  void SetUp() override {
    dir = scratch(::testing::UnitTest::GetInstance()->current_test_info()->name());
    wind = constant_wind(2, 2, 3, 7.0);
    bathy = flat(2, 2, 12.0);
    stations = {{"A", 0, 0}, {"B", 1, 1}};
    expected = surrogate_evaluate({1.2, 0.01, 0.004}, wind, bathy, stations);
    save_series_csv((dir / "precomputed.csv").string(), expected);
  }
  void TearDown() override { std::filesystem::remove_all(dir); }

  external_run_spec spec(const std::string& args) {
    return {std::string(ECHO_MODEL_PATH) + " " + args, dir / "run", std::chrono::seconds(20)};
  }

  std::filesystem::path dir;
  wind_field wind;
  bathymetry_grid bathy;
  station_set stations;
  series_set expected;
};

TEST_F(ExternalAdapter, EchoStubPassesSeriesThrough) {
  const auto s = spec("copy " + (dir / "precomputed.csv").string() + " {out_path}");
  EXPECT_EQ(external_evaluate(default_configuration(), wind, s, stations), expected);
  EXPECT_EQ(read_wfld(*std::make_unique<std::ifstream>(dir / "run" / "wind.wfld")), wind);
}

TEST_F(ExternalAdapter, SubstitutesParameters) {
  const external_run_spec s{"echo {drg} {cfw} {stpm} > params.txt && " + std::string(ECHO_MODEL_PATH) + " copy " +
                                (dir / "precomputed.csv").string() + " {out_path}",
                            dir / "run", std::chrono::seconds(20)};
  const external_model model(s, stations);
  EXPECT_EQ(model.evaluate({1.25, 0.02, 0.005}, wind), expected);
  std::ifstream is(dir / "run" / "params.txt");
  double a = 0, b = 0, c = 0;
  is >> a >> b >> c;
  EXPECT_EQ(a, 1.25);
  EXPECT_EQ(b, 0.02);
  EXPECT_EQ(c, 0.005);
}

TEST_F(ExternalAdapter, NonzeroExitCarriesDiagnostics) {
  try {
    external_evaluate(default_configuration(), wind, spec("fail 3 #{out_path}"), stations);
    FAIL() << "expected model_error";
  } catch (const model_error& e) {
    EXPECT_NE(std::string(e.what()).find("status 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("simulated solver divergence"), std::string::npos);
  }
}

TEST_F(ExternalAdapter, HeaderOnlyOutputIsFormatError) {
  try {
    external_evaluate(default_configuration(), wind, spec("header {out_path}"), stations);
    FAIL() << "expected format_error";
  } catch (const format_error& e) {
    EXPECT_NE(std::string(e.what()).find("no data rows"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("A, B"), std::string::npos);
  }
}

TEST_F(ExternalAdapter, Timeout) {
  auto s = spec("sleep 5 #{out_path}");
  s.timeout = std::chrono::milliseconds(200);
  EXPECT_THROW(external_evaluate(default_configuration(), wind, s, stations), timeout_error);
}

TEST_F(ExternalAdapter, MissingStationInOutput) {
  const auto s = spec("copy " + (dir / "precomputed.csv").string() + " {out_path}");
  station_set more = stations;
  more.push_back({"C", 0, 1});
  EXPECT_THROW(external_evaluate(default_configuration(), wind, s, more), format_error);
}
