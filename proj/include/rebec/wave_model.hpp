#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rebec/error.hpp"
#include "rebec/param_space.hpp"
#include "rebec/timestamp.hpp"
#include "rebec/wind_field.hpp"

namespace rebec {

/// Water depth in meters on an ny x nx grid, row-major. Cells with
/// depth <= 0 are land.
struct bathymetry_grid {
  std::size_t nx = 0, ny = 0;
  std::vector<double> depth;

  double at(std::size_t ix, std::size_t iy) const { return depth[iy * nx + ix]; }
  double& at(std::size_t ix, std::size_t iy) { return depth[iy * nx + ix]; }
  bool wet(std::size_t ix, std::size_t iy) const { return at(ix, iy) > 0.0; }
};

inline void write_bath(std::ostream& os, const bathymetry_grid& b) {
  os << "BATH 1 " << b.nx << ' ' << b.ny << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t iy = 0; iy < b.ny; ++iy) {
    for (std::size_t ix = 0; ix < b.nx; ++ix) os << (ix ? " " : "") << b.at(ix, iy);
    os << '\n';
  }
}

inline bathymetry_grid read_bath(std::istream& is) {
  std::string magic;
  int version = 0;
  long long nx = 0, ny = 0;
  if (!(is >> magic >> version >> nx >> ny) || magic != "BATH")
    throw format_error("BATH: bad header (expected 'BATH 1 nx ny')");
  if (version != 1) throw format_error("BATH: unsupported version " + std::to_string(version));
  if (nx < 1 || ny < 1) throw format_error("BATH: grid dimensions must be >= 1");
  bathymetry_grid b{static_cast<std::size_t>(nx), static_cast<std::size_t>(ny), {}};
  b.depth.resize(b.nx * b.ny);
  for (auto& d : b.depth)
    if (!(is >> d) || !std::isfinite(d)) throw format_error("BATH: truncated or non-numeric depth data");
  return b;
}

struct station {
  std::string id;
  std::size_t ix = 0, iy = 0;
  friend bool operator==(const station&, const station&) = default;
};

using station_set = std::vector<station>;

inline void validate_stations(const station_set& stations, const bathymetry_grid& bathy) {
  if (stations.empty()) throw config_error("station set is empty");
  std::set<std::string> seen;
  for (const auto& s : stations) {
    if (!seen.insert(s.id).second) throw config_error("duplicate station id '" + s.id + "'");
    if (s.ix >= bathy.nx || s.iy >= bathy.ny) throw config_error("station '" + s.id + "' lies outside the grid");
    if (!bathy.wet(s.ix, s.iy)) throw config_error("station '" + s.id + "' lies on land");
  }
}

inline const station& find_station(const station_set& stations, const std::string& id) {
  for (const auto& s : stations)
    if (s.id == id) return s;
  throw config_error("unknown station '" + id + "'");
}

inline station_set select_stations(const station_set& all, const std::vector<std::string>& ids) {
  station_set out;
  for (const auto& id : ids) out.push_back(find_station(all, id));
  return out;
}

/// Significant wave height series (meters) at one station.
struct station_series {
  std::string station;
  std::vector<timestamp> times;
  std::vector<double> hs;
  friend bool operator==(const station_series&, const station_series&) = default;
};

using series_set = std::vector<station_series>;

// Station output / observation CSV: `time,station,hs_m`, one row per (time, station).
inline void write_series_csv(std::ostream& os, const series_set& series) {
  os << "time,station,hs_m\n" << std::setprecision(std::numeric_limits<double>::max_digits10);
  if (series.empty()) return;
  for (std::size_t t = 0; t < series.front().times.size(); ++t)
    for (const auto& s : series) os << format_iso8601(s.times[t]) << ',' << s.station << ',' << s.hs[t] << '\n';
}

/// Parses the station CSV. Series come back in order of first appearance.
inline series_set read_series_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw format_error("station CSV: empty input, missing header 'time,station,hs_m'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "time,station,hs_m") throw format_error("station CSV: bad header '" + line + "'");

  series_set out;
  std::map<std::string, std::size_t> slot;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw format_error("station CSV line " + std::to_string(lineno) + ": expected 3 fields");
    const auto t = parse_iso8601(line.substr(0, c1));
    const auto id = line.substr(c1 + 1, c2 - c1 - 1);
    double hs = 0.0;
    try {
      std::size_t used = 0;
      hs = std::stod(line.substr(c2 + 1), &used);
    } catch (const std::exception&) {
      throw format_error("station CSV line " + std::to_string(lineno) + ": bad hs_m value");
    }
    if (!std::isfinite(hs) || hs < 0.0)
      throw format_error("station CSV line " + std::to_string(lineno) + ": hs_m must be finite and >= 0");
    auto [it, fresh] = slot.try_emplace(id, out.size());
    if (fresh) out.push_back({id, {}, {}});
    auto& s = out[it->second];
    if (!s.times.empty() && t <= s.times.back())
      throw format_error("station CSV line " + std::to_string(lineno) + ": times not increasing for '" + id + "'");
    s.times.push_back(t);
    s.hs.push_back(hs);
  }
  if (out.empty()) throw format_error("station CSV: header present but no data rows");
  return out;
}

/// Reorders `series` to follow `stations`; every station must be present.
inline series_set align_to_stations(const series_set& series, const station_set& stations) {
  series_set out;
  for (const auto& st : stations) {
    auto it = std::find_if(series.begin(), series.end(), [&](const auto& s) { return s.station == st.id; });
    if (it == series.end()) throw format_error("no series for station '" + st.id + "'");
    out.push_back(*it);
  }
  return out;
}

inline void save_series_csv(const std::string& path, const series_set& s) {
  std::ofstream os(path);
  if (!os) throw config_error("cannot write " + path);
  write_series_csv(os, s);
}

inline series_set load_series_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open " + path);
  return read_series_csv(is);
}

/// The model operator: (parameters, forcing) -> one Hs series per station.
/// Implementations must be deterministic.
class model_adapter {
public:
  virtual ~model_adapter() = default;
  virtual series_set evaluate(const parameter_vector& theta, const wind_field& wind) const = 0;
  virtual const station_set& stations() const = 0;
};

namespace surrogate {
inline constexpr double gravity = 9.81;
inline constexpr double fetch_coefficient = 0.21;
inline constexpr double memory_weight = 0.6;  // lambda of the wind-speed relaxation
inline constexpr double depth_cap_ratio = 0.5;
inline constexpr double reference_stpm = 0.00302;
inline constexpr double steepness_exponent = 0.25;
inline constexpr double friction_scale = 40.0;
inline constexpr double friction_floor_depth = 2.0;
}  // namespace surrogate

/// Closed-form stand-in for a spectral wave model. Per station and step:
///   W_eff(0) = W(0),  W_eff(t) = (1 - lambda) W_eff(t-1) + lambda W(t)
///   Hs = min(0.21 drg W_eff^2 / g, 0.5 depth) * (stpm / 0.00302)^0.25
///        * exp(-40 cfw / max(depth, 2))
inline series_set surrogate_evaluate(const parameter_vector& theta, const wind_field& wind,
                                     const bathymetry_grid& bathy, const station_set& stations) {
  using namespace surrogate;
  if (wind.nx() != bathy.nx || wind.ny() != bathy.ny)
    throw shape_error("wind grid " + std::to_string(wind.nx()) + "x" + std::to_string(wind.ny()) +
                      " does not match bathymetry " + std::to_string(bathy.nx) + "x" + std::to_string(bathy.ny));
  validate_stations(stations, bathy);

  const double steepness = std::pow(theta.stpm / reference_stpm, steepness_exponent);
  series_set out;
  out.reserve(stations.size());
  for (const auto& st : stations) {
    const double depth = bathy.at(st.ix, st.iy);
    const double cap = depth_cap_ratio * depth;
    const double friction = std::exp(-friction_scale * theta.cfw / std::max(depth, friction_floor_depth));
    station_series s{st.id, wind.times(), std::vector<double>(wind.nt())};
    double w_eff = 0.0;
    for (std::size_t t = 0; t < wind.nt(); ++t) {
      const double w = wind.speed(t, st.ix, st.iy);
      w_eff = t == 0 ? w : (1.0 - memory_weight) * w_eff + memory_weight * w;
      const double h0 = fetch_coefficient * theta.drg * w_eff * w_eff / gravity;
      s.hs[t] = std::min(h0, cap) * steepness * friction;
    }
    out.push_back(std::move(s));
  }
  return out;
}

class surrogate_model final : public model_adapter {
public:
  surrogate_model(bathymetry_grid bathy, station_set stations)
      : bathy_(std::move(bathy)), stations_(std::move(stations)) {
    validate_stations(stations_, bathy_);
  }

  series_set evaluate(const parameter_vector& theta, const wind_field& wind) const override {
    return surrogate_evaluate(theta, wind, bathy_, stations_);
  }
  const station_set& stations() const override { return stations_; }
  const bathymetry_grid& bathymetry() const { return bathy_; }

  surrogate_model restricted_to(const std::vector<std::string>& ids) const {
    return {bathy_, select_stations(stations_, ids)};
  }

private:
  bathymetry_grid bathy_;
  station_set stations_;
};

}  // namespace rebec
