#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rebec/error.hpp"
#include "rebec/timestamp.hpp"

namespace rebec {

/// Gridded eastward (u) and northward (v) wind components in m/s,
/// stored time-major: index = (t * ny + iy) * nx + ix.
class wind_field {
public:
  wind_field() = default;
  wind_field(std::size_t nx, std::size_t ny, std::vector<timestamp> times)
      : nx_(nx), ny_(ny), times_(std::move(times)), u_(nx * ny * times_.size(), 0.0), v_(u_.size(), 0.0) {
    if (nx == 0 || ny == 0) throw shape_error("wind field needs nx, ny >= 1");
    if (times_.size() < 2) throw shape_error("wind field needs at least two time steps");
    for (std::size_t t = 1; t < times_.size(); ++t)
      if (times_[t] <= times_[t - 1]) throw format_error("wind field timestamps must be strictly increasing");
  }

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t nt() const noexcept { return times_.size(); }
  std::size_t cells() const noexcept { return nx_ * ny_; }
  const std::vector<timestamp>& times() const noexcept { return times_; }

  std::size_t index(std::size_t t, std::size_t ix, std::size_t iy) const noexcept { return (t * ny_ + iy) * nx_ + ix; }
  std::size_t index(std::size_t t, std::size_t cell) const noexcept { return t * cells() + cell; }

  double& u(std::size_t t, std::size_t ix, std::size_t iy) { return u_[index(t, ix, iy)]; }
  double& v(std::size_t t, std::size_t ix, std::size_t iy) { return v_[index(t, ix, iy)]; }
  double u(std::size_t t, std::size_t ix, std::size_t iy) const { return u_[index(t, ix, iy)]; }
  double v(std::size_t t, std::size_t ix, std::size_t iy) const { return v_[index(t, ix, iy)]; }

  double speed(std::size_t t, std::size_t ix, std::size_t iy) const { return std::hypot(u(t, ix, iy), v(t, ix, iy)); }

  // Component 0 = u, 1 = v.
  std::vector<double>& component(int c) { return c == 0 ? u_ : v_; }
  const std::vector<double>& component(int c) const { return c == 0 ? u_ : v_; }

  bool same_shape(const wind_field& o) const { return nx_ == o.nx_ && ny_ == o.ny_ && times_ == o.times_; }

  bool all_finite() const {
    for (double x : u_)
      if (!std::isfinite(x)) return false;
    for (double x : v_)
      if (!std::isfinite(x)) return false;
    return true;
  }

  friend bool operator==(const wind_field&, const wind_field&) = default;

private:
  std::size_t nx_ = 0, ny_ = 0;
  std::vector<timestamp> times_;
  std::vector<double> u_, v_;
};

// WFLD v1:
//   WFLD 1 nx ny nt
//   then per step: a timestamp line, ny rows of nx u values, ny rows of nx v values.
inline void write_wfld(std::ostream& os, const wind_field& w) {
  os << "WFLD 1 " << w.nx() << ' ' << w.ny() << ' ' << w.nt() << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t t = 0; t < w.nt(); ++t) {
    os << format_iso8601(w.times()[t]) << '\n';
    for (int c = 0; c < 2; ++c)
      for (std::size_t iy = 0; iy < w.ny(); ++iy) {
        for (std::size_t ix = 0; ix < w.nx(); ++ix) {
          if (ix) os << ' ';
          os << (c == 0 ? w.u(t, ix, iy) : w.v(t, ix, iy));
        }
        os << '\n';
      }
  }
}

inline wind_field read_wfld(std::istream& is) {
  std::string magic;
  int version = 0;
  long long nx = 0, ny = 0, nt = 0;
  if (!(is >> magic >> version >> nx >> ny >> nt) || magic != "WFLD")
    throw format_error("WFLD: bad header (expected 'WFLD 1 nx ny nt')");
  if (version != 1) throw format_error("WFLD: unsupported version " + std::to_string(version));
  if (nx < 1 || ny < 1 || nt < 2) throw format_error("WFLD: need nx, ny >= 1 and nt >= 2");

  std::vector<timestamp> times(static_cast<std::size_t>(nt));
  std::vector<double> values(static_cast<std::size_t>(nt * ny * nx * 2));
  std::size_t k = 0;
  for (long long t = 0; t < nt; ++t) {
    std::string stamp;
    if (!(is >> stamp)) throw format_error("WFLD: missing timestamp for step " + std::to_string(t));
    times[static_cast<std::size_t>(t)] = parse_iso8601(stamp);
    for (long long j = 0; j < 2 * nx * ny; ++j)
      if (!(is >> values[k++])) throw format_error("WFLD: truncated data at step " + std::to_string(t));
  }
  wind_field w(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny), std::move(times));
  k = 0;
  for (std::size_t t = 0; t < w.nt(); ++t)
    for (int c = 0; c < 2; ++c)
      for (std::size_t iy = 0; iy < w.ny(); ++iy)
        for (std::size_t ix = 0; ix < w.nx(); ++ix) (c == 0 ? w.u(t, ix, iy) : w.v(t, ix, iy)) = values[k++];
  if (!w.all_finite()) throw format_error("WFLD: non-finite wind value");
  return w;
}

inline void save_wfld(const std::string& path, const wind_field& w) {
  std::ofstream os(path);
  if (!os) throw config_error("cannot write " + path);
  write_wfld(os, w);
}

inline wind_field load_wfld(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open " + path);
  return read_wfld(is);
}

}  // namespace rebec
