#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "rebec/error.hpp"
#include "rebec/random.hpp"
#include "rebec/wave_model.hpp"

namespace rebec::harness {

enum class scenario_group { singleton, mid, large };

/// A split of the stations into calibration and validation sets.
struct scenario {
  int id = 0;  // 1-based
  scenario_group group = scenario_group::singleton;
  std::vector<std::string> calibration;
  std::vector<std::string> validation;
};

struct scenario_layout {
  std::size_t mid_count = 5;
  std::size_t mid_min = 4, mid_max = 5;
  std::size_t large_count = 4;
  // 0 means all but one station.
  std::size_t large_size = 0;
};

/// Singletons first (one per station, in station order), then seeded
/// random mid-size subsets, then seeded all-but-one subsets.
inline std::vector<scenario> build_scenarios(const station_set& stations, std::uint64_t seed,
                                             const scenario_layout& layout = {}) {
  const std::size_t n = stations.size();
  if (n < 3) throw config_error("scenario layout needs at least 3 stations, got " + std::to_string(n));
  const std::size_t large = layout.large_size == 0 ? n - 1 : layout.large_size;
  if (layout.mid_min < 1 || layout.mid_min > layout.mid_max || layout.mid_max >= n || large >= n || large < 1)
    throw config_error("scenario subset sizes must lie in [1, station count - 1]");

  auto make = [&](int id, scenario_group g, std::vector<std::size_t> picked) {
    std::sort(picked.begin(), picked.end());
    scenario s{id, g, {}, {}};
    for (std::size_t i = 0; i < n; ++i)
      (std::binary_search(picked.begin(), picked.end(), i) ? s.calibration : s.validation).push_back(stations[i].id);
    return s;
  };

  std::vector<scenario> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(make(int(out.size()) + 1, scenario_group::singleton, {i}));

  auto rng = make_rng(seed, {stream::scenarios});
  std::vector<std::size_t> idx(n);
  std::uniform_int_distribution<std::size_t> mid_size(layout.mid_min, layout.mid_max);
  for (std::size_t k = 0; k < layout.mid_count; ++k) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(mid_size(rng));
    out.push_back(make(int(out.size()) + 1, scenario_group::mid, idx));
    idx.resize(n);
  }
  for (std::size_t k = 0; k < layout.large_count; ++k) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(large);
    out.push_back(make(int(out.size()) + 1, scenario_group::large, idx));
    idx.resize(n);
  }
  return out;
}

/// Report label such as "1-9" for the ids spanned by a group.
inline std::string group_label(const std::vector<scenario>& all, scenario_group g) {
  int lo = 0, hi = 0;
  for (const auto& s : all)
    if (s.group == g) {
      if (lo == 0) lo = s.id;
      hi = s.id;
    }
  return lo == 0 ? std::string{} : std::to_string(lo) + "-" + std::to_string(hi);
}

inline const char* group_name(scenario_group g) {
  switch (g) {
    case scenario_group::singleton: return "singleton";
    case scenario_group::mid: return "mid";
    case scenario_group::large: return "large";
  }
  return "?";
}

}  // namespace rebec::harness
