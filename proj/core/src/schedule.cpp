#include "cfglab/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace cfglab {

std::string to_string(GridKind kind) {
  return kind == GridKind::cosine ? "cosine" : "uniform";
}

GridKind grid_kind_from_string(const std::string& s) {
  if (s == "cosine") return GridKind::cosine;
  if (s == "uniform") return GridKind::uniform;
  throw std::invalid_argument("unknown grid kind: " + s);
}

TimeGrid make_grid(GridKind kind, int n_steps, double tz) {
  if (n_steps < 1) throw std::invalid_argument("make_grid: n_steps must be >= 1");
  if (!(tz >= 0.0 && tz < 1.0)) {
    throw std::invalid_argument("make_grid: tz must lie in [0, 1)");
  }
  const auto warp = [kind](double u) {
    return kind == GridKind::cosine ? 1.0 - std::cos(M_PI / 2.0 * u) : u;
  };
  TimeGrid grid;
  grid.kind = kind;
  grid.tz = tz;
  // Truncation keeps the n_steps spacing law and drops the points before tz,
  // so tz > 0 runs fewer steps. The start time is exactly warp(tz).
  grid.points.push_back(warp(tz));
  for (int i = 0; i <= n_steps; ++i) {
    const double u = static_cast<double>(i) / n_steps;
    if (u > tz) grid.points.push_back(warp(u));
  }
  grid.points.back() = 1.0;  // pin the endpoint exactly
  grid.n_steps = static_cast<int>(grid.points.size()) - 1;
  return grid;
}

std::vector<double> step_sizes(const TimeGrid& grid) {
  std::vector<double> out(grid.points.size() - 1);
  for (std::size_t i = 0; i + 1 < grid.points.size(); ++i) {
    out[i] = grid.points[i + 1] - grid.points[i];
  }
  return out;
}

}  // namespace cfglab
