#pragma once

#include <string>
#include <vector>

namespace cfglab {

enum class GridKind { cosine, uniform };

std::string to_string(GridKind kind);
GridKind grid_kind_from_string(const std::string& s);

// Inference time grid on [start, 1]. The cosine grid warps the uniform
// pre-grid i/n through t = 1 - cos(pi/2 * u). tz > 0 truncates the pre-grid
// to [tz, 1] while keeping the original spacing law, so the start time is
// warp(tz) -- 1 - cos(pi/2 * tz) for cosine -- and fewer steps remain.
// n_steps always reflects the actual interval count of `points`.
struct TimeGrid {
  GridKind kind = GridKind::cosine;
  int n_steps = 32;
  double tz = 0.0;
  std::vector<double> points;

  double start_time() const { return points.front(); }
};

// n_steps here is the nominal (untruncated) step count.
TimeGrid make_grid(GridKind kind, int n_steps, double tz = 0.0);

// Consecutive differences; all positive, summing to 1 - points[0].
std::vector<double> step_sizes(const TimeGrid& grid);

}  // namespace cfglab
