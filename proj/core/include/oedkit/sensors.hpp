#pragma once

#include <array>
#include <vector>

#include "oedkit/grid.hpp"

namespace oedkit {

// Candidate sensor locations. Coordinates snap to the nearest grid node;
// the snapped node indices must be unique.
struct SensorLayout {
  std::vector<std::array<double, 2>> coords;
  std::vector<int> node_index;

  int count() const { return static_cast<int>(node_index.size()); }

  static SensorLayout from_coords(const Grid& grid,
                                  const std::vector<std::array<double, 2>>& pts);

  // Regular sub-grid of count_x * count_y sensors starting at (x0, y0) with
  // strides (dx, dy).
  static SensorLayout from_grid_spec(const Grid& grid, double x0, double y0, double dx,
                                     double dy, int count_x, int count_y);
};

}  // namespace oedkit
