#include "oedkit/sensors.hpp"

#include <set>
#include <string>

#include "oedkit/errors.hpp"

namespace oedkit {

SensorLayout SensorLayout::from_coords(const Grid& grid,
                                       const std::vector<std::array<double, 2>>& pts) {
  if (pts.empty()) throw ConfigError("sensor layout needs at least one point");
  SensorLayout layout;
  layout.coords = pts;
  layout.node_index.reserve(pts.size());
  std::set<int> seen;
  for (const auto& p : pts) {
    if (p[0] < 0.0 || p[0] > grid.lx || p[1] < 0.0 || p[1] > grid.ly) {
      throw ConfigError("sensor coordinate (" + std::to_string(p[0]) + ", " +
                        std::to_string(p[1]) + ") lies outside the domain");
    }
    const int node = grid.nearest_node(p[0], p[1]);
    if (!seen.insert(node).second) {
      throw ConfigError("sensors snap to duplicate grid node " + std::to_string(node));
    }
    layout.node_index.push_back(node);
  }
  return layout;
}

SensorLayout SensorLayout::from_grid_spec(const Grid& grid, double x0, double y0,
                                          double dx, double dy, int count_x,
                                          int count_y) {
  if (count_x < 1 || count_y < 1) throw ConfigError("sensor grid counts must be >= 1");
  std::vector<std::array<double, 2>> pts;
  pts.reserve(static_cast<std::size_t>(count_x) * count_y);
  for (int j = 0; j < count_y; ++j)
    for (int i = 0; i < count_x; ++i)
      pts.push_back({x0 + i * dx, y0 + j * dy});
  return from_coords(grid, pts);
}

}  // namespace oedkit
