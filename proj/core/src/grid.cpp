#include "oedkit/grid.hpp"

#include <algorithm>

#include "oedkit/errors.hpp"

namespace oedkit {

Grid::Grid(int nx_, int ny_, double lx_, double ly_)
    : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
  if (nx < 2 || ny < 2) throw ConfigError("grid needs at least 2 nodes per axis");
  if (!(lx > 0.0) || !(ly > 0.0)) throw ConfigError("grid side lengths must be positive");
}

int Grid::nearest_node(double px, double py) const {
  const double cx = std::clamp(px, 0.0, lx);
  const double cy = std::clamp(py, 0.0, ly);
  const int i = std::clamp(static_cast<int>(std::lround(cx / hx())), 0, nx - 1);
  const int j = std::clamp(static_cast<int>(std::lround(cy / hy())), 0, ny - 1);
  return node(i, j);
}

}  // namespace oedkit
