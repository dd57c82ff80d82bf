#pragma once

#include <cmath>

namespace oedkit {

// Uniform tensor grid on [0, lx] x [0, ly] with nx * ny nodes.
// Node ordering is row-major, node(i, j) = j * nx + i, and is fixed across
// the whole toolkit.
struct Grid {
  int nx = 2;
  int ny = 2;
  double lx = 1.0;
  double ly = 1.0;

  Grid() = default;
  Grid(int nx_, int ny_, double lx_, double ly_);

  int n() const { return nx * ny; }
  double hx() const { return lx / (nx - 1); }
  double hy() const { return ly / (ny - 1); }

  int node(int i, int j) const { return j * nx + i; }
  int node_i(int idx) const { return idx % nx; }
  int node_j(int idx) const { return idx / nx; }

  double x(int i) const { return i * hx(); }
  double y(int j) const { return j * hy(); }

  bool on_boundary(int i, int j) const {
    return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
  }

  // Index of the node closest to (px, py); coordinates are clamped to the
  // closed domain first.
  int nearest_node(double px, double py) const;
};

}  // namespace oedkit
