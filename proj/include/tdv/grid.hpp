#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "tdv/errors.hpp"
#include "tdv/geometry.hpp"

namespace tdv {

/// Tensor-product grid with strictly increasing node coordinates per
/// direction. Nodes are indexed (ix, iy) with ix fastest.
struct Grid2D {
  std::vector<double> x;
  std::vector<double> y;

  int nx() const { return static_cast<int>(x.size()); }
  int ny() const { return static_cast<int>(y.size()); }
  std::size_t n_nodes() const { return x.size() * y.size(); }
  int ex() const { return nx() - 1; }
  int ey() const { return ny() - 1; }
  std::size_t n_elems() const { return static_cast<std::size_t>(ex()) * ey(); }

  std::size_t node(int ix, int iy) const {
    return static_cast<std::size_t>(ix) + static_cast<std::size_t>(nx()) * iy;
  }
  std::size_t elem(int ex_, int ey_) const {
    return static_cast<std::size_t>(ex_) + static_cast<std::size_t>(ex()) * ey_;
  }
  double hx(int e) const { return x[e + 1] - x[e]; }
  double hy(int e) const { return y[e + 1] - y[e]; }
  Vec2 node_pos(int ix, int iy) const { return {x[ix], y[iy]}; }
  Vec2 elem_center(int ex_, int ey_) const {
    return {0.5 * (x[ex_] + x[ex_ + 1]), 0.5 * (y[ey_] + y[ey_ + 1])};
  }

  void validate() const {
    if (x.size() < 2 || y.size() < 2)
      throw ParameterError("grid needs at least 2 coordinates per direction");
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
      if (!(x[i + 1] > x[i])) throw ParameterError("x coordinates not strictly increasing");
    for (std::size_t i = 0; i + 1 < y.size(); ++i)
      if (!(y[i + 1] > y[i])) throw ParameterError("y coordinates not strictly increasing");
  }

  bool is_uniform(double rel_tol = 1e-12) const {
    const double hx0 = x[1] - x[0];
    const double hy0 = y[1] - y[0];
    for (std::size_t i = 0; i + 1 < x.size(); ++i)
      if (std::abs(x[i + 1] - x[i] - hx0) > rel_tol * hx0) return false;
    for (std::size_t i = 0; i + 1 < y.size(); ++i)
      if (std::abs(y[i + 1] - y[i] - hy0) > rel_tol * hy0) return false;
    return std::abs(hx0 - hy0) <= rel_tol * hx0;
  }

  bool same_as(const Grid2D& o) const { return x == o.x && y == o.y; }

  /// Uniform grid on [0,1]^2 with n_cells elements per direction
  /// (n_cells+1 nodes).
  static Grid2D unit_square(int n_cells) {
    if (n_cells < 1) throw ParameterError("unit_square needs n_cells >= 1");
    Grid2D g;
    g.x.resize(n_cells + 1);
    for (int i = 0; i <= n_cells; ++i) g.x[i] = static_cast<double>(i) / n_cells;
    g.y = g.x;
    return g;
  }
};

/// One value per grid node.
struct ScalarField {
  Grid2D grid;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const Grid2D& g) : grid(g), v(g.n_nodes(), 0.0) {}

  double& at(int ix, int iy) { return v[grid.node(ix, iy)]; }
  double at(int ix, int iy) const { return v[grid.node(ix, iy)]; }

  void validate() const {
    if (v.size() != grid.n_nodes()) throw ConsistencyError("field size != node count");
    for (double val : v)
      if (!std::isfinite(val)) throw ConsistencyError("field contains non-finite value");
  }
};

/// Nodal image data; same layout as ScalarField.
using IntensityField = ScalarField;

/// One diffusivity per element, optionally with the inclusion volume
/// fraction theta_e in [0,1] that produced it.
struct CoefficientField {
  Grid2D grid;
  std::vector<double> lambda; // per element
  std::vector<double> theta;  // per element; empty if not tracked

  CoefficientField() = default;
  CoefficientField(const Grid2D& g, double value)
      : grid(g), lambda(g.n_elems(), value) {}
};

} // namespace tdv
