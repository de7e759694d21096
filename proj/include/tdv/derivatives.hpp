#pragma once

#include <cmath>
#include <vector>

#include "tdv/errors.hpp"
#include "tdv/grid.hpp"

namespace tdv {

/// Per-pixel gradient and Hessian of the state, extracted by central
/// differences on a uniform grid. Pixels within `margin` of the boundary
/// carry no values.
struct DerivativeFields {
  Grid2D grid;
  int margin = 0;
  std::vector<double> gx, gy;       // gradient components
  std::vector<double> h11, h12, h22; // symmetric Hessian (h21 == h12)

  bool valid(int ix, int iy) const {
    return ix >= margin && ix < grid.nx() - margin && iy >= margin && iy < grid.ny() - margin;
  }
};

/// Central differences: gradient O(h^2), Hessian by second differences and
/// the cross stencil /(4h^2). Exact for quadratic polynomials.
inline DerivativeFields extract_derivatives(const ScalarField& u, const Grid2D& grid, int margin) {
  if (!u.grid.same_as(grid)) throw ConsistencyError("field lives on a different grid");
  if (!grid.is_uniform()) throw ParameterError("derivative extraction requires a uniform grid");
  if (margin < 2) throw ParameterError("margin must be >= 2");
  if (2 * margin > grid.nx() - 1 || 2 * margin > grid.ny() - 1)
    throw ParameterError("margin leaves no interior pixels");

  const double h = grid.hx(0);
  const double inv2h = 1.0 / (2.0 * h);
  const double invh2 = 1.0 / (h * h);
  const double inv4h2 = 1.0 / (4.0 * h * h);

  DerivativeFields d;
  d.grid = grid;
  d.margin = margin;
  const std::size_t n = grid.n_nodes();
  d.gx.assign(n, 0.0);
  d.gy.assign(n, 0.0);
  d.h11.assign(n, 0.0);
  d.h12.assign(n, 0.0);
  d.h22.assign(n, 0.0);

  const int nx = grid.nx(), ny = grid.ny();
  for (int iy = margin; iy < ny - margin; ++iy) {
    for (int ix = margin; ix < nx - margin; ++ix) {
      const std::size_t i = grid.node(ix, iy);
      const double c = u.v[i];
      const double e = u.v[i + 1], w = u.v[i - 1];
      const double nn = u.v[i + nx], ss = u.v[i - nx];
      d.gx[i] = (e - w) * inv2h;
      d.gy[i] = (nn - ss) * inv2h;
      d.h11[i] = (e - 2.0 * c + w) * invh2;
      d.h22[i] = (nn - 2.0 * c + ss) * invh2;
      d.h12[i] = (u.v[i + nx + 1] - u.v[i - nx + 1] - u.v[i + nx - 1] + u.v[i - nx - 1]) * inv4h2;
    }
  }
  return d;
}

} // namespace tdv
