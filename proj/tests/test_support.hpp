#pragma once

#include <cmath>
#include <random>

#include "tdv/exterior.hpp"
#include "tdv/params.hpp"

namespace tdvtest {

/// Reduced-size exterior setup for pipeline behavior tests where full
/// resolution is not the point.
inline tdv::ExteriorParams light_exterior() {
  tdv::ExteriorParams e;
  e.R = 15.0;
  e.h_f = 0.05;
  e.L_f = 1.6;
  e.rho = 1.3;
  return e;
}

inline tdv::SolveParams default_solve() { return tdv::SolveParams{}; }

/// Shared solvers so the 1D eigendecompositions run once per test binary.
inline const tdv::ExteriorSolver& light_solver() {
  static const tdv::ExteriorSolver s(tdv::build_graded_grid(light_exterior()), default_solve());
  return s;
}

inline const tdv::ExteriorSolver& default_solver() {
  static const tdv::ExteriorSolver s(tdv::build_graded_grid(tdv::ExteriorParams{}),
                                     default_solve());
  return s;
}

/// Crossing-number point-in-polygon, independent of the library's
/// implementation; used as the oracle in geometry tests.
inline bool oracle_point_in_polygon(tdv::Vec2 p, const tdv::Polygon& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const tdv::Vec2 a = poly[j], b = poly[i];
    if ((b.y > p.y) != (a.y > p.y)) {
      const double xint = (a.x - b.x) * (p.y - b.y) / (a.y - b.y) + b.x;
      if (p.x < xint) inside = !inside;
    }
  }
  return inside;
}

} // namespace tdvtest
