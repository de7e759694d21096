#pragma once

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "tdv/derivatives.hpp"
#include "tdv/errors.hpp"
#include "tdv/fem.hpp"
#include "tdv/grid.hpp"
#include "tdv/inclusion.hpp"
#include "tdv/polarization.hpp"

namespace tdv {

/// Topological-derivative map over the interior pixels of the image grid.
struct TDMap {
  Grid2D grid;
  int margin = 0;
  int order = 0;
  std::string shape_id;
  std::vector<double> values; // full node layout; only interior pixels valid
  double min_value = 0.0;
  int argmin_i = 0, argmin_j = 0;

  bool valid(int ix, int iy) const {
    return ix >= margin && ix < grid.nx() - margin && iy >= margin && iy < grid.ny() - margin;
  }
};

/// First-order value at one pixel: (alpha/2)(lambda_in - lambda_out)
/// g^T (I + P1) g.
inline double td1_value(Vec2 g, const PolarizationData& pol, const SolveParams& p) {
  const double a = (1.0 + pol.P1[0][0]) * g.x + pol.P1[0][1] * g.y;
  const double b = pol.P1[1][0] * g.x + (1.0 + pol.P1[1][1]) * g.y;
  return 0.5 * p.alpha * (p.lambda_in - p.lambda_out) * (g.x * a + g.y * b);
}

/// Second-order value at one pixel: alpha (lambda_in - lambda_out)
/// vec(H)^T (X + P2) g with row-major vec (rows (1,1),(1,2),(2,1),(2,2)).
inline double td2_value(Vec2 g, double h11, double h12, double h22,
                        const PolarizationData& pol, const SolveParams& p) {
  const double vecH[4] = {h11, h12, h12, h22};
  double s = 0.0;
  for (int r = 0; r < 4; ++r) {
    const double row_g =
        (pol.X[r][0] + pol.P2[r][0]) * g.x + (pol.X[r][1] + pol.P2[r][1]) * g.y;
    s += vecH[r] * row_g;
  }
  return p.alpha * (p.lambda_in - p.lambda_out) * s;
}

namespace detail {

inline void check_pol_params(const PolarizationData& pol, const SolveParams& p) {
  if (pol.alpha != p.alpha || pol.lambda_in != p.lambda_in || pol.lambda_out != p.lambda_out)
    throw ConsistencyError("polarization data computed under different solve parameters");
}

template <class PixelFn>
TDMap eval_map(const DerivativeFields& d, int order, const std::string& shape_id, PixelFn&& fn) {
  TDMap m;
  m.grid = d.grid;
  m.margin = d.margin;
  m.order = order;
  m.shape_id = shape_id;
  m.values.assign(d.grid.n_nodes(), 0.0);
  m.min_value = std::numeric_limits<double>::infinity();
  const int nx = d.grid.nx(), ny = d.grid.ny();
  for (int iy = d.margin; iy < ny - d.margin; ++iy) {
    for (int ix = d.margin; ix < nx - d.margin; ++ix) {
      const std::size_t i = d.grid.node(ix, iy);
      const double v = fn(i);
      m.values[i] = v;
      if (!std::isfinite(v)) throw ConsistencyError("non-finite topological derivative value");
      if (v < m.min_value) {
        m.min_value = v;
        m.argmin_i = ix;
        m.argmin_j = iy;
      }
    }
  }
  return m;
}

} // namespace detail

inline TDMap eval_td1(const DerivativeFields& d, const PolarizationData& pol,
                      const SolveParams& p) {
  detail::check_pol_params(pol, p);
  return detail::eval_map(d, 1, pol.shape_id, [&](std::size_t i) {
    return td1_value({d.gx[i], d.gy[i]}, pol, p);
  });
}

inline TDMap eval_td2(const DerivativeFields& d, const PolarizationData& pol,
                      const SolveParams& p) {
  detail::check_pol_params(pol, p);
  return detail::eval_map(d, 2, pol.shape_id, [&](std::size_t i) {
    return td2_value({d.gx[i], d.gy[i]}, d.h11[i], d.h12[i], d.h22[i], pol, p);
  });
}

/// One row of the finite-size expansion check.
struct EpsCheckRow {
  double eps = 0.0;
  double delta = 0.0;       // J(eps) - J(0), from direct cost evaluation
  double incl_volume = 0.0; // |omega_eps| = eps^2 |omega| (exact moments)
  double r1 = 0.0;          // delta / |omega_eps|            -> dJ
  double r2 = 0.0;          // (delta - |w_e| dJ)/(eps |w_e|) -> d2J
  double remainder = 0.0;   // (delta - |w_e| dJ - eps |w_e| d2J)/(eps |w_e|)
};

struct EpsCheckReport {
  Vec2 z;
  int node_ix = 0, node_iy = 0;
  std::string shape_id;
  Vec2 grad;
  double h11 = 0, h12 = 0, h22 = 0;
  double dJ = 0.0;  // first-order value at z from the polarization formula
  double d2J = 0.0; // second-order value at z
  std::vector<EpsCheckRow> rows;
};

/// Direct-difference oracle for the expansion: for each eps the perturbed
/// problem is solved outright and the cost difference is compared against
/// |omega_eps| dJ + eps |omega_eps| d2J. The eps solves run concurrently;
/// each solve is internally sequential so results are thread-count
/// independent.
inline EpsCheckReport finite_eps_check(const IntensityField& f, const InclusionShape& shape,
                                       const PolarizationData& pol, Vec2 z,
                                       std::vector<double> eps_list, const SolveParams& p,
                                       int margin = 3, int threads = 0) {
  detail::check_pol_params(pol, p);
  const Grid2D& grid = f.grid;
  if (!grid.is_uniform()) throw ParameterError("finite_eps_check requires a uniform grid");
  for (std::size_t i = 1; i < eps_list.size(); ++i)
    if (!(eps_list[i] < eps_list[i - 1])) throw ParameterError("eps list must be decreasing");

  // z snaps to the nearest grid node; derivatives are nodal values.
  const double h = grid.hx(0);
  const int ix = static_cast<int>(std::lround((z.x - grid.x.front()) / h));
  const int iy = static_cast<int>(std::lround((z.y - grid.y.front()) / h));
  if (ix < margin || ix >= grid.nx() - margin || iy < margin || iy >= grid.ny() - margin)
    throw ParameterError("z is not an interior point");

  const CoefficientField lam0(grid, p.lambda_out);
  const ScalarField u = solve_state(f, p, lam0, grid);
  const double J0 = cost_value(u, f, lam0, p.alpha);
  const DerivativeFields d = extract_derivatives(u, grid, margin);

  EpsCheckReport rep;
  rep.z = grid.node_pos(ix, iy);
  rep.node_ix = ix;
  rep.node_iy = iy;
  rep.shape_id = shape.id;
  const std::size_t ni = grid.node(ix, iy);
  rep.grad = {d.gx[ni], d.gy[ni]};
  rep.h11 = d.h11[ni];
  rep.h12 = d.h12[ni];
  rep.h22 = d.h22[ni];
  rep.dJ = td1_value(rep.grad, pol, p);
  rep.d2J = td2_value(rep.grad, rep.h11, rep.h12, rep.h22, pol, p);

  const double area = polygon_moments(shape.polygon).area;
  rep.rows.resize(eps_list.size());

  auto run_one = [&](std::size_t idx) {
    const double eps = eps_list[idx];
    const CoefficientField lam = perturbed_coefficients(grid, p, shape.polygon, rep.z, eps);
    const ScalarField ue = solve_state(f, p, lam, grid);
    const double Je = cost_value(ue, f, lam, p.alpha);
    EpsCheckRow row;
    row.eps = eps;
    row.delta = Je - J0;
    row.incl_volume = eps * eps * area;
    row.r1 = row.delta / row.incl_volume;
    row.r2 = (row.delta - row.incl_volume * rep.dJ) / (eps * row.incl_volume);
    row.remainder =
        (row.delta - row.incl_volume * rep.dJ - eps * row.incl_volume * rep.d2J) /
        (eps * row.incl_volume);
    rep.rows[idx] = row;
  };

  int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::max(1, std::min<int>(nthreads, static_cast<int>(eps_list.size())));
  if (nthreads == 1) {
    for (std::size_t i = 0; i < eps_list.size(); ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mtx;
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        try {
          for (std::size_t i = next.fetch_add(1); i < eps_list.size(); i = next.fetch_add(1))
            run_one(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mtx);
          if (!err) err = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }
  return rep;
}

} // namespace tdv
