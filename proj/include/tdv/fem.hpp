#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <iostream>
#include <vector>

#include "tdv/errors.hpp"
#include "tdv/geometry.hpp"
#include "tdv/grid.hpp"
#include "tdv/params.hpp"

namespace tdv {
namespace fem {

// Reference element matrices for bilinear quads, local node order
// (0,0),(1,0),(0,1),(1,1). Exact for 2x2 Gauss quadrature.
// Stiffness of a rectangle hx*hy is (hy/hx)*kXi + (hx/hy)*kEta,
// mass is hx*hy*kMass.
inline constexpr double kXi[4][4] = {
    {2.0 / 6, -2.0 / 6, 1.0 / 6, -1.0 / 6},
    {-2.0 / 6, 2.0 / 6, -1.0 / 6, 1.0 / 6},
    {1.0 / 6, -1.0 / 6, 2.0 / 6, -2.0 / 6},
    {-1.0 / 6, 1.0 / 6, -2.0 / 6, 2.0 / 6}};
inline constexpr double kEta[4][4] = {
    {2.0 / 6, 1.0 / 6, -2.0 / 6, -1.0 / 6},
    {1.0 / 6, 2.0 / 6, -1.0 / 6, -2.0 / 6},
    {-2.0 / 6, -1.0 / 6, 2.0 / 6, 1.0 / 6},
    {-1.0 / 6, -2.0 / 6, 1.0 / 6, 2.0 / 6}};
inline constexpr double kMass[4][4] = {
    {4.0 / 36, 2.0 / 36, 2.0 / 36, 1.0 / 36},
    {2.0 / 36, 4.0 / 36, 1.0 / 36, 2.0 / 36},
    {2.0 / 36, 1.0 / 36, 4.0 / 36, 2.0 / 36},
    {1.0 / 36, 2.0 / 36, 2.0 / 36, 4.0 / 36}};

// Local node offsets within an element: (dx,dy) of local index l.
inline constexpr int kLx[4] = {0, 1, 0, 1};
inline constexpr int kLy[4] = {0, 0, 1, 1};

/// 9-band tensor-grid matrix: one coefficient per node and stencil slot.
/// Slots are ordered (dy,dx) in {-1,0,1}^2, slot = (dx+1) + 3*(dy+1).
struct Banded9 {
  long nx = 0, ny = 0;
  std::array<long, 9> off{};
  std::vector<double> a; // slot-major, a[s*n + i]

  long n() const { return nx * ny; }

  void init(long nx_, long ny_) {
    nx = nx_;
    ny = ny_;
    off = {-nx - 1, -nx, -nx + 1, -1, 0, 1, nx - 1, nx, nx + 1};
    a.assign(9 * static_cast<std::size_t>(n()), 0.0);
  }

  void add(long row, int slot, double v) { a[static_cast<std::size_t>(slot) * n() + row] += v; }

  void matvec(const std::vector<double>& x, std::vector<double>& y) const {
    const long nn = n();
    const double* ad = a.data() + 4 * static_cast<std::size_t>(nn);
    for (long i = 0; i < nn; ++i) y[i] = ad[i] * x[i];
    for (int s = 0; s < 9; ++s) {
      if (s == 4) continue;
      const long o = off[s];
      const long lo = o < 0 ? -o : 0;
      const long hi = o > 0 ? nn - o : nn;
      const double* as = a.data() + static_cast<std::size_t>(s) * nn;
      const double* xs = x.data() + o;
      for (long i = lo; i < hi; ++i) y[i] += as[i] * xs[i];
    }
  }

  std::vector<double> diagonal() const {
    const long nn = n();
    return std::vector<double>(a.begin() + 4 * nn, a.begin() + 5 * nn);
  }
};

/// Assemble alpha * stiffness(lambda) [+ mass] on all nodes (natural BC) or
/// on interior nodes only (homogeneous Dirichlet).
inline Banded9 assemble(const Grid2D& g, const std::vector<double>& lambda_e, double alpha,
                        bool with_mass, bool dirichlet) {
  if (lambda_e.size() != g.n_elems()) throw ConsistencyError("coefficient size != element count");
  const long nx = g.nx(), ny = g.ny();
  Banded9 A;
  if (dirichlet)
    A.init(nx - 2, ny - 2);
  else
    A.init(nx, ny);

  auto row_of = [&](int ix, int iy) -> long {
    if (!dirichlet) return ix + nx * static_cast<long>(iy);
    if (ix < 1 || ix > nx - 2 || iy < 1 || iy > ny - 2) return -1;
    return (ix - 1) + (nx - 2) * static_cast<long>(iy - 1);
  };

  for (int ey = 0; ey < g.ey(); ++ey) {
    for (int ex = 0; ex < g.ex(); ++ex) {
      const double hx = g.hx(ex), hy = g.hy(ey);
      const double cx = alpha * lambda_e[g.elem(ex, ey)] * hy / hx;
      const double cy = alpha * lambda_e[g.elem(ex, ey)] * hx / hy;
      const double cm = with_mass ? hx * hy : 0.0;
      for (int la = 0; la < 4; ++la) {
        const long ra = row_of(ex + kLx[la], ey + kLy[la]);
        if (ra < 0) continue;
        for (int lb = 0; lb < 4; ++lb) {
          const long rb = row_of(ex + kLx[lb], ey + kLy[lb]);
          if (rb < 0) continue;
          const int dx = kLx[lb] - kLx[la];
          const int dy = kLy[lb] - kLy[la];
          const int slot = (dx + 1) + 3 * (dy + 1);
          A.add(ra, slot, cx * kXi[la][lb] + cy * kEta[la][lb] + cm * kMass[la][lb]);
        }
      }
    }
  }
  return A;
}

/// Matrix-free operator for a uniform grid with a constant background
/// coefficient plus a short list of deviating elements. Rows fall into nine
/// classes (corner/edge/interior per direction), so only 81 weights are
/// stored; the correction list handles the perturbed elements.
struct UniformStencil {
  long nx = 0, ny = 0;
  double w[3][3][9] = {};
  struct Corr {
    long base;          // node index of the element's (0,0) corner
    double scale;       // alpha * (lambda_e - lambda_base)
  };
  std::vector<Corr> corr;
  double corr_k[4][4] = {}; // (kXi + kEta), shared by all corrections

  static UniformStencil build(const Grid2D& g, double lambda_base, double alpha, bool with_mass) {
    if (!g.is_uniform()) throw ParameterError("stencil path requires a uniform grid");
    UniformStencil st;
    st.nx = g.nx();
    st.ny = g.ny();
    const double h = g.hx(0);
    for (int la = 0; la < 4; ++la)
      for (int lb = 0; lb < 4; ++lb) st.corr_k[la][lb] = kXi[la][lb] + kEta[la][lb];
    // Weights per row class: accumulate contributions of the up to four
    // elements adjacent to a node of that class.
    for (int xc = 0; xc < 3; ++xc) {
      for (int yc = 0; yc < 3; ++yc) {
        for (int ex = -1; ex <= 0; ++ex) {
          if ((xc == 0 && ex == -1) || (xc == 2 && ex == 0)) continue;
          for (int ey = -1; ey <= 0; ++ey) {
            if ((yc == 0 && ey == -1) || (yc == 2 && ey == 0)) continue;
            const int la_x = -ex, la_y = -ey; // our node's local coords in this element
            int la = la_x + 2 * la_y;
            for (int lb = 0; lb < 4; ++lb) {
              const int dx = kLx[lb] - la_x;
              const int dy = kLy[lb] - la_y;
              const int slot = (dx + 1) + 3 * (dy + 1);
              double v = alpha * lambda_base * (kXi[la][lb] + kEta[la][lb]);
              if (with_mass) v += h * h * kMass[la][lb];
              st.w[xc][yc][slot] += v;
            }
          }
        }
      }
    }
    return st;
  }

  void add_correction(const Grid2D& g, int ex, int ey, double alpha, double dlambda) {
    corr.push_back({static_cast<long>(g.node(ex, ey)), alpha * dlambda});
  }

  void matvec(const std::vector<double>& x, std::vector<double>& y) const {
    const long n = nx * ny;
    const long offs[9] = {-nx - 1, -nx, -nx + 1, -1, 0, 1, nx - 1, nx, nx + 1};
    for (long iy = 0; iy < ny; ++iy) {
      const int yc = iy == 0 ? 0 : (iy == ny - 1 ? 2 : 1);
      const long rowbase = iy * nx;
      auto apply_node = [&](long ix, int xc) {
        const long i = rowbase + ix;
        double s = 0.0;
        const double* ww = w[xc][yc];
        for (int k = 0; k < 9; ++k) {
          if (ww[k] == 0.0) continue;
          s += ww[k] * x[i + offs[k]];
        }
        y[i] = s;
      };
      apply_node(0, 0);
      const double* ww = w[1][yc];
      const bool hasm = iy > 0, hasp = iy < ny - 1;
      for (long ix = 1; ix < nx - 1; ++ix) {
        const long i = rowbase + ix;
        double s = ww[3] * x[i - 1] + ww[4] * x[i] + ww[5] * x[i + 1];
        if (hasm) s += ww[0] * x[i - nx - 1] + ww[1] * x[i - nx] + ww[2] * x[i - nx + 1];
        if (hasp) s += ww[6] * x[i + nx - 1] + ww[7] * x[i + nx] + ww[8] * x[i + nx + 1];
        y[i] = s;
      }
      apply_node(nx - 1, 2);
    }
    (void)n;
    for (const Corr& c : corr) {
      const long gidx[4] = {c.base, c.base + 1, c.base + nx, c.base + nx + 1};
      double xl[4] = {x[gidx[0]], x[gidx[1]], x[gidx[2]], x[gidx[3]]};
      for (int a2 = 0; a2 < 4; ++a2) {
        double s = 0.0;
        for (int b = 0; b < 4; ++b) s += corr_k[a2][b] * xl[b];
        y[gidx[a2]] += c.scale * s;
      }
    }
  }

  std::vector<double> diagonal() const {
    std::vector<double> d(static_cast<std::size_t>(nx) * ny);
    for (long iy = 0; iy < ny; ++iy) {
      const int yc = iy == 0 ? 0 : (iy == ny - 1 ? 2 : 1);
      for (long ix = 0; ix < nx; ++ix) {
        const int xc = ix == 0 ? 0 : (ix == nx - 1 ? 2 : 1);
        d[iy * nx + ix] = w[xc][yc][4];
      }
    }
    for (const Corr& c : corr) {
      const long gidx[4] = {c.base, c.base + 1, c.base + nx, c.base + nx + 1};
      for (int a2 = 0; a2 < 4; ++a2) d[gidx[a2]] += c.scale * corr_k[a2][a2];
    }
    return d;
  }
};

struct CgResult {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

/// Preconditioned conjugate gradients. Inner products are evaluated
/// serially in index order so results do not depend on thread counts.
/// The observer sees every iterate (used by convergence diagnostics).
template <class ApplyOp, class ApplyPrecond, class Observer>
CgResult pcg_observed(ApplyOp&& A, ApplyPrecond&& Minv, const std::vector<double>& b,
                      std::vector<double>& x, double tol, int max_iter, Observer&& observe) {
  const std::size_t n = b.size();
  x.assign(n, 0.0);
  auto dot2 = [](const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
  };
  const double bnorm = std::sqrt(dot2(b, b));
  CgResult res;
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  std::vector<double> r = b, z(n), p(n), Ap(n);
  Minv(r, z);
  p = z;
  double rz = dot2(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    A(p, Ap);
    const double pAp = dot2(p, Ap);
    if (!(pAp > 0.0)) throw SolverError("CG breakdown: operator not SPD on search direction", std::sqrt(dot2(r, r)) / bnorm, it);
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) x[i] += alpha * p[i];
    for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * Ap[i];
    observe(it, x);
    const double rnorm = std::sqrt(dot2(r, r));
    res.iterations = it;
    res.rel_residual = rnorm / bnorm;
    if (res.rel_residual <= tol) {
      res.converged = true;
      return res;
    }
    Minv(r, z);
    const double rz_new = dot2(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return res;
}

template <class ApplyOp, class ApplyPrecond>
CgResult pcg(ApplyOp&& A, ApplyPrecond&& Minv, const std::vector<double>& b,
             std::vector<double>& x, double tol, int max_iter) {
  return pcg_observed(A, Minv, b, x, tol, max_iter,
                      [](int, const std::vector<double>&) {});
}

/// y = M v with the consistent mass matrix (element loop, fixed order).
inline std::vector<double> mass_apply(const Grid2D& g, const std::vector<double>& v) {
  std::vector<double> y(g.n_nodes(), 0.0);
  for (int ey = 0; ey < g.ey(); ++ey) {
    for (int ex = 0; ex < g.ex(); ++ex) {
      const double he = g.hx(ex) * g.hy(ey);
      std::size_t gi[4];
      for (int l = 0; l < 4; ++l) gi[l] = g.node(ex + kLx[l], ey + kLy[l]);
      for (int a = 0; a < 4; ++a) {
        double s = 0.0;
        for (int b = 0; b < 4; ++b) s += kMass[a][b] * v[gi[b]];
        y[gi[a]] += he * s;
      }
    }
  }
  return y;
}

} // namespace fem

/// Solve the smoothing problem: alpha*lambda-weighted stiffness plus mass,
/// natural boundary conditions, right-hand side M*f. Jacobi-preconditioned
/// CG; throws SolverError when cg_max_iter is hit.
inline ScalarField solve_state(const IntensityField& f, const SolveParams& p,
                               const CoefficientField& lam, const Grid2D& grid) {
  p.validate();
  grid.validate();
  if (!f.grid.same_as(grid)) throw ConsistencyError("intensity field lives on a different grid");
  if (!lam.grid.same_as(grid)) throw ConsistencyError("coefficient field lives on a different grid");
  if (lam.lambda.size() != grid.n_elems()) throw ConsistencyError("coefficient size mismatch");

  const std::vector<double> rhs = fem::mass_apply(grid, f.v);
  std::vector<double> u;
  fem::CgResult cg;

  // Count elements deviating from lambda_out to pick the operator path.
  std::size_t ndev = 0;
  for (double l : lam.lambda)
    if (l != p.lambda_out) ++ndev;

  auto jacobi = [](const std::vector<double>& d) {
    return [&d](const std::vector<double>& r, std::vector<double>& z) {
      for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / d[i];
    };
  };

  if (grid.is_uniform() && ndev <= grid.n_elems() / 8) {
    fem::UniformStencil st = fem::UniformStencil::build(grid, p.lambda_out, p.alpha, true);
    if (ndev > 0) {
      for (int ey = 0; ey < grid.ey(); ++ey)
        for (int ex = 0; ex < grid.ex(); ++ex) {
          const double l = lam.lambda[grid.elem(ex, ey)];
          if (l != p.lambda_out) st.add_correction(grid, ex, ey, p.alpha, l - p.lambda_out);
        }
    }
    const std::vector<double> diag = st.diagonal();
    cg = fem::pcg([&st](const std::vector<double>& a, std::vector<double>& b) { st.matvec(a, b); },
                  jacobi(diag), rhs, u, p.cg_tol, p.cg_max_iter);
  } else {
    fem::Banded9 A = fem::assemble(grid, lam.lambda, p.alpha, true, false);
    const std::vector<double> diag = A.diagonal();
    cg = fem::pcg([&A](const std::vector<double>& a, std::vector<double>& b) { A.matvec(a, b); },
                  jacobi(diag), rhs, u, p.cg_tol, p.cg_max_iter);
  }
  if (!cg.converged)
    throw SolverError("state solve: CG did not converge", cg.rel_residual, cg.iterations);
  ScalarField res;
  res.grid = grid;
  res.v = std::move(u);
  res.validate();
  return res;
}

/// Coefficient field for an inclusion z + eps*omega: lambda_in on elements
/// whose centroid falls inside the scaled polygon, lambda_out elsewhere.
inline CoefficientField perturbed_coefficients(const Grid2D& grid, const SolveParams& p,
                                               const Polygon& shape_poly, Vec2 z, double eps) {
  CoefficientField lam(grid, p.lambda_out);
  if (eps == 0.0) return lam;
  Polygon scaled(shape_poly.size());
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (std::size_t i = 0; i < shape_poly.size(); ++i) {
    scaled[i] = z + eps * shape_poly[i];
    xmin = std::min(xmin, scaled[i].x);
    xmax = std::max(xmax, scaled[i].x);
    ymin = std::min(ymin, scaled[i].y);
    ymax = std::max(ymax, scaled[i].y);
  }
  if (xmin <= grid.x.front() || xmax >= grid.x.back() || ymin <= grid.y.front() ||
      ymax >= grid.y.back())
    throw GeometryError("inclusion extends outside the computational domain");
  for (int ey = 0; ey < grid.ey(); ++ey) {
    if (grid.y[ey + 1] < ymin || grid.y[ey] > ymax) continue;
    for (int ex = 0; ex < grid.ex(); ++ex) {
      if (grid.x[ex + 1] < xmin || grid.x[ex] > xmax) continue;
      if (point_in_polygon(grid.elem_center(ex, ey), scaled))
        lam.lambda[grid.elem(ex, ey)] = p.lambda_in;
    }
  }
  return lam;
}

/// State solve with the coefficient perturbed by an inclusion of shape
/// `shape_poly`, size eps, centered at z. Warns when the arm width eps*w is
/// not resolved by at least two elements.
inline ScalarField solve_perturbed_state(const IntensityField& f, const SolveParams& p,
                                         const Grid2D& grid, const Polygon& shape_poly,
                                         double shape_width, Vec2 z, double eps) {
  if (eps > 0.0) {
    const double h = std::min(grid.hx(0), grid.hy(0));
    if (eps * shape_width < 2.0 * h)
      std::cerr << "warning: inclusion arm width " << eps * shape_width
                << " spans fewer than two elements (h=" << h << ")\n";
  }
  const CoefficientField lam = perturbed_coefficients(grid, p, shape_poly, z, eps);
  return solve_state(f, p, lam, grid);
}

/// J(u, lam) = 1/2 * int (u-f)^2 + alpha*lambda*|grad u|^2, evaluated with
/// the same element quadrature the solver uses (exact for bilinear data).
inline double cost_value(const ScalarField& u, const IntensityField& f,
                         const CoefficientField& lam, double alpha) {
  if (!u.grid.same_as(f.grid) || !u.grid.same_as(lam.grid))
    throw ConsistencyError("cost_value: fields on different grids");
  const Grid2D& g = u.grid;
  double J = 0.0;
  for (int ey = 0; ey < g.ey(); ++ey) {
    for (int ex = 0; ex < g.ex(); ++ex) {
      const double hx = g.hx(ex), hy = g.hy(ey);
      std::size_t gi[4];
      for (int l = 0; l < 4; ++l) gi[l] = g.node(ex + fem::kLx[l], ey + fem::kLy[l]);
      double d[4], uv[4];
      for (int l = 0; l < 4; ++l) {
        uv[l] = u.v[gi[l]];
        d[l] = uv[l] - f.v[gi[l]];
      }
      double md = 0.0, ku = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          md += d[a] * fem::kMass[a][b] * d[b];
          ku += uv[a] * ((hy / hx) * fem::kXi[a][b] + (hx / hy) * fem::kEta[a][b]) * uv[b];
        }
      J += 0.5 * hx * hy * md + 0.5 * alpha * lam.lambda[g.elem(ex, ey)] * ku;
    }
  }
  return J;
}

} // namespace tdv
