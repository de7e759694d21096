#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "tdv/errors.hpp"
#include "tdv/fem.hpp"
#include "tdv/grid.hpp"
#include "tdv/inclusion.hpp"
#include "tdv/params.hpp"

namespace tdv {

/// Tensor grid for the truncated exterior problem on [-R,R]^2: uniform
/// spacing h_f on the core box, geometric growth (factor rho, capped at
/// h_max) outside, last cell clipped to land exactly on R. Symmetric about
/// the origin by construction.
struct GradedGrid {
  Grid2D grid;
  ExteriorParams params;
  double core_half = 0.0; // actual core box half-width (multiple of h_f)
};

inline GradedGrid build_graded_grid(const ExteriorParams& p) {
  p.validate();
  const int nc = static_cast<int>(std::ceil(p.L_f / p.h_f - 1e-9));
  const double core = nc * p.h_f;
  if (core >= p.R) throw ParameterError("core box does not fit inside R");
  std::vector<double> half(nc);
  for (int i = 0; i < nc; ++i) half[i] = (i + 1) * p.h_f;
  double x = core;
  double h = p.h_f;
  while (x < p.R - 1e-12) {
    h = std::min(h * p.rho, p.h_max);
    if (x + h >= p.R - 1e-12) {
      half.push_back(p.R);
      break;
    }
    x += h;
    half.push_back(x);
  }
  GradedGrid gg;
  gg.params = p;
  gg.core_half = core;
  const std::size_t nh = half.size();
  gg.grid.x.resize(2 * nh + 1);
  gg.grid.x[nh] = 0.0;
  for (std::size_t i = 0; i < nh; ++i) {
    gg.grid.x[nh + 1 + i] = half[i];
    gg.grid.x[nh - 1 - i] = -half[i];
  }
  gg.grid.y = gg.grid.x;
  gg.grid.validate();
  return gg;
}

/// Per-element inclusion volume fraction from a 4x4 midpoint subsample, and
/// the resulting arithmetically averaged diffusivity.
inline CoefficientField assign_inclusion_fractions(const GradedGrid& gg,
                                                   const InclusionShape& shape,
                                                   const SolveParams& p) {
  p.validate();
  const Grid2D& g = gg.grid;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const Vec2& v : shape.polygon) {
    xmin = std::min(xmin, v.x);
    xmax = std::max(xmax, v.x);
    ymin = std::min(ymin, v.y);
    ymax = std::max(ymax, v.y);
  }
  if (std::max({std::abs(xmin), std::abs(xmax), std::abs(ymin), std::abs(ymax)}) >
      gg.core_half - 0.3)
    throw GeometryError("inclusion polygon too close to the core box boundary");

  CoefficientField c(g, p.lambda_out);
  c.theta.assign(g.n_elems(), 0.0);
  for (int ey = 0; ey < g.ey(); ++ey) {
    if (g.y[ey + 1] < ymin || g.y[ey] > ymax) continue;
    for (int ex = 0; ex < g.ex(); ++ex) {
      if (g.x[ex + 1] < xmin || g.x[ex] > xmax) continue;
      const double hx = g.hx(ex), hy = g.hy(ey);
      int cnt = 0;
      for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx) {
          const Vec2 pt{g.x[ex] + (2 * sx + 1) * hx / 8.0, g.y[ey] + (2 * sy + 1) * hy / 8.0};
          if (point_in_polygon(pt, shape.polygon)) ++cnt;
        }
      if (cnt > 0) {
        const double th = cnt / 16.0;
        c.theta[g.elem(ex, ey)] = th;
        c.lambda[g.elem(ex, ey)] = th * p.lambda_in + (1.0 - th) * p.lambda_out;
      }
    }
  }
  return c;
}

struct CorrectorPair {
  ScalarField k1, k2;
  CoefficientField coeff; // carries the theta fractions used for both solves
};

/// CG solver for the truncated corrector problem, preconditioned by the
/// exact inverse of the constant-coefficient operator on the same grid
/// (separable fast diagonalization from the 1D generalized eigenproblems).
/// The coefficient deviates from lambda_out only on the thin inclusion, so
/// iteration counts stay in the dozens independent of grid size.
class ExteriorSolver {
public:
  ExteriorSolver(const GradedGrid& gg, const SolveParams& p) : gg_(gg), p_(p) {
    p.validate();
    const Grid2D& g = gg.grid;
    decompose(g.x, Vx_, dx_);
    if (g.y == g.x) {
      Vy_ = Vx_;
      dy_ = dx_;
    } else {
      decompose(g.y, Vy_, dy_);
    }
  }

  const GradedGrid& grid() const { return gg_; }
  const SolveParams& params() const { return p_; }

  /// Right-hand side of the weak corrector problem for basis direction k,
  /// assembled with the same theta weights as the coefficient.
  std::vector<double> load_vector(const CoefficientField& coeff, int k) const {
    const Grid2D& g = gg_.grid;
    const long nix = g.nx() - 2, niy = g.ny() - 2;
    std::vector<double> rhs(static_cast<std::size_t>(nix) * niy, 0.0);
    const double jump = -p_.alpha * (p_.lambda_in - p_.lambda_out);
    static constexpr double sx[4] = {-0.5, 0.5, -0.5, 0.5};
    static constexpr double sy[4] = {-0.5, -0.5, 0.5, 0.5};
    for (int ey = 0; ey < g.ey(); ++ey) {
      for (int ex = 0; ex < g.ex(); ++ex) {
        const double th = coeff.theta[g.elem(ex, ey)];
        if (th == 0.0) continue;
        const double hx = g.hx(ex), hy = g.hy(ey);
        for (int l = 0; l < 4; ++l) {
          const int ix = ex + fem::kLx[l], iy = ey + fem::kLy[l];
          if (ix < 1 || ix > g.nx() - 2 || iy < 1 || iy > g.ny() - 2) continue;
          const double gradint = (k == 1) ? hy * sx[l] : hx * sy[l];
          rhs[(ix - 1) + nix * static_cast<long>(iy - 1)] += jump * th * gradint;
        }
      }
    }
    return rhs;
  }

  ScalarField solve(const CoefficientField& coeff, int k) const {
    if (!coeff.grid.same_as(gg_.grid)) throw ConsistencyError("coefficients on a different grid");
    if (k != 1 && k != 2) throw ParameterError("basis direction k must be 1 or 2");
    const Grid2D& g = gg_.grid;
    fem::Banded9 A = fem::assemble(g, coeff.lambda, p_.alpha, false, true);
    return solve_with(A, coeff, k);
  }

  CorrectorPair solve_pair(const CoefficientField& coeff) const {
    if (!coeff.grid.same_as(gg_.grid)) throw ConsistencyError("coefficients on a different grid");
    fem::Banded9 A = fem::assemble(gg_.grid, coeff.lambda, p_.alpha, false, true);
    CorrectorPair pair;
    pair.coeff = coeff;
    pair.k1 = solve_with(A, coeff, 1);
    pair.k2 = solve_with(A, coeff, 2);
    return pair;
  }

  /// Solve against an arbitrary interior-node load (linearity checks).
  ScalarField solve_load(const CoefficientField& coeff, const std::vector<double>& rhs) const {
    if (!coeff.grid.same_as(gg_.grid)) throw ConsistencyError("coefficients on a different grid");
    fem::Banded9 A = fem::assemble(gg_.grid, coeff.lambda, p_.alpha, false, true);
    return solve_rhs(A, rhs);
  }

private:
  static void decompose(const std::vector<double>& c, Eigen::MatrixXd& V, Eigen::VectorXd& d) {
    const int ni = static_cast<int>(c.size()) - 2;
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(ni, ni);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ni, ni);
    for (int i = 0; i < ni; ++i) {
      const double hl = c[i + 1] - c[i];
      const double hr = c[i + 2] - c[i + 1];
      S(i, i) = 1.0 / hl + 1.0 / hr;
      M(i, i) = (hl + hr) / 3.0;
      if (i + 1 < ni) {
        S(i, i + 1) = -1.0 / hr;
        S(i + 1, i) = -1.0 / hr;
        M(i, i + 1) = hr / 6.0;
        M(i + 1, i) = hr / 6.0;
      }
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(S, M);
    if (ges.info() != Eigen::Success)
      throw SolverError("1D eigendecomposition for the preconditioner failed", 0.0, 0);
    V = ges.eigenvectors();
    d = ges.eigenvalues();
  }

  ScalarField solve_with(const fem::Banded9& A, const CoefficientField& coeff, int k) const {
    return solve_rhs(A, load_vector(coeff, k));
  }

  ScalarField solve_rhs(const fem::Banded9& A, const std::vector<double>& rhs) const {
    const Grid2D& g = gg_.grid;
    const long nix = g.nx() - 2, niy = g.ny() - 2;
    const double scale = p_.alpha * p_.lambda_out;

    auto precond = [&](const std::vector<double>& r, std::vector<double>& z) {
      Eigen::Map<const Eigen::MatrixXd> R(r.data(), nix, niy);
      Eigen::MatrixXd T = Vx_.transpose() * R * Vy_;
      for (long j = 0; j < niy; ++j)
        for (long i = 0; i < nix; ++i) T(i, j) /= scale * (dx_(i) + dy_(j));
      Eigen::Map<Eigen::MatrixXd> Z(z.data(), nix, niy);
      Z = Vx_ * T * Vy_.transpose();
    };

    std::vector<double> sol;
    const fem::CgResult cg =
        fem::pcg([&A](const std::vector<double>& a, std::vector<double>& b) { A.matvec(a, b); },
                 precond, rhs, sol, p_.cg_tol, p_.cg_max_iter);
    if (!cg.converged)
      throw SolverError("corrector solve: CG did not converge", cg.rel_residual, cg.iterations);

    ScalarField K(g);
    for (long iy = 0; iy < niy; ++iy)
      for (long ix = 0; ix < nix; ++ix)
        K.v[g.node(static_cast<int>(ix) + 1, static_cast<int>(iy) + 1)] =
            sol[ix + nix * iy];
    K.validate();
    return K;
  }

  GradedGrid gg_;
  SolveParams p_;
  Eigen::MatrixXd Vx_, Vy_;
  Eigen::VectorXd dx_, dy_;
};

/// One-off convenience wrapper around ExteriorSolver.
inline ScalarField solve_corrector(const GradedGrid& gg, const InclusionShape& shape,
                                   const SolveParams& p, int k) {
  const CoefficientField coeff = assign_inclusion_fractions(gg, shape, p);
  return ExteriorSolver(gg, p).solve(coeff, k);
}

/// Integral of grad K over one element (exact for bilinear K).
inline Vec2 element_gradient_integral(const Grid2D& g, const ScalarField& K, int ex, int ey) {
  const double hx = g.hx(ex), hy = g.hy(ey);
  const double k00 = K.at(ex, ey), k10 = K.at(ex + 1, ey);
  const double k01 = K.at(ex, ey + 1), k11 = K.at(ex + 1, ey + 1);
  return {0.5 * hy * (k10 - k00 + k11 - k01), 0.5 * hx * (k01 - k00 + k11 - k10)};
}

/// Both sides of the energy identity obtained by testing the corrector
/// equation with the corrector itself.
struct EnergyIdentity {
  double lhs = 0.0; // int alpha*lambda |grad K|^2
  double rhs = 0.0; // -alpha (lambda_in-lambda_out) int_omega e_k . grad K
};

inline EnergyIdentity corrector_energy_identity(const CoefficientField& coeff,
                                                const ScalarField& K, int k,
                                                const SolveParams& p) {
  const Grid2D& g = coeff.grid;
  EnergyIdentity e;
  for (int ey = 0; ey < g.ey(); ++ey) {
    for (int ex = 0; ex < g.ex(); ++ex) {
      const double hx = g.hx(ex), hy = g.hy(ey);
      double kv[4];
      for (int l = 0; l < 4; ++l) kv[l] = K.at(ex + fem::kLx[l], ey + fem::kLy[l]);
      double quad = 0.0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
          quad += kv[a] * ((hy / hx) * fem::kXi[a][b] + (hx / hy) * fem::kEta[a][b]) * kv[b];
      e.lhs += p.alpha * coeff.lambda[g.elem(ex, ey)] * quad;
      const double th = coeff.theta.empty() ? 0.0 : coeff.theta[g.elem(ex, ey)];
      if (th > 0.0) {
        const Vec2 gi = element_gradient_integral(g, K, ex, ey);
        e.rhs += -p.alpha * (p.lambda_in - p.lambda_out) * th * (k == 1 ? gi.x : gi.y);
      }
    }
  }
  return e;
}

} // namespace tdv
