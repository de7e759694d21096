#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tdv/derivatives.hpp"
#include "tdv/fem.hpp"
#include "tdv/inclusion.hpp"
#include "tdv/scene.hpp"
#include "test_support.hpp"

using namespace tdv;

namespace {

IntensityField fill(const Grid2D& g, double (*fn)(double, double)) {
  IntensityField f(g);
  for (int iy = 0; iy < g.ny(); ++iy)
    for (int ix = 0; ix < g.nx(); ++ix) f.v[g.node(ix, iy)] = fn(g.x[ix], g.y[iy]);
  return f;
}

Grid2D stretched_grid() {
  Grid2D g;
  for (int i = 0; i <= 24; ++i) {
    const double t = static_cast<double>(i) / 24;
    g.x.push_back(t * t * 0.4 + 0.6 * t); // strictly increasing, nonuniform
  }
  g.y = g.x;
  return g;
}

} // namespace

TEST(SolveState, ConstantImageReproducedExactly) {
  const SolveParams p;
  for (const Grid2D& g : {Grid2D::unit_square(32), stretched_grid()}) {
    IntensityField f(g);
    std::fill(f.v.begin(), f.v.end(), 4.25);
    const CoefficientField lam(g, p.lambda_out);
    const ScalarField u = solve_state(f, p, lam, g);
    for (double v : u.v) EXPECT_NEAR(v, 4.25, 4.25 * 1e-11);
  }
}

TEST(SolveState, LinearInImage) {
  const Grid2D g = Grid2D::unit_square(32);
  SolveParams p;
  const CoefficientField lam(g, p.lambda_out);
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> u01(-1.0, 1.0);
  IntensityField f1(g), f2(g), fs(g);
  for (std::size_t i = 0; i < f1.v.size(); ++i) {
    f1.v[i] = u01(rng);
    f2.v[i] = u01(rng);
    fs.v[i] = f1.v[i] + f2.v[i];
  }
  const ScalarField u1 = solve_state(f1, p, lam, g);
  const ScalarField u2 = solve_state(f2, p, lam, g);
  const ScalarField us = solve_state(fs, p, lam, g);
  double maxdiff = 0.0;
  for (std::size_t i = 0; i < us.v.size(); ++i)
    maxdiff = std::max(maxdiff, std::abs(us.v[i] - u1.v[i] - u2.v[i]));
  EXPECT_LE(maxdiff, 1e-8);
}

TEST(SolveState, ManufacturedConvergenceQuick) {
  SolveParams p;
  p.cg_max_iter = 100000;
  std::vector<double> errs;
  for (int n : {25, 50}) {
    const Grid2D g = Grid2D::unit_square(n);
    const double c = 1.0 + 2.0 * p.alpha * M_PI * M_PI * p.lambda_out;
    IntensityField f(g);
    ScalarField exact(g);
    for (int iy = 0; iy < g.ny(); ++iy)
      for (int ix = 0; ix < g.nx(); ++ix) {
        const double ue = std::cos(M_PI * g.x[ix]) * std::cos(M_PI * g.y[iy]);
        exact.v[g.node(ix, iy)] = ue;
        f.v[g.node(ix, iy)] = c * ue;
      }
    const CoefficientField lam(g, p.lambda_out);
    const ScalarField u = solve_state(f, p, lam, g);
    std::vector<double> e(u.v.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = u.v[i] - exact.v[i];
    const std::vector<double> me = fem::mass_apply(g, e);
    double err2 = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) err2 += e[i] * me[i];
    errs.push_back(std::sqrt(err2));
  }
  EXPECT_GE(std::log2(errs[0] / errs[1]), 1.8);
}

TEST(SolveState, SmoothedCubeRespectsMaxBound) {
  const Grid2D g = Grid2D::unit_square(100);
  const IntensityField f = rasterize(builtin_scene("cube", {15, 10, 5, 0}), g);
  SolveParams p;
  p.lambda_in = 1.0;
  p.lambda_out = 1.0;
  const CoefficientField lam(g, 1.0);
  const ScalarField u = solve_state(f, p, lam, g);
  double umax = 0.0;
  for (double v : u.v) umax = std::max(umax, std::abs(v));
  EXPECT_LE(umax, 15.0);
  EXPECT_GT(umax, 0.0);
}

TEST(SolveState, GridMismatchThrows) {
  const Grid2D g = Grid2D::unit_square(10);
  const Grid2D g2 = Grid2D::unit_square(11);
  IntensityField f(g);
  const CoefficientField lam(g2, 1.0);
  EXPECT_THROW(solve_state(f, SolveParams{}, lam, g2), ConsistencyError);
}

TEST(SolveState, NonConvergenceRaisesSolverError) {
  const Grid2D g = Grid2D::unit_square(64);
  const IntensityField f = fill(g, [](double x, double y) { return std::sin(7 * x) + y; });
  SolveParams p;
  p.cg_max_iter = 3;
  const CoefficientField lam(g, p.lambda_out);
  try {
    solve_state(f, p, lam, g);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_EQ(e.iterations, 3);
    EXPECT_GT(e.final_residual, 0.0);
  }
}

TEST(Assembly, MatrixIsExactlySymmetric) {
  const Grid2D g = stretched_grid();
  std::vector<double> lam(g.n_elems());
  for (std::size_t i = 0; i < lam.size(); ++i) lam[i] = 0.05 + 0.001 * (i % 7);
  const fem::Banded9 A = fem::assemble(g, lam, 8.0, true, false);
  const long n = A.n();
  for (long i = 0; i < n; ++i) {
    for (int s = 0; s < 9; ++s) {
      const long j = i + A.off[s];
      if (j < 0 || j >= n) continue;
      EXPECT_EQ(A.a[static_cast<std::size_t>(s) * n + i],
                A.a[static_cast<std::size_t>(8 - s) * n + j]);
    }
  }
}

TEST(Assembly, StencilPathMatchesAssembledPath) {
  const Grid2D g = Grid2D::unit_square(16);
  const double alpha = 8.0, lam_out = 1.0, lam_in = 0.05;
  std::vector<double> lam(g.n_elems(), lam_out);
  lam[g.elem(7, 8)] = lam_in;
  lam[g.elem(8, 8)] = lam_in;
  fem::UniformStencil st = fem::UniformStencil::build(g, lam_out, alpha, true);
  st.add_correction(g, 7, 8, alpha, lam_in - lam_out);
  st.add_correction(g, 8, 8, alpha, lam_in - lam_out);
  const fem::Banded9 A = fem::assemble(g, lam, alpha, true, false);
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u01(-1, 1);
  std::vector<double> x(g.n_nodes()), ya(x.size()), yb(x.size());
  for (double& v : x) v = u01(rng);
  A.matvec(x, ya);
  st.matvec(x, yb);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(ya[i], yb[i], 1e-12);
  const std::vector<double> da = A.diagonal();
  const std::vector<double> db = st.diagonal();
  for (std::size_t i = 0; i < da.size(); ++i) EXPECT_NEAR(da[i], db[i], 1e-12);
}

TEST(Cg, EnergyErrorDecreasesMonotonically) {
  const Grid2D g = Grid2D::unit_square(16);
  SolveParams p;
  const std::vector<double> lam(g.n_elems(), p.lambda_out);
  const fem::Banded9 A = fem::assemble(g, lam, p.alpha, true, false);
  const std::vector<double> diag = A.diagonal();
  const IntensityField f = fill(g, [](double x, double y) { return std::sin(3 * x) * y + x; });
  const std::vector<double> b = fem::mass_apply(g, f.v);

  auto apply = [&](const std::vector<double>& a, std::vector<double>& y) { A.matvec(a, y); };
  auto jac = [&](const std::vector<double>& r, std::vector<double>& z) {
    for (std::size_t i = 0; i < r.size(); ++i) z[i] = r[i] / diag[i];
  };
  std::vector<double> xstar;
  fem::pcg(apply, jac, b, xstar, 1e-14, 100000);

  std::vector<double> x;
  double prev = std::numeric_limits<double>::infinity();
  int violations = 0;
  auto observer = [&](int, const std::vector<double>& xk) {
    std::vector<double> e(xk.size()), Ae(xk.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = xk[i] - xstar[i];
    A.matvec(e, Ae);
    double en = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) en += e[i] * Ae[i];
    if (en > prev * (1.0 + 1e-12)) ++violations;
    prev = en;
  };
  fem::pcg_observed(apply, jac, b, x, 1e-12, 100000, observer);
  EXPECT_EQ(violations, 0);
}

TEST(PerturbedState, ZeroEpsAndEqualLambdasAreIdentity) {
  const Grid2D g = Grid2D::unit_square(64);
  const IntensityField f = fill(g, [](double x, double y) { return std::sin(2 * x + y); });
  SolveParams p;
  const InclusionShape shape = build_inclusion({0, 90}, 0.05);
  const CoefficientField lam(g, p.lambda_out);
  const ScalarField u0 = solve_state(f, p, lam, g);

  const ScalarField ue0 = solve_perturbed_state(f, p, g, shape.polygon, shape.width, {0.5, 0.5}, 0.0);
  EXPECT_EQ(ue0.v, u0.v);

  SolveParams peq = p;
  peq.lambda_in = peq.lambda_out;
  const ScalarField u0eq = solve_state(f, peq, CoefficientField(g, peq.lambda_out), g);
  const ScalarField ueq =
      solve_perturbed_state(f, peq, g, shape.polygon, shape.width, {0.5, 0.5}, 0.15);
  EXPECT_EQ(ueq.v, u0eq.v);
}

TEST(PerturbedState, OutsideDomainThrows) {
  const Grid2D g = Grid2D::unit_square(64);
  const IntensityField f = fill(g, [](double x, double) { return x; });
  const InclusionShape shape = build_inclusion({0, 90}, 0.05);
  EXPECT_THROW(
      solve_perturbed_state(f, SolveParams{}, g, shape.polygon, shape.width, {0.95, 0.5}, 0.2),
      GeometryError);
}

TEST(PerturbedState, CostDropIsSecondOrderInEps) {
  const Grid2D g = Grid2D::unit_square(128);
  const IntensityField f = fill(g, [](double x, double y) {
    return std::sin(2.0 * M_PI * x) * (y * y + 0.2 * y);
  });
  SolveParams p;
  p.cg_max_iter = 100000;
  const InclusionShape disk = make_disk_shape(64);
  const CoefficientField lam0(g, p.lambda_out);
  const ScalarField u0 = solve_state(f, p, lam0, g);
  const double J0 = cost_value(u0, f, lam0, p.alpha);
  const Vec2 z{0.3, 0.4};
  double deltas[2];
  int k = 0;
  for (double eps : {0.3, 0.15}) {
    const CoefficientField lam = perturbed_coefficients(g, p, disk.polygon, z, eps);
    const ScalarField ue = solve_state(f, p, lam, g);
    deltas[k++] = cost_value(ue, f, lam, p.alpha) - J0;
  }
  EXPECT_LT(deltas[0], 0.0);
  EXPECT_LT(deltas[1], 0.0);
  const double ratio = deltas[0] / deltas[1];
  EXPECT_GT(ratio, 3.0);
  EXPECT_LT(ratio, 5.2);
}

TEST(ExtractDerivatives, ExactOnAffineAndQuadratics) {
  const Grid2D g = Grid2D::unit_square(40);
  const IntensityField fa = fill(g, [](double x, double y) { return 2.0 + 3.0 * x - 5.0 * y; });
  ScalarField ua;
  ua.grid = g;
  ua.v = fa.v;
  const DerivativeFields da = extract_derivatives(ua, g, 2);
  for (int iy = 2; iy < g.ny() - 2; ++iy)
    for (int ix = 2; ix < g.nx() - 2; ++ix) {
      const std::size_t i = g.node(ix, iy);
      EXPECT_NEAR(da.gx[i], 3.0, 1e-11);
      EXPECT_NEAR(da.gy[i], -5.0, 1e-11);
      EXPECT_NEAR(da.h11[i], 0.0, 1e-9);
      EXPECT_NEAR(da.h12[i], 0.0, 1e-9);
      EXPECT_NEAR(da.h22[i], 0.0, 1e-9);
    }
  ScalarField uq;
  uq.grid = g;
  uq.v = fill(g, [](double x, double) { return x * x; }).v;
  const DerivativeFields dq = extract_derivatives(uq, g, 2);
  for (int iy = 2; iy < g.ny() - 2; ++iy)
    for (int ix = 2; ix < g.nx() - 2; ++ix) {
      const std::size_t i = g.node(ix, iy);
      EXPECT_NEAR(dq.h11[i], 2.0, 1e-9);
      EXPECT_NEAR(dq.h12[i], 0.0, 1e-9);
      EXPECT_NEAR(dq.h22[i], 0.0, 1e-9);
    }
}

TEST(ExtractDerivatives, TrigAccuracy) {
  const Grid2D g = Grid2D::unit_square(100);
  ScalarField u;
  u.grid = g;
  u.v = fill(g, [](double x, double y) { return std::cos(M_PI * x) * std::cos(M_PI * y); }).v;
  const DerivativeFields d = extract_derivatives(u, g, 3);
  const double tol = 1e-3 * M_PI * M_PI;
  double maxerr = 0.0;
  for (int iy = 3; iy < g.ny() - 3; ++iy)
    for (int ix = 3; ix < g.nx() - 3; ++ix) {
      const std::size_t i = g.node(ix, iy);
      const double x = g.x[ix], y = g.y[iy];
      const double s = M_PI;
      maxerr = std::max(maxerr, std::abs(d.gx[i] + s * std::sin(s * x) * std::cos(s * y)));
      maxerr = std::max(maxerr, std::abs(d.gy[i] + s * std::cos(s * x) * std::sin(s * y)));
      maxerr = std::max(maxerr,
                        std::abs(d.h11[i] + s * s * std::cos(s * x) * std::cos(s * y)));
      maxerr = std::max(maxerr,
                        std::abs(d.h12[i] - s * s * std::sin(s * x) * std::sin(s * y)));
    }
  EXPECT_LE(maxerr, tol);
}

TEST(ExtractDerivatives, MarginErrors) {
  const Grid2D g = Grid2D::unit_square(100);
  ScalarField u(g);
  EXPECT_THROW(extract_derivatives(u, g, 1), ParameterError);
  EXPECT_NO_THROW(extract_derivatives(u, g, 50)); // exactly one interior pixel
  EXPECT_THROW(extract_derivatives(u, g, 51), ParameterError);
  const Grid2D sg = stretched_grid();
  ScalarField us(sg);
  EXPECT_THROW(extract_derivatives(us, sg, 3), ParameterError); // nonuniform grid
}
