#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "tdv/detect.hpp"
#include "tdv/exterior.hpp"
#include "tdv/fem.hpp"
#include "tdv/inclusion.hpp"
#include "tdv/polarization.hpp"
#include "tdv/tdmap.hpp"

namespace tdv {

struct CheckResult {
  std::string name;
  bool pass = true;
  std::string detail;
};

namespace detail {

inline std::string fmtg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline double mat42_inf_norm(const Mat42& m) {
  double n = 0.0;
  for (int r = 0; r < 4; ++r) n = std::max(n, std::abs(m[r][0]) + std::abs(m[r][1]));
  return n;
}

inline bool mat42_is_zero(const Mat42& m) {
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 2; ++c)
      if (m[r][c] != 0.0) return false;
  return true;
}

} // namespace detail

/// Interior field of the unit-disk transmission problem is uniform; the
/// mean corrector gradient equals (lambda_out-lambda_in)/(lambda_in+lambda_out)
/// times the forcing direction. Checks P1 entrywise (5%), X == 0 exactly,
/// and the near-vanishing of P2 by central symmetry.
inline CheckResult check_disk_polarization(const SolveParams& p, const ExteriorParams& ext) {
  CheckResult res{"disk polarization oracle"};
  const InclusionShape disk = make_disk_shape(64);
  const GradedGrid gg = build_graded_grid(ext);
  const ExteriorSolver solver(gg, p);
  const PolarizationData pol = precompute_shape(disk, solver);

  const double expect = (p.lambda_out - p.lambda_in) / (p.lambda_in + p.lambda_out);
  const double tol = 0.05 * expect;
  bool ok = std::abs(pol.P1[0][0] - expect) <= tol && std::abs(pol.P1[1][1] - expect) <= tol &&
            std::abs(pol.P1[0][1]) <= tol && std::abs(pol.P1[1][0]) <= tol;
  if (!detail::mat42_is_zero(pol.X)) ok = false;
  const double p2norm = detail::mat42_inf_norm(pol.P2);
  if (!(p2norm < 0.02)) ok = false;
  res.pass = ok;
  res.detail = "P1 diag (" + detail::fmtg(pol.P1[0][0]) + ", " + detail::fmtg(pol.P1[1][1]) +
               ") vs " + detail::fmtg(expect) + ", offdiag max " +
               detail::fmtg(std::max(std::abs(pol.P1[0][1]), std::abs(pol.P1[1][0]))) +
               ", X exact zero: " + (detail::mat42_is_zero(pol.X) ? "yes" : "NO") +
               ", |P2|_inf " + detail::fmtg(p2norm);
  return res;
}

/// Manufactured solution u = cos(pi x) cos(pi y): the load
/// (1 + 2 alpha pi^2 lambda) u satisfies the strong form with natural
/// boundary conditions on the unit square. Observed L2 order across three
/// uniform refinements must be >= 1.9.
inline CheckResult check_manufactured_convergence(const SolveParams& p,
                                                  const std::vector<int>& levels = {50, 100, 200}) {
  CheckResult res{"manufactured FE convergence"};
  SolveParams ps = p;
  ps.cg_max_iter = std::max(p.cg_max_iter, 200000);
  std::vector<double> errs;
  for (int n : levels) {
    const Grid2D grid = Grid2D::unit_square(n);
    IntensityField f(grid);
    ScalarField exact(grid);
    const double c = 1.0 + 2.0 * ps.alpha * M_PI * M_PI * ps.lambda_out;
    for (int iy = 0; iy < grid.ny(); ++iy)
      for (int ix = 0; ix < grid.nx(); ++ix) {
        const double ue = std::cos(M_PI * grid.x[ix]) * std::cos(M_PI * grid.y[iy]);
        exact.v[grid.node(ix, iy)] = ue;
        f.v[grid.node(ix, iy)] = c * ue;
      }
    const CoefficientField lam(grid, ps.lambda_out);
    const ScalarField u = solve_state(f, ps, lam, grid);
    std::vector<double> e(u.v.size());
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = u.v[i] - exact.v[i];
    const std::vector<double> me = fem::mass_apply(grid, e);
    double err2 = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) err2 += e[i] * me[i];
    errs.push_back(std::sqrt(err2));
  }
  std::string d = "L2 errors";
  for (double e : errs) d += " " + detail::fmtg(e);
  d += ", orders";
  bool ok = true;
  for (std::size_t i = 1; i < errs.size(); ++i) {
    const double order = std::log2(errs[i - 1] / errs[i]);
    d += " " + detail::fmtg(order);
    if (!(order >= 1.9)) ok = false;
  }
  res.pass = ok;
  res.detail = d;
  return res;
}

/// Central symmetry wipes out the centroid (exactly, by the error-free
/// moment sums), so X vanishes exactly and P2 within the resolution
/// tolerance; reflection symmetry about the x-axis clears the P1
/// off-diagonals.
inline CheckResult check_symmetry_nulls(const SolveParams& p, const ExteriorParams& ext,
                                        double tol_sym = 0.02) {
  CheckResult res{"symmetry nulls"};
  const GradedGrid gg = build_graded_grid(ext);
  const ExteriorSolver solver(gg, p);
  bool ok = true;
  std::string d;
  for (const auto& angles : std::vector<std::vector<double>>{{0, 180}, {0, 90, 180, 270}}) {
    const InclusionShape s = build_inclusion(angles, kDefaultWidth);
    const PolarizationData pol = precompute_shape(s, solver);
    const bool xzero = detail::mat42_is_zero(pol.X) && pol.centroid.x == 0.0 && pol.centroid.y == 0.0;
    const double p2n = detail::mat42_inf_norm(pol.P2);
    const double offdiag = std::max(std::abs(pol.P1[0][1]), std::abs(pol.P1[1][0]));
    if (!xzero || !(p2n <= tol_sym) || !(offdiag <= tol_sym)) ok = false;
    d += s.id + ": X zero " + (xzero ? "yes" : "NO") + ", |P2|_inf " + detail::fmtg(p2n) +
         ", P1 offdiag " + detail::fmtg(offdiag) + "; ";
  }
  res.pass = ok;
  res.detail = d;
  return res;
}

struct FiniteEpsSettings {
  int cells = 400;                          // image grid resolution
  std::vector<double> eps = {0.2, 0.1, 0.05};
  Vec2 z{0.3, 0.4};
  std::vector<double> ray_angles = {0, 90}; // the L-corner shape
  double final_r1_rel_tol = 0.15;
  bool require_monotone = true;
  int threads = 0;
};

/// Definition-level oracle: solve the perturbed problem outright for a
/// ladder of inclusion sizes and compare the measured cost differences with
/// the first- and second-order predictions.
inline CheckResult check_finite_eps(const SolveParams& p, const ExteriorParams& ext,
                                    const FiniteEpsSettings& s = {}) {
  CheckResult res{"finite-eps expansion oracle"};
  const Grid2D grid = Grid2D::unit_square(s.cells);
  IntensityField f(grid);
  for (int iy = 0; iy < grid.ny(); ++iy)
    for (int ix = 0; ix < grid.nx(); ++ix)
      f.v[grid.node(ix, iy)] =
          std::sin(2.0 * M_PI * grid.x[ix]) * (grid.y[iy] * grid.y[iy] + 0.2 * grid.y[iy]);

  const InclusionShape shape = build_inclusion(s.ray_angles, kDefaultWidth);
  const GradedGrid gg = build_graded_grid(ext);
  const ExteriorSolver solver(gg, p);
  const PolarizationData pol = precompute_shape(shape, solver);

  SolveParams ps = p;
  ps.cg_max_iter = std::max(p.cg_max_iter, 400000);
  const EpsCheckReport rep = finite_eps_check(f, shape, pol, s.z, s.eps, ps, 3, s.threads);

  std::string d = "dJ=" + detail::fmtg(rep.dJ) + " d2J=" + detail::fmtg(rep.d2J);
  bool ok = true;
  std::vector<double> gap1, gap2;
  for (const EpsCheckRow& row : rep.rows) {
    gap1.push_back(std::abs(row.r1 - rep.dJ));
    gap2.push_back(std::abs(row.r2 - rep.d2J));
    d += "; eps=" + detail::fmtg(row.eps) + " r1=" + detail::fmtg(row.r1) +
         " r2=" + detail::fmtg(row.r2);
  }
  if (s.require_monotone) {
    for (std::size_t i = 1; i < gap1.size(); ++i)
      if (!(gap1[i] < gap1[i - 1])) ok = false;
    for (std::size_t i = 1; i < gap2.size(); ++i)
      if (!(gap2[i] < gap2[i - 1])) ok = false;
  }
  const double rel = gap1.back() / std::abs(rep.dJ);
  d += "; final r1 rel gap " + detail::fmtg(rel);
  if (!(rel < s.final_r1_rel_tol)) ok = false;
  res.pass = ok;
  res.detail = d;
  return res;
}

struct ValidateOptions {
  SolveParams solve;
  ExteriorParams ext;
  int threads = 0;
  bool quick = false;
};

/// The four numerical suites behind the `validate` subcommand. Returns true
/// when every suite passes.
inline bool run_validation(const ValidateOptions& o, std::ostream& out) {
  std::vector<CheckResult> results;
  results.push_back(check_disk_polarization(o.solve, o.ext));
  results.push_back(check_symmetry_nulls(o.solve, o.ext));
  results.push_back(check_manufactured_convergence(o.solve));
  FiniteEpsSettings fs;
  fs.threads = o.threads;
  if (o.quick) {
    fs.cells = 200;
    fs.eps = {0.4, 0.2, 0.1};
    fs.final_r1_rel_tol = 0.25;
    fs.require_monotone = false;
  }
  results.push_back(check_finite_eps(o.solve, o.ext, fs));

  bool all = true;
  for (const CheckResult& r : results) {
    out << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << "\n";
    if (!r.pass) all = false;
  }
  return all;
}

} // namespace tdv
