#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "tdv/detect.hpp"
#include "tdv/polarization.hpp"
#include "test_support.hpp"

using namespace tdv;

namespace {

PolarizationData pol_for(const ExteriorSolver& solver, const std::vector<double>& angles) {
  return precompute_shape(build_inclusion(angles, kDefaultWidth), solver);
}

std::filesystem::path temp_dir(const char* tag) {
  auto p = std::filesystem::temp_directory_path() / (std::string("tdv_test_") + tag);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

} // namespace

TEST(Polarization, DiskOracle) {
  const ExteriorSolver& solver = tdvtest::default_solver();
  const PolarizationData pol = precompute_shape(make_disk_shape(64), solver);
  const SolveParams p = solver.params();
  const double expect = (p.lambda_out - p.lambda_in) / (p.lambda_out + p.lambda_in);
  EXPECT_NEAR(pol.P1[0][0], expect, 0.05 * expect);
  EXPECT_NEAR(pol.P1[1][1], expect, 0.05 * expect);
  EXPECT_LE(std::abs(pol.P1[0][1]), 0.02);
  EXPECT_LE(std::abs(pol.P1[1][0]), 0.02);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 2; ++c) {
      EXPECT_EQ(pol.X[r][c], 0.0);
      EXPECT_LE(std::abs(pol.P2[r][c]), 0.02);
    }
}

TEST(Polarization, EqualLambdasZeroMatricesButGeometricX) {
  SolveParams p;
  p.lambda_in = p.lambda_out;
  const GradedGrid gg = build_graded_grid(tdvtest::light_exterior());
  const ExteriorSolver solver(gg, p);
  const InclusionShape shape = build_inclusion({0, 90}, kDefaultWidth);
  const PolarizationData pol = precompute_shape(shape, solver);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) EXPECT_EQ(pol.P1[r][c], 0.0);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 2; ++c) EXPECT_EQ(pol.P2[r][c], 0.0);
  const PolygonMoments m = polygon_moments(shape.polygon);
  EXPECT_EQ(pol.X[0][0], m.centroid.x);
  EXPECT_EQ(pol.X[1][0], m.centroid.y);
  EXPECT_EQ(pol.X[2][1], m.centroid.x);
  EXPECT_EQ(pol.X[3][1], m.centroid.y);
  EXPECT_NE(m.centroid.x, 0.0);
}

TEST(Polarization, StraightStripSymmetryNulls) {
  const PolarizationData pol = pol_for(tdvtest::light_solver(), {0, 180});
  EXPECT_EQ(pol.centroid.x, 0.0);
  EXPECT_EQ(pol.centroid.y, 0.0);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 2; ++c) {
      EXPECT_EQ(pol.X[r][c], 0.0);
      EXPECT_LE(std::abs(pol.P2[r][c]), 0.02);
    }
}

TEST(Polarization, ReflectionSymmetryClearsOffdiagonals) {
  for (const auto& angles : std::vector<std::vector<double>>{{90, 270}, {0, 120, 240}}) {
    const PolarizationData pol = pol_for(tdvtest::light_solver(), angles);
    EXPECT_LE(std::abs(pol.P1[0][1]), 0.02) << shape_id_from_angles(angles);
    EXPECT_LE(std::abs(pol.P1[1][0]), 0.02) << shape_id_from_angles(angles);
  }
}

TEST(Polarization, VecConventionIdentity) {
  // vec(H)^T (I2 (x) m) g must equal g^T H m for symmetric H, term by term.
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const double h11 = u(rng), h12 = u(rng), h22 = u(rng);
    const Vec2 g{u(rng), u(rng)};
    const Vec2 m{u(rng), u(rng)};
    const Mat42 X = {{{m.x, 0.0}, {m.y, 0.0}, {0.0, m.x}, {0.0, m.y}}};
    const double vecH[4] = {h11, h12, h12, h22};
    double lhs = 0.0;
    for (int r = 0; r < 4; ++r) lhs += vecH[r] * (X[r][0] * g.x + X[r][1] * g.y);
    // g^T H m with the same product and summation order (i,j) row-major
    double rhs = 0.0;
    rhs += h11 * (m.x * g.x + 0.0 * g.x);
    rhs += h12 * (m.y * g.x + 0.0 * g.x);
    rhs += h12 * (0.0 * g.y + m.x * g.y);
    rhs += h22 * (0.0 * g.y + m.y * g.y);
    EXPECT_EQ(lhs, rhs);
  }
}

TEST(Polarization, RefinementStability) {
  SolveParams p;
  const InclusionShape shape = build_inclusion({0, 90}, kDefaultWidth);
  Mat2 p1[2];
  int idx = 0;
  for (double hf : {0.025, 0.0125}) {
    ExteriorParams pe;
    pe.R = 15.0;
    pe.h_f = hf;
    const GradedGrid gg = build_graded_grid(pe);
    const ExteriorSolver solver(gg, p);
    p1[idx++] = precompute_shape(shape, solver).P1;
  }
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      const double scale = std::max(std::abs(p1[1][r][c]), 0.05);
      EXPECT_NEAR(p1[0][r][c], p1[1][r][c], 0.02 * scale) << r << c;
    }
}

TEST(PolarizationCache, RoundTripIsLossless) {
  const auto dir = temp_dir("cache_rt");
  const ExteriorSolver& solver = tdvtest::light_solver();
  const PolarizationData d = pol_for(solver, {0, 45, 270});
  const auto path = cache_store(d, dir);
  EXPECT_TRUE(std::filesystem::exists(path));
  const PolarizationData l = cache_load(d.shape_id, d.angles_deg, d.width, solver.params(),
                                        solver.grid().params, dir);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) EXPECT_EQ(l.P1[r][c], d.P1[r][c]);
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 2; ++c) {
      EXPECT_EQ(l.P2[r][c], d.P2[r][c]);
      EXPECT_EQ(l.X[r][c], d.X[r][c]);
    }
  EXPECT_EQ(l.area, d.area);
  EXPECT_EQ(l.centroid.x, d.centroid.x);
  EXPECT_EQ(l.hash, d.hash);
}

TEST(PolarizationCache, StaleAndMissingEntries) {
  const auto dir = temp_dir("cache_stale");
  const ExteriorSolver& solver = tdvtest::light_solver();
  const PolarizationData d = pol_for(solver, {0, 90});
  EXPECT_THROW(cache_load(d.shape_id, d.angles_deg, d.width, solver.params(),
                          solver.grid().params, dir),
               CacheMissError);
  cache_store(d, dir);
  SolveParams changed = solver.params();
  changed.lambda_in = 0.07;
  EXPECT_THROW(cache_load(d.shape_id, d.angles_deg, d.width, changed, solver.grid().params, dir),
               StaleCacheError);
  EXPECT_NO_THROW(cache_load(d.shape_id, d.angles_deg, d.width, solver.params(),
                             solver.grid().params, dir));
}

TEST(PolarizationCache, PrecomputeFillsOneFilePerShape) {
  const auto dir = temp_dir("cache_fill");
  DetectOptions opt;
  opt.ext = tdvtest::light_exterior();
  opt.cache_dir = dir;
  const ShapeSet theta = generate_theta(5, {2});
  ASSERT_EQ(theta.shapes.size(), 10u);
  const std::size_t computed = precompute_theta(theta, opt);
  EXPECT_EQ(computed, 10u);
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.path().extension() == ".json") ++files;
  EXPECT_EQ(files, 10u);
  // second run reuses every entry
  EXPECT_EQ(precompute_theta(theta, opt), 0u);
}
