#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "tdv/inclusion.hpp"
#include "test_support.hpp"

using namespace tdv;

namespace {

// Compare vertex lists as cyclic sequences.
void expect_cyclic_match(const Polygon& got, const Polygon& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  const std::size_t n = got.size();
  std::size_t best = 0;
  double bestdist = 1e300;
  for (std::size_t o = 0; o < n; ++o) {
    const double d = norm(got[o] - want[0]);
    if (d < bestdist) {
      bestdist = d;
      best = o;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_NEAR(got[(best + i) % n].x, want[i].x, tol) << "vertex " << i;
    EXPECT_NEAR(got[(best + i) % n].y, want[i].y, tol) << "vertex " << i;
  }
}

} // namespace

TEST(BuildInclusion, StraightStripIsRectangle) {
  const InclusionShape s = build_inclusion({0, 180}, 0.05);
  const Polygon want = {{1, -0.025}, {1, 0.025}, {-1, 0.025}, {-1, -0.025}};
  expect_cyclic_match(s.polygon, want, 0.0);
  const PolygonMoments m = polygon_moments(s.polygon);
  EXPECT_EQ(m.area, 0.1);
  EXPECT_EQ(m.centroid.x, 0.0);
  EXPECT_EQ(m.centroid.y, 0.0);
}

TEST(BuildInclusion, RightAngleHexagon) {
  const InclusionShape s = build_inclusion({0, 90}, 0.05);
  const Polygon want = {{1, -0.025},  {1, 0.025},  {0.025, 0.025},
                        {0.025, 1},   {-0.025, 1}, {-0.025, -0.025}};
  expect_cyclic_match(s.polygon, want, 1e-15);
  EXPECT_EQ(polygon_moments(s.polygon).area, 0.1);
  EXPECT_EQ(s.id, "w[0,90]");
}

TEST(BuildInclusion, TShapeContainment) {
  const InclusionShape s = build_inclusion({0, 90, 180}, 0.05);
  EXPECT_EQ(s.polygon.size(), 8u); // 3*3 rays minus one collinear merge
  EXPECT_TRUE(tdvtest::oracle_point_in_polygon({0.5, 0.0}, s.polygon));
  EXPECT_FALSE(tdvtest::oracle_point_in_polygon({0.5, 0.5}, s.polygon));
  EXPECT_TRUE(tdvtest::oracle_point_in_polygon({0.0, 0.5}, s.polygon));
}

TEST(BuildInclusion, InputNormalization) {
  const InclusionShape s = build_inclusion({270.0, 45.0 - 360.0}, 0.05);
  EXPECT_EQ(s.id, "w[45,270]");
  EXPECT_TRUE(std::is_sorted(s.angles_deg.begin(), s.angles_deg.end()));
}

TEST(BuildInclusion, Errors) {
  EXPECT_THROW(build_inclusion({0.0}, 0.05), ParameterError);
  EXPECT_THROW(build_inclusion({0, 45, 90, 135, 180}, 0.05), ParameterError);
  EXPECT_THROW(build_inclusion({0, 360}, 0.05), ParameterError); // duplicate mod 360
  EXPECT_THROW(build_inclusion({0, 5}, 0.05), GeometryError);    // gap below minimum
  EXPECT_THROW(build_inclusion({0, 90}, 0.0), ParameterError);
}

TEST(PolygonMomentsOracle, MonteCarloCrossCheck) {
  const InclusionShape s = build_inclusion({0, 90}, 0.05);
  const PolygonMoments m = polygon_moments(s.polygon);
  EXPECT_EQ(m.area, 0.1);

  std::mt19937 rng(20240915);
  std::uniform_real_distribution<double> ux(-0.025, 1.0), uy(-0.025, 1.0);
  const double box = 1.025 * 1.025;
  const int N = 1000000;
  long hits = 0;
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < N; ++i) {
    const Vec2 p{ux(rng), uy(rng)};
    if (tdvtest::oracle_point_in_polygon(p, s.polygon)) {
      ++hits;
      sx += p.x;
      sy += p.y;
    }
  }
  const double mc_area = box * hits / N;
  EXPECT_NEAR(mc_area, m.area, 1.5e-3);
  EXPECT_NEAR(sx / hits, m.centroid.x, 5e-3);
  EXPECT_NEAR(sy / hits, m.centroid.y, 5e-3);
}

TEST(GenerateTheta, Counts) {
  EXPECT_EQ(generate_theta(8, {2}).shapes.size(), 28u);
  EXPECT_EQ(generate_theta(8, {2, 3}).shapes.size(), 84u);
  const ShapeSet one = generate_theta(4, {4});
  ASSERT_EQ(one.shapes.size(), 1u);
  EXPECT_EQ(one.shapes[0].id, "w[0,90,180,270]");
  EXPECT_THROW(generate_theta(2, {2}), ParameterError);
  EXPECT_THROW(generate_theta(40, {2}), ParameterError); // 9 deg < minimum gap
  EXPECT_THROW(generate_theta(8, {5}), ParameterError);
}

TEST(GenerateTheta, ShapePropertiesHold) {
  const ShapeSet set = generate_theta(8, {2, 3});
  std::set<std::string> ids;
  for (const InclusionShape& s : set.shapes) {
    EXPECT_TRUE(ids.insert(s.id).second) << "duplicate id " << s.id;
    EXPECT_TRUE(std::is_sorted(s.angles_deg.begin(), s.angles_deg.end()));
    EXPECT_TRUE(polygon_is_simple(s.polygon)) << s.id;
    EXPECT_TRUE(point_in_polygon({0, 0}, s.polygon)) << s.id;
    const PolygonMoments m = polygon_moments(s.polygon);
    const double bound = s.angles_deg.size() * s.width + s.width * s.width;
    EXPECT_GT(m.area, 0.0) << s.id;
    EXPECT_LE(m.area, bound) << s.id;
  }
}

TEST(BuildInclusion, RotationCovariance) {
  const double delta = 25.0;
  const InclusionShape base = build_inclusion({0, 45, 160}, 0.05);
  const InclusionShape rot = build_inclusion({0 + delta, 45 + delta, 160 + delta}, 0.05);
  Polygon want(base.polygon.size());
  for (std::size_t i = 0; i < want.size(); ++i) want[i] = rotate_deg(delta, base.polygon[i]);
  expect_cyclic_match(rot.polygon, want, 1e-12);
}

TEST(BuildInclusion, CentralSymmetryGivesExactZeroCentroid) {
  for (const auto& angles : std::vector<std::vector<double>>{
           {0, 180}, {30, 210}, {0, 90, 180, 270}, {45, 135, 225, 315}}) {
    const InclusionShape s = build_inclusion(angles, 0.05);
    const PolygonMoments m = polygon_moments(s.polygon);
    EXPECT_EQ(m.centroid.x, 0.0) << s.id;
    EXPECT_EQ(m.centroid.y, 0.0) << s.id;
  }
}

TEST(ShapeId, Grammar) {
  EXPECT_EQ(shape_id_from_angles({0, 90}), "w[0,90]");
  EXPECT_EQ(shape_id_from_angles({0, 45, 270}), "w[0,45,270]");
  const std::vector<double> a = parse_shape_id("w[45,90,180]");
  ASSERT_EQ(a.size(), 3u);
  EXPECT_EQ(a[0], 45.0);
  EXPECT_EQ(a[2], 180.0);
  EXPECT_THROW(parse_shape_id("w[]"), ParameterError);
  EXPECT_THROW(parse_shape_id("x[0,90]"), ParameterError);
  EXPECT_THROW(parse_shape_id("w[0,,90]"), ParameterError);
  EXPECT_THROW(parse_shape_id("w[0,abc]"), ParameterError);
}

TEST(DiskShape, CentrallySymmetricApproximation) {
  const InclusionShape d = make_disk_shape(64);
  EXPECT_EQ(d.polygon.size(), 64u);
  EXPECT_TRUE(polygon_is_simple(d.polygon));
  const PolygonMoments m = polygon_moments(d.polygon);
  EXPECT_NEAR(m.area, M_PI, 0.02);
  EXPECT_EQ(m.centroid.x, 0.0);
  EXPECT_EQ(m.centroid.y, 0.0);
}
