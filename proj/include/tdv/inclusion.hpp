#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "tdv/errors.hpp"
#include "tdv/geometry.hpp"

namespace tdv {

inline constexpr double kDefaultWidth = 0.05;
inline constexpr double kGapMinDeg = 10.0;
inline constexpr double kMiterLimit = 0.5;

/// Polygonal inclusion shape: the enlargement of a fan of unit rays by
/// width w. Synthetic shapes used as test oracles (e.g. polygonal disks)
/// carry an empty angle list.
struct InclusionShape {
  std::string id;
  std::vector<double> angles_deg; // sorted, in [0,360)
  double width = kDefaultWidth;
  Polygon polygon; // counterclockwise, origin strictly inside
};

inline std::string shape_id_from_angles(const std::vector<double>& angles) {
  std::string s = "w[";
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (i) s += ',';
    const double a = angles[i];
    if (a == std::floor(a)) {
      s += std::to_string(static_cast<long>(a));
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", a);
      s += buf;
    }
  }
  s += ']';
  return s;
}

/// Parse "w[a1,a2(,a3(,a4))]" back into an angle list.
inline std::vector<double> parse_shape_id(const std::string& id) {
  if (id.size() < 4 || id.substr(0, 2) != "w[" || id.back() != ']')
    throw ParameterError("malformed shape id '" + id + "'");
  std::vector<double> angles;
  std::string body = id.substr(2, id.size() - 3);
  std::size_t pos = 0;
  while (pos <= body.size()) {
    const std::size_t c = body.find(',', pos);
    const std::string tok = body.substr(pos, c == std::string::npos ? std::string::npos : c - pos);
    if (tok.empty()) throw ParameterError("malformed shape id '" + id + "'");
    try {
      angles.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ParameterError("malformed shape id '" + id + "'");
    }
    if (c == std::string::npos) break;
    pos = c + 1;
  }
  return angles;
}

/// Build the enlargement polygon of a ray fan. Every unit ray gets two
/// offset lines at distance w/2; ray ends get a flat cap; facing offsets of
/// angularly adjacent rays meet in a miter join (in front of the origin for
/// gaps < 180 deg, behind it for gaps > 180 deg, omitted at exactly 180 deg
/// where the offsets fuse into one edge). Vertices come out counterclockwise.
inline InclusionShape build_inclusion(std::vector<double> angles_deg, double w = kDefaultWidth) {
  if (angles_deg.size() < 2 || angles_deg.size() > 4)
    throw ParameterError("inclusion shape needs 2..4 ray angles");
  if (!(w > 0.0) || !(w < 1.0)) throw ParameterError("width must be in (0,1)");
  for (double& a : angles_deg) {
    a = std::fmod(a, 360.0);
    if (a < 0) a += 360.0;
  }
  std::sort(angles_deg.begin(), angles_deg.end());
  const std::size_t n = angles_deg.size();
  for (std::size_t i = 1; i < n; ++i)
    if (angles_deg[i] == angles_deg[i - 1])
      throw ParameterError("ray angles must be distinct mod 360");

  std::vector<double> gaps(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double next = (i + 1 < n) ? angles_deg[i + 1] : angles_deg[0] + 360.0;
    gaps[i] = next - angles_deg[i];
    if (gaps[i] < kGapMinDeg)
      throw GeometryError("angular gap " + std::to_string(gaps[i]) + " deg below minimum");
  }

  const double hw = 0.5 * w;
  Polygon poly;
  poly.reserve(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const double th = angles_deg[i];
    const Vec2 d = unit_dir_deg(th);
    const Vec2 nrm{-d.y, d.x};
    poly.push_back({d.x - hw * nrm.x, d.y - hw * nrm.y}); // cap, clockwise side
    poly.push_back({d.x + hw * nrm.x, d.y + hw * nrm.y}); // cap, counterclockwise side
    if (gaps[i] == 180.0) continue; // collinear offsets fuse, no join vertex
    // Join of this ray's ccw offset with the next ray's cw offset, expressed
    // in this ray's frame: (w/2) * (cot(gap/2), 1).
    const double half = 0.5 * gaps[i] * (M_PI / 180.0);
    const Vec2 local{hw * (std::cos(half) / std::sin(half)), hw};
    const Vec2 join = rotate_deg(th, local);
    if (norm(join) > kMiterLimit)
      throw GeometryError("miter join at distance " + std::to_string(norm(join)) +
                          " from origin exceeds limit");
    poly.push_back(join);
  }

  if (!polygon_is_simple(poly)) throw GeometryError("inclusion polygon self-intersects");
  if (!point_in_polygon({0.0, 0.0}, poly) || point_on_boundary({0.0, 0.0}, poly))
    throw GeometryError("origin is not strictly inside the inclusion polygon");

  InclusionShape s;
  s.angles_deg = std::move(angles_deg);
  s.width = w;
  s.id = shape_id_from_angles(s.angles_deg);
  s.polygon = std::move(poly);
  return s;
}

/// Wrap an explicit polygon (test oracles such as polygonal disks).
inline InclusionShape make_polygon_shape(const std::string& id, Polygon poly, double w = 0.0) {
  InclusionShape s;
  s.id = id;
  s.width = w;
  s.polygon = std::move(poly);
  return s;
}

/// Regular n-gon approximation of the unit disk with vertices rounded to
/// multiples of 2^-12 and the second half the exact negation of the first,
/// so its moments cancel exactly.
inline InclusionShape make_disk_shape(int n_vertices = 64) {
  if (n_vertices < 8 || n_vertices % 2 != 0)
    throw ParameterError("disk approximation needs an even vertex count >= 8");
  Polygon poly(n_vertices);
  const double q = 4096.0;
  for (int k = 0; k < n_vertices / 2; ++k) {
    const double a = 2.0 * M_PI * k / n_vertices;
    poly[k] = {std::round(std::cos(a) * q) / q, std::round(std::sin(a) * q) / q};
    poly[k + n_vertices / 2] = {-poly[k].x, -poly[k].y};
  }
  return make_polygon_shape("disk" + std::to_string(n_vertices), std::move(poly));
}

struct ShapeSet {
  std::vector<InclusionShape> shapes;
  int m = 0;
  std::vector<int> line_counts;
  double width = kDefaultWidth;
};

/// All strictly increasing angle combinations on the m-fold subdivision of
/// [0,360) for each requested line count. Degenerate combinations are
/// skipped with a note on stderr.
inline ShapeSet generate_theta(int m, std::vector<int> line_counts, double w = kDefaultWidth) {
  if (m < 3) throw ParameterError("need m >= 3 subdivisions");
  if (360.0 / m < kGapMinDeg) throw ParameterError("subdivision finer than the minimum gap");
  std::sort(line_counts.begin(), line_counts.end());
  for (int c : line_counts)
    if (c < 2 || c > 4) throw ParameterError("line counts must be within {2,3,4}");

  ShapeSet set;
  set.m = m;
  set.line_counts = line_counts;
  set.width = w;
  const double da = 360.0 / m;
  std::vector<int> idx;
  auto emit = [&](const std::vector<int>& comb) {
    std::vector<double> angles(comb.size());
    for (std::size_t i = 0; i < comb.size(); ++i) angles[i] = comb[i] * da;
    try {
      set.shapes.push_back(build_inclusion(angles, w));
    } catch (const GeometryError& e) {
      std::cerr << "skipping shape " << shape_id_from_angles(angles) << ": " << e.what() << "\n";
    }
  };
  for (int c : line_counts) {
    std::vector<int> comb(c);
    // iterate over all c-subsets of {0..m-1} in lexicographic order
    for (int i = 0; i < c; ++i) comb[i] = i;
    while (true) {
      emit(comb);
      int i = c - 1;
      while (i >= 0 && comb[i] == m - c + i) --i;
      if (i < 0) break;
      ++comb[i];
      for (int j = i + 1; j < c; ++j) comb[j] = comb[j - 1] + 1;
    }
  }
  return set;
}

} // namespace tdv
