#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "tdv/errors.hpp"

namespace tdv {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Closed polygon as an ordered vertex list (no repeated end vertex).
using Polygon = std::vector<Vec2>;

namespace detail {

inline void two_sum(double a, double b, double& s, double& err) {
  s = a + b;
  const double bv = s - a;
  const double av = s - bv;
  err = (a - av) + (b - bv);
}

inline void two_prod(double a, double b, double& p, double& err) {
  p = a * b;
  err = std::fma(a, b, -p);
}

/// Error-free accumulator for sums of double products. Represents the
/// running sum exactly as a multi-component expansion, so structurally
/// cancelling contributions (e.g. moments of centrally symmetric polygons)
/// come out as exact zero, independent of summation order.
class ExactSum {
public:
  void add(double b) {
    if (b == 0.0) return;
    double q = b;
    std::size_t out = 0;
    for (std::size_t i = 0; i < comp_.size(); ++i) {
      double s, err;
      two_sum(q, comp_[i], s, err);
      q = s;
      if (err != 0.0) comp_[out++] = err;
    }
    comp_.resize(out);
    if (q != 0.0) comp_.push_back(q);
  }

  void add_prod(double a, double b) {
    double p, err;
    two_prod(a, b, p, err);
    add(err);
    add(p);
  }

  void add_triple_prod(double a, double b, double c) {
    double p, err;
    two_prod(a, b, p, err);
    add_prod(p, c);
    add_prod(err, c);
  }

  double value() const {
    double s = 0.0;
    for (double c : comp_) s += c;
    return s;
  }

private:
  std::vector<double> comp_;
};

} // namespace detail

struct PolygonMoments {
  double area = 0.0;
  Vec2 centroid;
};

/// Exact shoelace area and first-moment centroid of a simple CCW polygon.
/// The sums are evaluated in error-free expansion arithmetic, so the result
/// is the correctly rounded exact value for the given vertex doubles.
inline PolygonMoments polygon_moments(const Polygon& poly) {
  if (poly.size() < 3) throw GeometryError("polygon needs at least 3 vertices");
  detail::ExactSum a2, mx6, my6;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 p = poly[i];
    const Vec2 q = poly[(i + 1) % n];
    // cross = p.x*q.y - p.y*q.x
    a2.add_prod(p.x, q.y);
    a2.add_prod(-p.y, q.x);
    // (p.x + q.x) * cross, expanded into exact triple products
    mx6.add_triple_prod(p.x, p.x, q.y);
    mx6.add_triple_prod(-p.x, p.y, q.x);
    mx6.add_triple_prod(q.x, p.x, q.y);
    mx6.add_triple_prod(-q.x, p.y, q.x);
    // (p.y + q.y) * cross
    my6.add_triple_prod(p.y, p.x, q.y);
    my6.add_triple_prod(-p.y, p.y, q.x);
    my6.add_triple_prod(q.y, p.x, q.y);
    my6.add_triple_prod(-q.y, p.y, q.x);
  }
  const double two_area = a2.value();
  if (!(two_area > 0.0))
    throw GeometryError("polygon has non-positive area (wrong orientation or degenerate)");
  PolygonMoments m;
  m.area = 0.5 * two_area;
  m.centroid = {mx6.value() / (3.0 * two_area), my6.value() / (3.0 * two_area)};
  return m;
}

/// Even-odd crossing test, half-open in y: points on a lower boundary count
/// as inside, on an upper boundary as outside. Deterministic for points that
/// fall exactly on horizontal edges.
inline bool point_in_polygon(Vec2 p, const Polygon& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % n];
    if ((a.y <= p.y) != (b.y <= p.y)) {
      const double t = (p.y - a.y) / (b.y - a.y);
      const double xx = a.x + t * (b.x - a.x);
      if (p.x < xx) inside = !inside;
    }
  }
  return inside;
}

/// True if p lies on the polygon boundary (within a small relative tolerance).
inline bool point_on_boundary(Vec2 p, const Polygon& poly, double tol = 1e-12) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % n];
    const Vec2 ab = b - a;
    const Vec2 ap = p - a;
    const double len2 = dot(ab, ab);
    if (len2 == 0.0) continue;
    const double c = cross(ab, ap);
    if (c * c > tol * tol * len2 * std::max(dot(ap, ap), 1e-300)) continue;
    const double t = dot(ap, ab);
    if (t >= -tol * len2 && t <= (1.0 + tol) * len2) return true;
  }
  return false;
}

/// Boundary-inclusive membership.
inline bool point_in_closure(Vec2 p, const Polygon& poly) {
  return point_on_boundary(p, poly) || point_in_polygon(p, poly);
}

namespace detail {

inline double orient(Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); }

inline bool on_segment_collinear(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

inline bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0)))
    return true;
  if (d1 == 0 && on_segment_collinear(q1, q2, p1)) return true;
  if (d2 == 0 && on_segment_collinear(q1, q2, p2)) return true;
  if (d3 == 0 && on_segment_collinear(p1, p2, q1)) return true;
  if (d4 == 0 && on_segment_collinear(p1, p2, q2)) return true;
  return false;
}

} // namespace detail

/// Simplicity check: no two non-adjacent edges may touch or cross. O(n^2),
/// intended for the small polygons handled here.
inline bool polygon_is_simple(const Polygon& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (detail::segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
        return false;
    }
  }
  return true;
}

/// Distance from point p to segment [a,b].
inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return norm(p - a);
  double t = dot(p - a, ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (a + t * ab));
}

/// Direction of a ray given in degrees, with the angle reduced to its
/// quadrant before evaluating cos/sin. Angles that differ by an exact
/// multiple of 90 degrees then map to exact coordinate rotations of each
/// other, so e.g. dir(a+180) == -dir(a) bit for bit.
inline Vec2 unit_dir_deg(double angle_deg) {
  double a = std::fmod(angle_deg, 360.0);
  if (a < 0) a += 360.0;
  int q = static_cast<int>(a / 90.0);
  double r = a - 90.0 * q;
  if (q == 4) { q = 0; r = 0.0; } // a == 360 after fmod rounding
  const double rad = r * (M_PI / 180.0);
  Vec2 d{std::cos(rad), std::sin(rad)};
  if (r == 0.0) d = {1.0, 0.0};
  for (int k = 0; k < q; ++k) d = {-d.y, d.x};
  return d;
}

/// Rotation of v by the given angle, with the same quadrant reduction as
/// unit_dir_deg.
inline Vec2 rotate_deg(double angle_deg, Vec2 v) {
  double a = std::fmod(angle_deg, 360.0);
  if (a < 0) a += 360.0;
  int q = static_cast<int>(a / 90.0);
  double r = a - 90.0 * q;
  if (q == 4) { q = 0; r = 0.0; }
  Vec2 w = v;
  if (r != 0.0) {
    const double rad = r * (M_PI / 180.0);
    const double c = std::cos(rad), s = std::sin(rad);
    w = {c * v.x - s * v.y, s * v.x + c * v.y};
  }
  for (int k = 0; k < q; ++k) w = {-w.y, w.x};
  return w;
}

} // namespace tdv
