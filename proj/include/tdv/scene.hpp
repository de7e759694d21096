#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "tdv/errors.hpp"
#include "tdv/geometry.hpp"
#include "tdv/grid.hpp"

namespace tdv {

struct Region {
  int id = 0; // region index 1..n_regions; several polygons may share an id
  Polygon polygon;
};

struct LabeledPoint {
  std::string name;
  Vec2 pos;
};

struct LabeledSegment {
  std::string name;
  Vec2 a, b;
};

/// Piecewise-constant synthetic image: region polygons plus one intensity
/// per region index; the background region covers the rest of [0,1]^2.
struct SceneSpec {
  std::vector<Region> regions;
  std::vector<double> intensities; // intensities[i-1] belongs to region id i
  int background_id = 0;
  std::vector<LabeledPoint> vertex_labels;  // for reports and tests
  std::vector<LabeledSegment> edge_labels;

  int n_regions() const { return static_cast<int>(intensities.size()); }

  void validate() const {
    const int nr = n_regions();
    if (nr < 1) throw ParameterError("scene needs at least one region intensity");
    if (background_id < 1 || background_id > nr)
      throw ParameterError("background_id out of range");
    for (const Region& r : regions) {
      if (r.id < 1 || r.id > nr) throw ParameterError("region id out of range");
      if (r.polygon.size() < 3) throw GeometryError("region polygon needs >= 3 vertices");
      if (!polygon_is_simple(r.polygon)) throw GeometryError("region polygon is not simple");
    }
  }
};

/// Region index at a point: lowest id whose polygon closure contains it,
/// else the background. Boundary nodes therefore resolve ties towards the
/// lowest region index.
inline int region_at(const SceneSpec& spec, Vec2 p) {
  int best = spec.background_id;
  bool found = false;
  for (const Region& r : spec.regions) {
    if (found && r.id >= best) continue;
    if (point_in_closure(p, r.polygon)) {
      best = found ? std::min(best, r.id) : r.id;
      found = true;
    }
  }
  return best;
}

inline IntensityField rasterize(const SceneSpec& spec, const Grid2D& grid) {
  spec.validate();
  grid.validate();
  IntensityField f(grid);
  for (int iy = 0; iy < grid.ny(); ++iy)
    for (int ix = 0; ix < grid.nx(); ++ix)
      f.v[grid.node(ix, iy)] = spec.intensities[region_at(spec, grid.node_pos(ix, iy)) - 1];
  return f;
}

namespace scenes {

/// Cube drawn in oblique projection: front face R1, top face R2, right face
/// R3, background R4. Corners A,C,F are two-line corners, B,D,G three-line
/// arrows, E a three-line fork; all edge directions are multiples of 45 deg.
inline SceneSpec cube(const std::vector<double>& intensities) {
  if (intensities.size() != 4)
    throw ParameterError("cube scene needs 4 intensities, got " +
                         std::to_string(intensities.size()));
  const Vec2 A{0.25, 0.15}, G{0.65, 0.15}, B{0.25, 0.55}, E{0.65, 0.55};
  const Vec2 C{0.45, 0.75}, D{0.85, 0.75}, F{0.85, 0.35};
  SceneSpec s;
  s.regions = {
      {1, {A, G, E, B}},
      {2, {B, E, D, C}},
      {3, {G, F, D, E}},
  };
  s.intensities = intensities;
  s.background_id = 4;
  s.vertex_labels = {{"A", A}, {"B", B}, {"C", C}, {"D", D}, {"E", E}, {"F", F}, {"G", G}};
  s.edge_labels = {{"(AB)", A, B}, {"(AG)", A, G}, {"(BE)", B, E}, {"(EG)", E, G},
                   {"(BC)", B, C}, {"(CD)", C, D}, {"(DE)", D, E}, {"(DF)", D, F},
                   {"(FG)", F, G}};
  return s;
}

/// Small cube occluding a vertical bar, both in oblique projection with
/// depth offset (+0.15,+0.15). Regions: R1 cube front, R2 cube top, R3 cube
/// right, R4 bar front, R5 bar top, R6 bar right, R7 background. The bar
/// regions are clipped to their visible parts so region interiors stay
/// disjoint. T1..T4 are the four visible triple junctions.
inline SceneSpec overlapping_cubes(const std::vector<double>& intensities) {
  if (intensities.size() != 7)
    throw ParameterError("overlapping_cubes scene needs 7 intensities, got " +
                         std::to_string(intensities.size()));
  SceneSpec s;
  // Cube: front face [0.15,0.45]x[0.20,0.50].
  s.regions.push_back({1, {{0.15, 0.20}, {0.45, 0.20}, {0.45, 0.50}, {0.15, 0.50}}});
  s.regions.push_back({2, {{0.15, 0.50}, {0.45, 0.50}, {0.60, 0.65}, {0.30, 0.65}}});
  s.regions.push_back({3, {{0.45, 0.20}, {0.60, 0.35}, {0.60, 0.65}, {0.45, 0.50}}});
  // Bar: front face [0.40,0.55]x[0.12,0.90], behind the cube. Visible parts
  // of the front face are the strips below and above the cube silhouette.
  s.regions.push_back({4, {{0.40, 0.12}, {0.55, 0.12}, {0.55, 0.30}, {0.45, 0.20}, {0.40, 0.20}}});
  s.regions.push_back({4, {{0.40, 0.65}, {0.55, 0.65}, {0.55, 0.90}, {0.40, 0.90}}});
  // Bar top face, clipped at the image boundary y = 1.
  s.regions.push_back({5, {{0.40, 0.90}, {0.55, 0.90}, {0.65, 1.00}, {0.50, 1.00}}});
  // Bar right face minus the cube notch, clipped at y = 1.
  s.regions.push_back({6,
                       {{0.55, 0.12},
                        {0.70, 0.27},
                        {0.70, 1.00},
                        {0.65, 1.00},
                        {0.55, 0.90},
                        {0.55, 0.65},
                        {0.60, 0.65},
                        {0.60, 0.35},
                        {0.55, 0.30}}});
  s.intensities = intensities;
  s.background_id = 7;
  s.vertex_labels = {{"T1", {0.40, 0.65}},
                     {"T2", {0.55, 0.65}},
                     {"T3", {0.40, 0.20}},
                     {"T4", {0.55, 0.30}}};
  return s;
}

} // namespace scenes

inline SceneSpec builtin_scene(const std::string& name, const std::vector<double>& intensities) {
  if (name == "cube") return scenes::cube(intensities);
  if (name == "overlapping_cubes") return scenes::overlapping_cubes(intensities);
  throw ParameterError("unknown builtin scene '" + name + "'");
}

} // namespace tdv
