#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "tdv/detect.hpp"
#include "tdv/errors.hpp"
#include "tdv/grid.hpp"
#include "tdv/scene.hpp"
#include "tdv/tdmap.hpp"

namespace tdv {
namespace io {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Node values as CSV, one line per grid row (y ascending), 17 significant
/// digits. Round-trips doubles exactly.
inline std::string scalar_csv(const Grid2D& g, const std::vector<double>& v) {
  std::string out;
  out.reserve(v.size() * 12);
  for (int iy = 0; iy < g.ny(); ++iy) {
    for (int ix = 0; ix < g.nx(); ++ix) {
      if (ix) out += ',';
      out += fmt17(v[g.node(ix, iy)]);
    }
    out += '\n';
  }
  return out;
}

/// 8-bit binary PGM, min-max scaled; constant fields map to 0. The top
/// image row is the largest y so the file views upright.
inline std::string scalar_pgm(const Grid2D& g, const std::vector<double>& v) {
  double lo = v[0], hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  const double span = hi - lo;
  std::string out = "P5\n" + std::to_string(g.nx()) + " " + std::to_string(g.ny()) + "\n255\n";
  out.reserve(out.size() + g.n_nodes());
  for (int iy = g.ny() - 1; iy >= 0; --iy)
    for (int ix = 0; ix < g.nx(); ++ix) {
      const double x = v[g.node(ix, iy)];
      const int px = span > 0 ? static_cast<int>(std::lround(255.0 * (x - lo) / span)) : 0;
      out += static_cast<char>(std::clamp(px, 0, 255));
    }
  return out;
}

/// PGM for TD maps: values are clipped at zero and the negative range is
/// min-max scaled, so the global minimum renders black. Masked margin
/// pixels render white.
inline std::string tdmap_pgm(const TDMap& m) {
  const Grid2D& g = m.grid;
  double lo = 0.0;
  for (int iy = m.margin; iy < g.ny() - m.margin; ++iy)
    for (int ix = m.margin; ix < g.nx() - m.margin; ++ix)
      lo = std::min(lo, m.values[g.node(ix, iy)]);
  std::string out = "P5\n" + std::to_string(g.nx()) + " " + std::to_string(g.ny()) + "\n255\n";
  for (int iy = g.ny() - 1; iy >= 0; --iy)
    for (int ix = 0; ix < g.nx(); ++ix) {
      int px = 255;
      if (m.valid(ix, iy) && lo < 0.0) {
        const double x = std::min(m.values[g.node(ix, iy)], 0.0);
        px = static_cast<int>(std::lround(255.0 * (x - lo) / (0.0 - lo)));
      }
      out += static_cast<char>(std::clamp(px, 0, 255));
    }
  return out;
}

/// TD map CSV; pixels inside the masked margin are written as nan.
inline std::string tdmap_csv(const TDMap& m) {
  const Grid2D& g = m.grid;
  std::string out;
  for (int iy = 0; iy < g.ny(); ++iy) {
    for (int ix = 0; ix < g.nx(); ++ix) {
      if (ix) out += ',';
      out += m.valid(ix, iy) ? fmt17(m.values[g.node(ix, iy)]) : std::string("nan");
    }
    out += '\n';
  }
  return out;
}

inline std::string ranking_csv(const std::vector<RankingEntry>& entries) {
  std::string out = "rank,min_value,angles,argmin_i,argmin_j,x,y,label,label_distance_px\n";
  for (const RankingEntry& e : entries) {
    out += std::to_string(e.rank);
    out += ',';
    out += fmt17(e.min_value);
    out += ",\"" + e.shape_id + "\",";
    out += std::to_string(e.argmin_i) + "," + std::to_string(e.argmin_j) + ",";
    out += fmt17(e.x) + "," + fmt17(e.y) + ",";
    out += e.label + ",";
    if (e.has_label) out += fmt17(e.label_distance_px);
    out += '\n';
  }
  return out;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

/// Scene document: {"regions":[{"id":..,"polygon":[[x,y],..]},..],
/// "intensities":[..], "background_id":..}. Labels are optional.
inline SceneSpec scene_from_json(const nlohmann::json& j) {
  SceneSpec s;
  for (const auto& rj : j.at("regions")) {
    Region r;
    r.id = rj.at("id").get<int>();
    for (const auto& pj : rj.at("polygon")) {
      if (!pj.is_array() || pj.size() != 2) throw ParameterError("polygon vertices must be [x,y]");
      r.polygon.push_back({pj[0].get<double>(), pj[1].get<double>()});
    }
    s.regions.push_back(std::move(r));
  }
  s.intensities = j.at("intensities").get<std::vector<double>>();
  s.background_id = j.at("background_id").get<int>();
  if (j.contains("vertex_labels"))
    for (const auto& lj : j.at("vertex_labels"))
      s.vertex_labels.push_back(
          {lj.at("name").get<std::string>(), {lj.at("x").get<double>(), lj.at("y").get<double>()}});
  s.validate();
  return s;
}

inline SceneSpec load_scene_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("cannot open scene file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParameterError("bad scene file " + path.string() + ": " + e.what());
  }
  return scene_from_json(j);
}

} // namespace io
} // namespace tdv
