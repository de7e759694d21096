#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "tdv/errors.hpp"
#include "tdv/exterior.hpp"
#include "tdv/inclusion.hpp"
#include "tdv/params.hpp"

namespace tdv {

using Mat2 = std::array<std::array<double, 2>, 2>;
using Mat42 = std::array<std::array<double, 2>, 4>;

/// Weak polarization matrices of an inclusion shape plus the geometric data
/// entering the second-order formula. vec() flattens 2x2 matrices row-major,
/// so the rows of the 4x2 blocks correspond to the index pairs
/// (1,1),(1,2),(2,1),(2,2).
struct PolarizationData {
  std::string shape_id;
  std::vector<double> angles_deg;
  double width = 0.0;
  double alpha = 0.0, lambda_in = 0.0, lambda_out = 0.0;
  ExteriorParams ext;
  Mat2 P1{};
  Mat42 P2{};
  Mat42 X{};
  double area = 0.0;
  Vec2 centroid;
  std::string hash;
};

namespace detail {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

} // namespace detail

/// Canonical parameter string and hash identifying one precompute setup.
inline std::string polarization_param_key(const std::string& shape_id,
                                          const std::vector<double>& angles, double w,
                                          const SolveParams& p, const ExteriorParams& ext) {
  std::string s = "id=" + shape_id + ";angles=";
  for (double a : angles) s += detail::fmt17(a) + ",";
  s += ";w=" + detail::fmt17(w);
  s += ";alpha=" + detail::fmt17(p.alpha);
  s += ";lin=" + detail::fmt17(p.lambda_in);
  s += ";lout=" + detail::fmt17(p.lambda_out);
  s += ";R=" + detail::fmt17(ext.R);
  s += ";hf=" + detail::fmt17(ext.h_f);
  s += ";Lf=" + detail::fmt17(ext.L_f);
  s += ";rho=" + detail::fmt17(ext.rho);
  return s;
}

inline std::string polarization_hash(const std::string& shape_id,
                                     const std::vector<double>& angles, double w,
                                     const SolveParams& p, const ExteriorParams& ext) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(
                    detail::fnv1a64(polarization_param_key(shape_id, angles, w, p, ext))));
  return buf;
}

/// P1 column k = mean of grad K_k over omega, P2 column k = mean of
/// vec(grad K_k (x) x), both with the theta-weighted element quadrature of
/// the corrector solve; |omega| and the centroid come from exact polygon
/// moments, and X = I_2 (x) centroid.
inline PolarizationData compute_polarization(const InclusionShape& shape,
                                             const CorrectorPair& correctors,
                                             const GradedGrid& gg, const SolveParams& p,
                                             const ExteriorParams& ext) {
  if (!correctors.k1.grid.same_as(gg.grid) || !correctors.k2.grid.same_as(gg.grid) ||
      !correctors.coeff.grid.same_as(gg.grid))
    throw ConsistencyError("corrector data and grid do not match");
  const PolygonMoments mom = polygon_moments(shape.polygon);

  PolarizationData d;
  d.shape_id = shape.id;
  d.angles_deg = shape.angles_deg;
  d.width = shape.width;
  d.alpha = p.alpha;
  d.lambda_in = p.lambda_in;
  d.lambda_out = p.lambda_out;
  d.ext = ext;
  d.area = mom.area;
  d.centroid = mom.centroid;
  d.X = {{{mom.centroid.x, 0.0}, {mom.centroid.y, 0.0}, {0.0, mom.centroid.x}, {0.0, mom.centroid.y}}};
  d.hash = polarization_hash(shape.id, shape.angles_deg, shape.width, p, ext);

  const Grid2D& g = gg.grid;
  const ScalarField* K[2] = {&correctors.k1, &correctors.k2};
  for (int k = 0; k < 2; ++k) {
    double m1 = 0.0, m2 = 0.0;          // int_omega grad K
    double q11 = 0, q12 = 0, q21 = 0, q22 = 0; // int_omega (grad K)_i x_j
    for (int ey = 0; ey < g.ey(); ++ey) {
      for (int ex = 0; ex < g.ex(); ++ex) {
        const double th = correctors.coeff.theta[g.elem(ex, ey)];
        if (th == 0.0) continue;
        const Vec2 gi = element_gradient_integral(g, *K[k], ex, ey);
        const Vec2 xc = g.elem_center(ex, ey);
        m1 += th * gi.x;
        m2 += th * gi.y;
        q11 += th * gi.x * xc.x;
        q12 += th * gi.x * xc.y;
        q21 += th * gi.y * xc.x;
        q22 += th * gi.y * xc.y;
      }
    }
    d.P1[0][k] = m1 / mom.area;
    d.P1[1][k] = m2 / mom.area;
    d.P2[0][k] = q11 / mom.area;
    d.P2[1][k] = q12 / mom.area;
    d.P2[2][k] = q21 / mom.area;
    d.P2[3][k] = q22 / mom.area;
  }
  return d;
}

/// Full precompute for one shape on a prepared solver.
inline PolarizationData precompute_shape(const InclusionShape& shape, const ExteriorSolver& solver) {
  const CoefficientField coeff = assign_inclusion_fractions(solver.grid(), shape, solver.params());
  const CorrectorPair pair = solver.solve_pair(coeff);
  return compute_polarization(shape, pair, solver.grid(), solver.params(), solver.grid().params);
}

namespace detail {

inline nlohmann::json pol_to_json(const PolarizationData& d) {
  nlohmann::json j;
  j["shape_id"] = d.shape_id;
  j["angles"] = d.angles_deg;
  j["w"] = d.width;
  j["alpha"] = d.alpha;
  j["lambda_in"] = d.lambda_in;
  j["lambda_out"] = d.lambda_out;
  j["R"] = d.ext.R;
  j["h_f"] = d.ext.h_f;
  j["L_f"] = d.ext.L_f;
  j["rho"] = d.ext.rho;
  j["P1"] = {d.P1[0][0], d.P1[0][1], d.P1[1][0], d.P1[1][1]};
  auto flat42 = [](const Mat42& m) {
    std::vector<double> v;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 2; ++c) v.push_back(m[r][c]);
    return v;
  };
  j["P2"] = flat42(d.P2);
  j["X"] = flat42(d.X);
  j["area"] = d.area;
  j["centroid"] = {d.centroid.x, d.centroid.y};
  j["hash"] = d.hash;
  return j;
}

inline PolarizationData pol_from_json(const nlohmann::json& j) {
  PolarizationData d;
  d.shape_id = j.at("shape_id").get<std::string>();
  d.angles_deg = j.at("angles").get<std::vector<double>>();
  d.width = j.at("w").get<double>();
  d.alpha = j.at("alpha").get<double>();
  d.lambda_in = j.at("lambda_in").get<double>();
  d.lambda_out = j.at("lambda_out").get<double>();
  d.ext.R = j.at("R").get<double>();
  d.ext.h_f = j.at("h_f").get<double>();
  d.ext.L_f = j.at("L_f").get<double>();
  d.ext.rho = j.at("rho").get<double>();
  const auto p1 = j.at("P1").get<std::vector<double>>();
  if (p1.size() != 4) throw StaleCacheError("cache entry has malformed P1");
  d.P1 = {{{p1[0], p1[1]}, {p1[2], p1[3]}}};
  auto read42 = [&](const char* key, Mat42& m) {
    const auto v = j.at(key).get<std::vector<double>>();
    if (v.size() != 8) throw StaleCacheError(std::string("cache entry has malformed ") + key);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 2; ++c) m[r][c] = v[2 * r + c];
  };
  read42("P2", d.P2);
  read42("X", d.X);
  d.area = j.at("area").get<double>();
  const auto cen = j.at("centroid").get<std::vector<double>>();
  d.centroid = {cen.at(0), cen.at(1)};
  d.hash = j.at("hash").get<std::string>();
  return d;
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

} // namespace detail

inline std::string cache_file_name(const std::string& shape_id, const std::string& hash) {
  return shape_id + "-" + hash.substr(0, 8) + ".pol.json";
}

/// Write one cache entry (atomic write-rename); returns the file path.
inline std::filesystem::path cache_store(const PolarizationData& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = dir / cache_file_name(d.shape_id, d.hash);
  detail::atomic_write(path, detail::pol_to_json(d).dump(2) + "\n");
  return path;
}

/// Load the entry for (shape id, params). A file under the expected hash is
/// verified against the requested parameters; entries for the same shape id
/// under a different hash raise StaleCacheError, no entry at all CacheMissError.
inline PolarizationData cache_load(const std::string& shape_id,
                                   const std::vector<double>& angles, double w,
                                   const SolveParams& p, const ExteriorParams& ext,
                                   const std::filesystem::path& dir) {
  const std::string hash = polarization_hash(shape_id, angles, w, p, ext);
  const std::filesystem::path path = dir / cache_file_name(shape_id, hash);
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      throw StaleCacheError("unreadable cache entry " + path.string() + ": " + e.what());
    }
    PolarizationData d = detail::pol_from_json(j);
    const std::string actual =
        polarization_hash(d.shape_id, d.angles_deg, d.width,
                          SolveParams{d.alpha, d.lambda_in, d.lambda_out},
                          d.ext);
    if (d.hash != hash || actual != hash)
      throw StaleCacheError("cache entry " + path.string() + " does not match requested parameters");
    return d;
  }
  // Any other entry for this shape id means the cache is stale for the
  // requested parameters.
  const std::string prefix = shape_id + "-";
  if (std::filesystem::is_directory(dir)) {
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      const std::string name = e.path().filename().string();
      if (name.rfind(prefix, 0) == 0 && name.size() > prefix.size() + 9 &&
          name.substr(name.size() - 9) == ".pol.json")
        throw StaleCacheError("cache holds entries for " + shape_id +
                              " computed under different parameters (use recompute)");
    }
  }
  throw CacheMissError("no cache entry for " + shape_id);
}

} // namespace tdv
