#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "tdv/derivatives.hpp"
#include "tdv/errors.hpp"
#include "tdv/exterior.hpp"
#include "tdv/fem.hpp"
#include "tdv/inclusion.hpp"
#include "tdv/polarization.hpp"
#include "tdv/scene.hpp"
#include "tdv/tdmap.hpp"

namespace tdv {

/// One row of the shape ranking.
struct RankingEntry {
  int rank = 0;
  double min_value = 0.0;
  std::string shape_id;
  std::vector<double> angles_deg;
  int argmin_i = 0, argmin_j = 0;
  double x = 0.0, y = 0.0;
  std::string label = "\xE2\x80\x94"; // em dash: no label within radius
  double label_distance_px = -1.0;
  bool has_label = false;
};

struct DetectOptions {
  SolveParams solve;
  ExteriorParams ext;
  double width = kDefaultWidth;
  int margin = 3;
  std::filesystem::path cache_dir; // empty: no cache, always compute
  bool recompute = false;          // overwrite stale cache entries
  int threads = 0;                 // 0: hardware concurrency
};

/// Load the polarization data for one shape, recomputing (and storing) on a
/// cache miss. Stale entries are an error unless recompute is set.
inline PolarizationData polarization_for(const InclusionShape& shape, const ExteriorSolver& solver,
                                         const DetectOptions& opt) {
  if (!opt.cache_dir.empty() && !opt.recompute) {
    try {
      return cache_load(shape.id, shape.angles_deg, shape.width, opt.solve, opt.ext,
                        opt.cache_dir);
    } catch (const CacheMissError&) {
      // fall through to compute
    }
  }
  PolarizationData d = precompute_shape(shape, solver);
  if (!opt.cache_dir.empty()) cache_store(d, opt.cache_dir);
  return d;
}

namespace detail {

template <class Fn>
void parallel_for_shapes(std::size_t count, int threads, Fn&& fn) {
  int nthreads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::max(1, std::min<int>(nthreads, static_cast<int>(count)));
  if (nthreads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mtx;
  for (int t = 0; t < nthreads; ++t)
    pool.emplace_back([&] {
      try {
        for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mtx);
        if (!err) err = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

} // namespace detail

/// Fill the polarization cache for every shape in the set. Returns the
/// number of shapes computed (as opposed to loaded).
inline std::size_t precompute_theta(const ShapeSet& theta, const DetectOptions& opt) {
  if (theta.shapes.empty()) throw ParameterError("empty shape set");
  const GradedGrid gg = build_graded_grid(opt.ext);
  const ExteriorSolver solver(gg, opt.solve);
  std::atomic<std::size_t> computed{0};
  detail::parallel_for_shapes(theta.shapes.size(), opt.threads, [&](std::size_t i) {
    const InclusionShape& s = theta.shapes[i];
    if (!opt.cache_dir.empty() && !opt.recompute) {
      try {
        cache_load(s.id, s.angles_deg, s.width, opt.solve, opt.ext, opt.cache_dir);
        return;
      } catch (const CacheMissError&) {
      }
    }
    cache_store(precompute_shape(s, solver), opt.cache_dir);
    computed.fetch_add(1);
  });
  return computed.load();
}

/// The one-shot detection loop: one state solve, one second-order map per
/// shape, ranking by the global minimum (ties broken by shape id).
inline std::vector<RankingEntry> run_detection(const IntensityField& f, const ShapeSet& theta,
                                               const DetectOptions& opt) {
  if (theta.shapes.empty()) throw ParameterError("empty shape set");
  opt.solve.validate();

  const CoefficientField lam(f.grid, opt.solve.lambda_out);
  const ScalarField u = solve_state(f, opt.solve, lam, f.grid);
  const DerivativeFields derivs = extract_derivatives(u, f.grid, opt.margin);

  const GradedGrid gg = build_graded_grid(opt.ext);
  const ExteriorSolver solver(gg, opt.solve);

  std::vector<RankingEntry> entries(theta.shapes.size());
  detail::parallel_for_shapes(theta.shapes.size(), opt.threads, [&](std::size_t i) {
    const InclusionShape& s = theta.shapes[i];
    const PolarizationData pol = polarization_for(s, solver, opt);
    const TDMap map = eval_td2(derivs, pol, opt.solve);
    RankingEntry e;
    e.min_value = map.min_value;
    e.shape_id = s.id;
    e.angles_deg = s.angles_deg;
    e.argmin_i = map.argmin_i;
    e.argmin_j = map.argmin_j;
    e.x = f.grid.x[map.argmin_i];
    e.y = f.grid.y[map.argmin_j];
    entries[i] = e;
  });

  std::sort(entries.begin(), entries.end(), [](const RankingEntry& a, const RankingEntry& b) {
    if (a.min_value != b.min_value) return a.min_value < b.min_value;
    return a.shape_id < b.shape_id;
  });
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = static_cast<int>(i) + 1;
  return entries;
}

/// Annotate ranking entries with the nearest scene label within the given
/// pixel radius; edges are matched by point-to-segment distance.
inline void label_positions(std::vector<RankingEntry>& entries, const SceneSpec& scene,
                            const Grid2D& grid, double radius_px = 5.0) {
  const double hx = grid.hx(0), hy = grid.hy(0);
  auto to_px = [&](Vec2 p) -> Vec2 {
    return {(p.x - grid.x.front()) / hx, (p.y - grid.y.front()) / hy};
  };
  for (RankingEntry& e : entries) {
    const Vec2 q{static_cast<double>(e.argmin_i), static_cast<double>(e.argmin_j)};
    double best = radius_px;
    std::string best_name;
    bool found = false;
    for (const LabeledPoint& lp : scene.vertex_labels) {
      const double dist = norm(q - to_px(lp.pos));
      if (dist <= best) {
        best = dist;
        best_name = lp.name;
        found = true;
      }
    }
    for (const LabeledSegment& ls : scene.edge_labels) {
      const double dist = point_segment_distance(q, to_px(ls.a), to_px(ls.b));
      if (dist < best || (dist == best && !found)) {
        best = dist;
        best_name = ls.name;
        found = true;
      }
    }
    if (found) {
      e.label = best_name;
      e.label_distance_px = best;
      e.has_label = true;
    }
  }
}

} // namespace tdv
