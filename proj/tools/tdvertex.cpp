// Command-line front end: scene rendering, polarization precompute,
// topological-derivative maps, shape ranking, and the validation suite.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tdv/detect.hpp"
#include "tdv/io.hpp"
#include "tdv/validate.hpp"

namespace {

struct CommonOpts {
  std::string scene_name = "cube";
  std::vector<double> intensities;
  std::string scene_file;
  double alpha = 8.0;
  double lambda_in = 0.05;
  double lambda_out = 1.0;
  double w = tdv::kDefaultWidth;
  double R = 30.0, h_f = 0.0125, L_f = 1.6, rho = 1.2;
  double cg_tol = 1e-10;
  int cg_max_iter = 20000;
  int margin = 3;
  int pixels = 100;
  int m = 8;
  std::vector<int> lines = {2, 3};
  int top = 0;
  int threads = 0;
  bool recompute = false;
  std::string out_dir = "out";
  std::string cache_dir = "cache";
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_scene) {
  if (with_scene) {
    cmd->add_option("--scene", o.scene_name,
                    "builtin scene name (cube, overlapping_cubes) or scene file path");
    cmd->add_option("--f", o.intensities, "comma-separated region intensities")->delimiter(',');
    cmd->add_option("--pixels", o.pixels, "image resolution per direction");
  }
  cmd->add_option("--alpha", o.alpha, "smoothing weight");
  cmd->add_option("--lambda-in", o.lambda_in, "edge diffusivity");
  cmd->add_option("--lambda-out", o.lambda_out, "non-edge diffusivity");
  cmd->add_option("--w", o.w, "inclusion arm width");
  cmd->add_option("--R", o.R, "truncation radius of the exterior problem");
  cmd->add_option("--hf", o.h_f, "fine spacing of the exterior grid");
  cmd->add_option("--Lf", o.L_f, "core box half-width of the exterior grid");
  cmd->add_option("--rho", o.rho, "grading growth factor");
  cmd->add_option("--cg-tol", o.cg_tol, "CG relative residual tolerance");
  cmd->add_option("--cg-max-iter", o.cg_max_iter, "CG iteration cap");
  cmd->add_option("--margin", o.margin, "masked pixel margin for derivative maps");
  cmd->add_option("--threads", o.threads, "shape-level worker threads (0: all cores)");
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--cache", o.cache_dir, "polarization cache directory");
  cmd->add_flag("--recompute", o.recompute, "recompute cache entries even if present");
}

tdv::SolveParams solve_params(const CommonOpts& o) {
  tdv::SolveParams p;
  p.alpha = o.alpha;
  p.lambda_in = o.lambda_in;
  p.lambda_out = o.lambda_out;
  p.cg_tol = o.cg_tol;
  p.cg_max_iter = o.cg_max_iter;
  p.validate();
  return p;
}

tdv::ExteriorParams exterior_params(const CommonOpts& o) {
  tdv::ExteriorParams e;
  e.R = o.R;
  e.h_f = o.h_f;
  e.L_f = o.L_f;
  e.rho = o.rho;
  e.validate(o.w);
  return e;
}

tdv::SceneSpec resolve_scene(const CommonOpts& o) {
  if (o.scene_name == "cube" || o.scene_name == "overlapping_cubes") {
    std::vector<double> f = o.intensities;
    if (f.empty()) f = o.scene_name == "cube" ? std::vector<double>{15, 10, 5, 0}
                                              : std::vector<double>{15, 5, 10, 30, 20, 25, 0};
    return tdv::builtin_scene(o.scene_name, f);
  }
  tdv::SceneSpec s = tdv::io::load_scene_file(o.scene_name);
  if (!o.intensities.empty()) {
    if (o.intensities.size() != s.intensities.size())
      throw tdv::ParameterError("--f length does not match the scene's region count");
    s.intensities = o.intensities;
  }
  return s;
}

nlohmann::json config_json(const CommonOpts& o, const std::string& subcommand) {
  nlohmann::json j;
  j["subcommand"] = subcommand;
  j["scene"] = o.scene_name;
  j["intensities"] = o.intensities;
  j["pixels"] = o.pixels;
  j["alpha"] = o.alpha;
  j["lambda_in"] = o.lambda_in;
  j["lambda_out"] = o.lambda_out;
  j["w"] = o.w;
  j["R"] = o.R;
  j["h_f"] = o.h_f;
  j["L_f"] = o.L_f;
  j["rho"] = o.rho;
  j["cg_tol"] = o.cg_tol;
  j["cg_max_iter"] = o.cg_max_iter;
  j["margin"] = o.margin;
  j["m"] = o.m;
  j["lines"] = o.lines;
  j["threads"] = o.threads;
  j["top"] = o.top;
  return j;
}

void write_sidecar(const std::filesystem::path& artifact, const nlohmann::json& cfg) {
  tdv::io::write_file(artifact.string() + ".meta.json", cfg.dump(2) + "\n");
}

int cmd_scene(const CommonOpts& o) {
  const tdv::SceneSpec spec = resolve_scene(o);
  const tdv::Grid2D grid = tdv::Grid2D::unit_square(o.pixels);
  const tdv::IntensityField f = tdv::rasterize(spec, grid);
  const std::filesystem::path out = std::filesystem::path(o.out_dir) / "scene.pgm";
  tdv::io::write_file(out, tdv::io::scalar_pgm(grid, f.v));
  write_sidecar(out, config_json(o, "scene"));
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_precompute(const CommonOpts& o) {
  tdv::DetectOptions d;
  d.solve = solve_params(o);
  d.ext = exterior_params(o);
  d.width = o.w;
  d.cache_dir = o.cache_dir;
  d.threads = o.threads;
  d.recompute = o.recompute;
  const tdv::ShapeSet theta = tdv::generate_theta(o.m, o.lines, o.w);
  const std::size_t computed = tdv::precompute_theta(theta, d);
  std::cout << "cache " << o.cache_dir << ": " << theta.shapes.size() << " shapes ("
            << computed << " computed, " << theta.shapes.size() - computed << " reused)\n";
  return 0;
}

int cmd_map(const CommonOpts& o, const std::string& shape_id) {
  const tdv::SolveParams p = solve_params(o);
  const tdv::ExteriorParams ext = exterior_params(o);
  const tdv::InclusionShape shape = tdv::build_inclusion(tdv::parse_shape_id(shape_id), o.w);

  const tdv::SceneSpec spec = resolve_scene(o);
  const tdv::Grid2D grid = tdv::Grid2D::unit_square(o.pixels);
  const tdv::IntensityField f = tdv::rasterize(spec, grid);
  const tdv::CoefficientField lam(grid, p.lambda_out);
  const tdv::ScalarField u = tdv::solve_state(f, p, lam, grid);
  const tdv::DerivativeFields derivs = tdv::extract_derivatives(u, grid, o.margin);

  tdv::DetectOptions d;
  d.solve = p;
  d.ext = ext;
  d.width = o.w;
  d.cache_dir = o.cache_dir;
  d.threads = o.threads;
  d.recompute = o.recompute;
  const tdv::GradedGrid gg = tdv::build_graded_grid(ext);
  const tdv::ExteriorSolver solver(gg, p);
  const tdv::PolarizationData pol = tdv::polarization_for(shape, solver, d);

  const tdv::TDMap td1 = tdv::eval_td1(derivs, pol, p);
  const tdv::TDMap td2 = tdv::eval_td2(derivs, pol, p);
  const std::filesystem::path dir(o.out_dir);
  const nlohmann::json cfg = config_json(o, "map --shape " + shape_id);
  for (const auto& [name, content] :
       {std::pair<std::string, std::string>{"td1.csv", tdv::io::tdmap_csv(td1)},
        {"td1.pgm", tdv::io::tdmap_pgm(td1)},
        {"td2.csv", tdv::io::tdmap_csv(td2)},
        {"td2.pgm", tdv::io::tdmap_pgm(td2)}}) {
    tdv::io::write_file(dir / name, content);
    write_sidecar(dir / name, cfg);
  }
  std::printf("td2 min %.6g at pixel (%d,%d) = (%.4g,%.4g)\n", td2.min_value, td2.argmin_i,
              td2.argmin_j, grid.x[td2.argmin_i], grid.y[td2.argmin_j]);
  std::cout << "wrote td1/td2 csv+pgm under " << o.out_dir << "\n";
  return 0;
}

int cmd_detect(const CommonOpts& o) {
  const tdv::SceneSpec spec = resolve_scene(o);
  const tdv::Grid2D grid = tdv::Grid2D::unit_square(o.pixels);
  const tdv::IntensityField f = tdv::rasterize(spec, grid);
  const tdv::ShapeSet theta = tdv::generate_theta(o.m, o.lines, o.w);

  tdv::DetectOptions d;
  d.solve = solve_params(o);
  d.ext = exterior_params(o);
  d.width = o.w;
  d.margin = o.margin;
  d.cache_dir = o.cache_dir;
  d.threads = o.threads;
  d.recompute = o.recompute;

  std::vector<tdv::RankingEntry> entries = tdv::run_detection(f, theta, d);
  tdv::label_positions(entries, spec, grid);

  const std::filesystem::path out = std::filesystem::path(o.out_dir) / "ranking.csv";
  tdv::io::write_file(out, tdv::io::ranking_csv(entries));
  write_sidecar(out, config_json(o, "detect"));

  const int n_show = o.top > 0 ? std::min<int>(o.top, entries.size()) : entries.size();
  std::printf("%4s  %12s  %-18s %9s  %s\n", "rank", "min d2J", "shape", "pixel", "label");
  for (int i = 0; i < n_show; ++i) {
    const tdv::RankingEntry& e = entries[i];
    std::printf("%4d  %12.4f  %-18s (%3d,%3d)  %s\n", e.rank, e.min_value, e.shape_id.c_str(),
                e.argmin_i, e.argmin_j, e.label.c_str());
  }
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-shot vertex detection via second-order topological derivatives"};
  app.require_subcommand(1);

  CommonOpts o;
  std::string shape_id = "w[0,90]";
  bool validate_quick = false;

  CLI::App* scene = app.add_subcommand("scene", "render a scene to 8-bit PGM");
  add_common(scene, o, true);
  CLI::App* pre = app.add_subcommand("precompute", "fill the polarization cache for a shape set");
  add_common(pre, o, false);
  pre->add_option("--m", o.m, "angular subdivisions of [0,360)");
  pre->add_option("--lines", o.lines, "line counts (subset of 2,3,4)")->delimiter(',');
  CLI::App* map = app.add_subcommand("map", "emit TD1/TD2 maps for one shape");
  add_common(map, o, true);
  map->add_option("--shape", shape_id, "shape id, e.g. w[0,90] or w[0,45,270]");
  CLI::App* detect = app.add_subcommand("detect", "rank all shapes of a set by min TD2");
  add_common(detect, o, true);
  detect->add_option("--m", o.m, "angular subdivisions of [0,360)");
  detect->add_option("--lines", o.lines, "line counts (subset of 2,3,4)")->delimiter(',');
  detect->add_option("--top", o.top, "print only the first N rows (CSV always full)");
  CLI::App* val = app.add_subcommand("validate", "run the numerical validation suites");
  add_common(val, o, false);
  val->add_flag("--quick", validate_quick, "reduced-size finite-eps suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (scene->parsed()) return cmd_scene(o);
    if (pre->parsed()) return cmd_precompute(o);
    if (map->parsed()) return cmd_map(o, shape_id);
    if (detect->parsed()) return cmd_detect(o);
    if (val->parsed()) {
      tdv::ValidateOptions vo;
      vo.solve = solve_params(o);
      vo.ext = exterior_params(o);
      vo.threads = o.threads;
      vo.quick = validate_quick;
      return tdv::run_validation(vo, std::cout) ? 0 : 2;
    }
  } catch (const tdv::SolverError& e) {
    std::cerr << "numerical failure: " << e.what() << " (residual " << e.final_residual
              << " after " << e.iterations << " iterations)\n";
    return 2;
  } catch (const tdv::StaleCacheError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
