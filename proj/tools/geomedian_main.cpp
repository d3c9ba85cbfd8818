#include <CLI11.hpp>

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <geomedian/errors.hpp>
#include <geomedian/estimators.hpp>
#include <geomedian/io.hpp>
#include <geomedian/manifold.hpp>
#include <geomedian/measure.hpp>
#include <geomedian/radar.hpp>
#include <geomedian/robustness.hpp>
#include <geomedian/rng.hpp>
#include <geomedian/svg.hpp>
#include <geomedian/toeplitz.hpp>

namespace {

using namespace geomedian;
namespace fs = std::filesystem;

/// Everything the subcommands read; CLI11 binds flags straight into it.
struct RunConfig {
  // shared
  std::string manifold_spec = "euclidean:2";
  std::string input;
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool svg_plots = false;

  // solver
  double p = 2.0;
  std::size_t steps = 2000;
  double step = 0.0;  // 0 picks a per-command default
  double tol = 1e-8;

  // radar
  std::size_t order = 8;
  std::size_t window = 15;
  bool exclude_center = true;
  std::string filter = "median";
  std::string threshold = "quantile:0.99";
  std::size_t n_freq = 64;

  // bounds
  double alpha = 1.0;
  double rho = 1.0;
  double delta = 0.0;
  double inj = kInf;
};

std::string fmt6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw parse_error("cannot create output directory '" + dir + "': " + ec.message());
}

io::json load_json_file(const std::string& path) {
  try {
    return io::json::parse(io::read_text_file(path));
  } catch (const io::json::exception& e) {
    throw parse_error("'" + path + "': " + e.what());
  }
}

DiscreteMeasure load_measure(const std::string& path, const ManifoldDescriptor& m) {
  if (fs::path(path).extension() == ".json") return io::measure_from_json(load_json_file(path), m);
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open '" + path + "'");
  return io::read_measure_csv(in, m);
}

radar::ThresholdPolicy parse_threshold(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw parse_error("threshold spec needs kind:value, e.g. quantile:0.99");
  const std::string kind = spec.substr(0, colon);
  const double value = io::detail::parse_double(spec.substr(colon + 1));
  if (kind == "fixed") return radar::ThresholdPolicy::fixed(value);
  if (kind == "quantile") return radar::ThresholdPolicy::quantile(value);
  if (kind == "mad" || kind == "median_mad") return radar::ThresholdPolicy::median_mad(value);
  throw parse_error("unknown threshold kind '" + kind + "' (fixed, quantile, mad)");
}

radar::FilterKind parse_filter(const std::string& name) {
  if (name == "median") return radar::FilterKind::median;
  if (name == "barycenter") return radar::FilterKind::barycenter;
  throw parse_error("unknown filter '" + name + "' (median, barycenter)");
}

// ---------------------------------------------------------------------------
// solve

int run_solve(const RunConfig& cfg, const std::string& mode) {
  const auto m = io::parse_manifold(cfg.manifold_spec);
  const auto mu = load_measure(cfg.input, m);
  ensure_out_dir(cfg.out_dir);

  const auto center = mu.points[medoid_index(m, mu)];
  const auto [lo, hi] = default_curvature_bounds(m);
  const auto ctx = make_ball_context(m, center, support_radius(m, mu, center) + 1.0, mu, lo, hi);

  SolverOptions opts;
  opts.max_iterations = cfg.steps;
  opts.tolerance = cfg.tol;
  opts.record_iterates = true;

  SolverResult res{center, {}};
  double residual = 0.0;
  if (mode == "median") {
    const double delta_step = cfg.step > 0.0 ? cfg.step : 0.5;
    res = solve_median_subgradient(m, mu, ctx, StepSchedule::harmonic(delta_step, step_cap_T(ctx)),
                                   opts);
    residual = characterization_residual(m, mu, res.point);
  } else if (mode == "pmean") {
    const double t = cfg.step > 0.0 ? cfg.step : 0.2;
    res = solve_pmean_gradient(m, mu, ctx, cfg.p,
                               StepSchedule::custom(std::vector<double>(cfg.steps, t)), opts);
    residual = res.trace.final_residual;
  } else {
    const double delta_step = cfg.step > 0.0 ? cfg.step : 0.5;
    res = solve_pmean_stochastic(m, mu, ctx, cfg.p,
                                 StepSchedule::harmonic(delta_step, stochastic_step_cap(ctx, cfg.p)),
                                 center, cfg.seed, opts);
    residual = res.trace.final_residual;
  }

  {
    std::ofstream out(join_path(cfg.out_dir, "result.csv"));
    io::write_point_csv(out, res.point);
  }
  {
    std::ofstream out(join_path(cfg.out_dir, "trace.csv"));
    io::write_trace_csv(out, res.trace);
  }

  std::cout << "solve " << mode << " on " << cfg.manifold_spec << " (" << mu.size() << " atoms)\n"
            << "termination: " << to_string(res.trace.termination) << " ("
            << res.trace.iterations << " iterations)\n"
            << "cost: " << io::detail::format_double(res.trace.final_cost) << '\n'
            << "characterization residual: " << io::detail::format_double(residual) << '\n'
            << "result:";
  for (double c : res.point.coords) std::cout << ' ' << io::detail::format_double(c);
  std::cout << "\nwrote " << join_path(cfg.out_dir, "result.csv") << ", "
            << join_path(cfg.out_dir, "trace.csv") << '\n';

  const bool stalled =
      res.trace.termination == Termination::max_iterations && residual > cfg.tol;
  if (mode != "stochastic" && stalled) {
    std::cerr << "warning: solver hit the iteration limit with residual "
              << io::detail::format_double(residual) << " > tol\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// radar

radar::SceneConfig resolve_scene(const RunConfig& cfg, bool seed_given) {
  radar::SceneConfig scene = cfg.config_path.empty()
                                 ? radar::default_two_target_scene()
                                 : io::scene_from_json(load_json_file(cfg.config_path));
  if (seed_given) scene.seed = cfg.seed;
  return scene;
}

int run_radar_simulate(const RunConfig& cfg, bool seed_given) {
  const auto scene = resolve_scene(cfg, seed_given);
  const auto cube = radar::simulate_scene(scene);
  ensure_out_dir(cfg.out_dir);
  {
    std::ofstream out(join_path(cfg.out_dir, "cube.csv"));
    io::write_pulse_cube_csv(out, cube);
  }
  io::write_text_file(join_path(cfg.out_dir, "scene.json"), io::scene_to_json(scene).dump(2) + "\n");
  std::cout << "simulated " << scene.n_cells << " cells x " << scene.pulses << " pulses ("
            << scene.targets.size() << " targets, seed " << scene.seed << ")\n"
            << "wrote " << join_path(cfg.out_dir, "cube.csv") << ", "
            << join_path(cfg.out_dir, "scene.json") << '\n';
  return 0;
}

/// Shared front half of detect/spectra: produce the cell field either from a
/// recorded cube or by simulating the configured scene.
radar::CellField resolve_field(const RunConfig& cfg, bool seed_given, bool order_given) {
  radar::PulseMatrix cube;
  std::size_t order = cfg.order;
  if (!cfg.input.empty()) {
    std::ifstream in(cfg.input);
    if (!in) throw parse_error("cannot open '" + cfg.input + "'");
    cube = io::read_pulse_cube_csv(in);
  } else {
    const auto scene = resolve_scene(cfg, seed_given);
    cube = radar::simulate_scene(scene);
    if (!order_given) order = scene.model_order;
  }
  return radar::estimate_cells(cube, order);
}

int run_radar_detect(const RunConfig& cfg, bool seed_given, bool order_given) {
  const auto field = resolve_field(cfg, seed_given, order_given);
  const auto kind = parse_filter(cfg.filter);
  const auto policy = parse_threshold(cfg.threshold);

  const auto filtered = radar::sliding_filter(field, cfg.window, kind, cfg.exclude_center);
  const auto stat = radar::detection_statistic(field, filtered);
  const auto report = radar::threshold_and_declare(stat, policy, cfg.window, to_string(kind));

  ensure_out_dir(cfg.out_dir);
  io::write_text_file(join_path(cfg.out_dir, "report.json"),
                      io::report_to_json(report).dump(2) + "\n");
  {
    std::ofstream out(join_path(cfg.out_dir, "statistic.csv"));
    io::write_statistic_csv(out, report.statistic);
  }
  {
    std::ofstream out(join_path(cfg.out_dir, "cellfield.csv"));
    io::write_cellfield_csv(out, field);
  }
  {
    std::ofstream out(join_path(cfg.out_dir, "filtered.csv"));
    io::write_cellfield_csv(out, filtered);
  }
  if (cfg.svg_plots) {
    svg::Series stat_series{"statistic", "#1f77b4", report.statistic, false};
    svg::Series thr_series{"threshold", "#d62728",
                           std::vector<double>(report.statistic.size(), report.threshold), true};
    svg::PlotOptions opt;
    opt.title = "detection statistic (" + cfg.filter + " filter, window " +
                std::to_string(cfg.window) + ")";
    opt.x_label = "cell";
    opt.y_label = "distance to filtered field";
    io::write_text_file(join_path(cfg.out_dir, "statistic.svg"),
                        svg::line_plot({stat_series, thr_series}, opt));
  }

  std::cout << "threshold (" << cfg.threshold << "): " << io::detail::format_double(report.threshold)
            << "\ndeclared cells:";
  for (std::size_t c : report.declared) std::cout << ' ' << c;
  if (report.declared.empty()) std::cout << " none";
  std::cout << "\nwrote " << join_path(cfg.out_dir, "report.json") << ", "
            << join_path(cfg.out_dir, "statistic.csv") << '\n';
  return 0;
}

int run_radar_spectra(const RunConfig& cfg, bool seed_given, bool order_given) {
  const auto field = resolve_field(cfg, seed_given, order_given);
  if (cfg.n_freq == 0) throw parse_error("--n-freq must be positive");
  const auto spectra = radar::spectra_matrix(field, cfg.n_freq);

  ensure_out_dir(cfg.out_dir);
  {
    std::ofstream out(join_path(cfg.out_dir, "spectra.csv"));
    io::write_matrix_csv(out, spectra);
  }
  if (cfg.svg_plots) {
    auto log_rows = spectra;
    for (auto& row : log_rows)
      for (double& v : row) v = std::log10(std::max(v, 1e-300));
    svg::HeatmapOptions opt;
    opt.title = "AR spectra, log10 power";
    opt.x_label = "normalized frequency";
    opt.y_label = "cell";
    io::write_text_file(join_path(cfg.out_dir, "spectra.svg"), svg::heatmap(log_rows, opt));
  }
  std::cout << "wrote " << join_path(cfg.out_dir, "spectra.csv") << " (" << spectra.size()
            << " cells x " << cfg.n_freq << " frequencies)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// bounds

int run_bounds(const RunConfig& cfg) {
  ConcentrationContext ctx;
  ctx.alpha = cfg.alpha;
  ctx.rho = cfg.rho;
  ctx.curvature_upper = cfg.delta;
  ctx.injectivity = cfg.inj;
  const double coarse = coarse_ball_radius(ctx);
  const double refined = refined_ball_radius(ctx);
  const auto col = [](const std::string& v) {
    return v + std::string(v.size() < 11 ? 11 - v.size() : 1, ' ');
  };
  std::cout << col("alpha") << col("rho") << col("Delta") << col("inj") << col("coarse")
            << "refined\n";
  std::cout << col(fmt6(ctx.alpha)) << col(fmt6(ctx.rho)) << col(fmt6(ctx.curvature_upper))
            << col(std::isfinite(ctx.injectivity) ? fmt6(ctx.injectivity) : "inf")
            << col(fmt6(coarse)) << fmt6(refined) << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// selftest

int run_selftest() {
  struct Check {
    const char* name;
    bool ok;
  };
  std::vector<Check> checks;
  const auto run = [&](const char* name, auto&& fn) {
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      std::cerr << name << " threw: " << e.what() << '\n';
    }
    checks.push_back({name, ok});
  };

  run("euclidean distance", [] {
    const auto m = euclidean(2);
    return distance(m, ManifoldPoint{{0.0, 0.0}}, ManifoldPoint{{3.0, 4.0}}) == 5.0;
  });

  run("disc exp/log inversion", [] {
    const auto m = poincare_disc();
    detail::Rng rng(11);
    const auto draw = [&] {
      const double r = 0.85 * std::sqrt(rng.uniform());
      const double a = 2.0 * 3.14159265358979323846 * rng.uniform();
      return ManifoldPoint{{r * std::cos(a), r * std::sin(a)}};
    };
    for (int i = 0; i < 100; ++i) {
      const auto x = draw(), y = draw();
      if (distance(m, exp_map(m, x, log_map(m, x, y)), y) > 1e-10) return false;
    }
    return true;
  });

  run("tn triangle inequality", [] {
    const auto m = toeplitz::tn_manifold(4);
    detail::Rng rng(13);
    const auto draw = [&] {
      toeplitz::ReflectionCoords c;
      c.P0 = 0.5 + rng.uniform();
      for (int k = 0; k < 3; ++k)
        c.mu.emplace_back(0.6 * (2.0 * rng.uniform() - 1.0), 0.6 * (2.0 * rng.uniform() - 1.0));
      return toeplitz::to_manifold_point(toeplitz::clamped(c));
    };
    for (int i = 0; i < 100; ++i) {
      const auto x = draw(), y = draw(), z = draw();
      if (distance(m, x, y) > distance(m, x, z) + distance(m, z, y) + 1e-12) return false;
    }
    return true;
  });

  run("Fermat point", [] {
    const auto m = euclidean(2);
    const auto mu = uniform_measure(
        m, {ManifoldPoint{{0.0, 0.0}}, ManifoldPoint{{1.0, 0.0}},
            ManifoldPoint{{0.5, std::sqrt(3.0) / 2.0}}});
    const auto ctx = make_ball_context(m, mu.points[0], 2.0, mu, 0.0, 0.0);
    const auto res = solve_median_subgradient(m, mu, ctx,
                                              StepSchedule::harmonic(0.5, step_cap_T(ctx)));
    return std::abs(res.trace.final_cost - 0.5773502691896257) < 1e-7 &&
           characterization_residual(m, mu, res.point) < 1e-8;
  });

  run("reflection round trip", [] {
    toeplitz::ReflectionCoords c;
    c.P0 = 2.0;
    c.mu = {{0.5, 0.0}};
    const auto t = toeplitz::phi_inv(c);
    return t.first_column[1] == std::complex<double>{-1.0, 0.0} &&
           std::abs(toeplitz::phi(t).mu[0].real() - 0.5) < 1e-14;
  });

  run("Burg AR(1) recovery", [] {
    radar::SceneConfig cfg;
    cfg.n_cells = 1;
    cfg.pulses = 512;
    cfg.model_order = 1;
    cfg.clutter.ar = {{-0.6, 0.0}};
    cfg.seed = 5;
    const auto cube = radar::simulate_scene(cfg);
    const auto field = radar::estimate_cells(cube, 1);
    return std::abs(field.cells[0].mu[0].real() - (-0.6)) < 0.05;
  });

  run("nearest-rank quantile", [] {
    std::vector<double> stat{10, 1, 9, 2, 8, 3, 7, 4, 6, 5};
    const auto rep = radar::threshold_and_declare(stat, radar::ThresholdPolicy::quantile(0.8));
    return rep.threshold == 8.0;
  });

  run("pulse cube CSV round trip", [] {
    radar::SceneConfig cfg;
    cfg.n_cells = 4;
    cfg.pulses = 10;
    cfg.model_order = 2;
    cfg.clutter.ar = {{-0.5, 0.0}};
    cfg.noise_power = 0.1;
    cfg.seed = 21;
    const auto cube = radar::simulate_scene(cfg);
    std::ostringstream out;
    io::write_pulse_cube_csv(out, cube);
    std::istringstream in(out.str());
    return io::read_pulse_cube_csv(in) == cube;
  });

  bool all = true;
  for (const auto& c : checks) {
    std::cout << (c.ok ? "PASS" : "FAIL") << "  " << c.name << '\n';
    all = all && c.ok;
  }
  std::cout << (all ? "selftest passed" : "selftest FAILED") << '\n';
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"medians and p-means of probability measures on Riemannian manifolds,\n"
               "with a Toeplitz-covariance radar detection pipeline"};
  app.require_subcommand(1);

  // --- solve ---------------------------------------------------------------
  auto* solve = app.add_subcommand("solve", "compute a median or p-mean of a measure file");
  solve->require_subcommand(1);
  std::vector<CLI::App*> solve_modes{
      solve->add_subcommand("median", "subgradient Fréchet median"),
      solve->add_subcommand("pmean", "gradient-descent p-mean"),
      solve->add_subcommand("stochastic", "stochastic p-mean random walk")};
  for (auto* sub : solve_modes) {
    sub->add_option("--manifold", cfg.manifold_spec,
                    "manifold spec: euclidean:d | preals[:w] | disc[:w] | tn:n");
    sub->add_option("--input", cfg.input, "measure file (CSV or .json)")->required();
    sub->add_option("--out-dir", cfg.out_dir, "output directory");
    sub->add_option("--steps", cfg.steps, "iteration budget");
    sub->add_option("--step", cfg.step, "step size (harmonic delta or constant)");
    sub->add_option("--tol", cfg.tol, "convergence tolerance");
  }
  solve_modes[1]->add_option("--p", cfg.p, "exponent p > 1");
  solve_modes[2]->add_option("--p", cfg.p, "exponent p >= 1");
  solve_modes[2]->add_option("--seed", cfg.seed, "sampling seed");

  // --- radar ---------------------------------------------------------------
  auto* radar_cmd = app.add_subcommand("radar", "simulate scenes, detect targets, emit spectra");
  radar_cmd->require_subcommand(1);
  auto* rsim = radar_cmd->add_subcommand("simulate", "write a pulse cube for a scene config");
  auto* rdet = radar_cmd->add_subcommand("detect", "sliding-window detection on a cube or scene");
  auto* rspec = radar_cmd->add_subcommand("spectra", "per-cell AR spectra of a cube or scene");
  CLI::Option *sim_seed = nullptr, *det_seed = nullptr, *spec_seed = nullptr,
              *det_order = nullptr, *spec_order = nullptr;
  for (auto* sub : {rsim, rdet, rspec}) {
    sub->add_option("--config", cfg.config_path,
                    "scene config JSON (default: bundled two-target scene)");
    sub->add_option("--out-dir", cfg.out_dir, "output directory");
  }
  sim_seed = rsim->add_option("--seed", cfg.seed, "override the scene seed");
  det_seed = rdet->add_option("--seed", cfg.seed, "override the scene seed");
  spec_seed = rspec->add_option("--seed", cfg.seed, "override the scene seed");
  for (auto* sub : {rdet, rspec}) {
    sub->add_option("--input", cfg.input, "recorded pulse cube CSV (instead of --config)");
    sub->add_flag("--svg,!--no-svg", cfg.svg_plots, "write SVG plots");
  }
  det_order = rdet->add_option("--order", cfg.order, "AR model order for estimation");
  spec_order = rspec->add_option("--order", cfg.order, "AR model order for estimation");
  rdet->add_option("--window", cfg.window, "sliding window size (odd)");
  rdet->add_flag("--exclude-center,!--include-center", cfg.exclude_center,
                 "exclude the cell under test from its window (default on)");
  rdet->add_option("--filter", cfg.filter, "filter kind: median | barycenter");
  rdet->add_option("--threshold", cfg.threshold,
                   "threshold spec: fixed:c | quantile:q | mad:k");
  rspec->add_option("--n-freq", cfg.n_freq, "frequency grid size");

  // --- bounds --------------------------------------------------------------
  auto* bounds = app.add_subcommand("bounds", "robustness ball radii for concentrated measures");
  bounds->add_option("--alpha", cfg.alpha, "mass fraction in (1/2, 1]")->required();
  bounds->add_option("--rho", cfg.rho, "concentration radius");
  bounds->add_option("--delta", cfg.delta, "upper curvature bound of the coarse ball");
  bounds->add_option("--inj", cfg.inj, "injectivity radius");

  // --- selftest ------------------------------------------------------------
  app.add_subcommand("selftest", "run fast built-in sanity checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve_modes[0]->parsed()) return run_solve(cfg, "median");
    if (solve_modes[1]->parsed()) return run_solve(cfg, "pmean");
    if (solve_modes[2]->parsed()) return run_solve(cfg, "stochastic");
    if (rsim->parsed()) return run_radar_simulate(cfg, sim_seed->count() > 0);
    if (rdet->parsed()) return run_radar_detect(cfg, det_seed->count() > 0, det_order->count() > 0);
    if (rspec->parsed())
      return run_radar_spectra(cfg, spec_seed->count() > 0, spec_order->count() > 0);
    if (bounds->parsed()) return run_bounds(cfg);
    return run_selftest();
  } catch (const parse_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const invalid_point_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const degenerate_signal_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const decomposition_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
