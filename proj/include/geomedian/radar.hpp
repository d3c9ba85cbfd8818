#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "manifold.hpp"
#include "measure.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "toeplitz.hpp"

namespace geomedian {
namespace radar {

using toeplitz::ar_spectrum;
using toeplitz::burg_reflection;
using toeplitz::clamped;
using toeplitz::from_manifold_point;
using toeplitz::prediction_to_reflection;
using toeplitz::ReflectionCoords;
using toeplitz::tn_manifold;
using toeplitz::to_manifold_point;

// ---------------------------------------------------------------------------
// Scene configuration and simulation

struct TargetSpec {
  std::size_t cell = 0;
  double frequency = 0.0;  // normalized Doppler in [-0.5, 0.5)
  double power = 1.0;
};

struct ClutterSpec {
  // prediction coefficients a_1..a_q of the clutter AR model
  // (x_t + sum_k a_k x_{t-k} = w_t); empty means no correlated clutter
  std::vector<std::complex<double>> ar;
  double power = 1.0;  // stationary clutter power r_0; 0 switches clutter off
};

struct SceneConfig {
  std::size_t n_cells = 200;
  std::size_t pulses = 64;
  std::size_t model_order = 8;
  ClutterSpec clutter;
  std::vector<TargetSpec> targets;
  double noise_power = 0.0;
  std::uint64_t seed = 0;
};

using PulseMatrix = std::vector<std::vector<std::complex<double>>>;

inline void validate_scene(const SceneConfig& cfg) {
  if (cfg.n_cells == 0) throw std::invalid_argument("scene: n_cells must be >= 1");
  if (cfg.model_order < 1) throw std::invalid_argument("scene: model order must be >= 1");
  if (cfg.pulses <= cfg.model_order + 1)
    throw std::invalid_argument("scene: pulses per cell must exceed the model order");
  if (!(cfg.noise_power >= 0.0)) throw std::invalid_argument("scene: noise power must be >= 0");
  if (!(cfg.clutter.power >= 0.0)) throw std::invalid_argument("scene: clutter power must be >= 0");
  for (const auto& t : cfg.targets) {
    if (t.cell >= cfg.n_cells) throw std::invalid_argument("scene: target cell out of range");
    if (!(t.power > 0.0)) throw std::invalid_argument("scene: target power must be positive");
    if (!(t.frequency >= -0.5) || !(t.frequency < 0.5))
      throw std::invalid_argument("scene: target frequency must lie in [-0.5, 0.5)");
  }
}

/// The default experiment: 200 range cells of 64 pulses, lowpass AR(1)
/// clutter, two strong movers, a little thermal noise.
inline SceneConfig default_two_target_scene(std::uint64_t seed = 2024) {
  SceneConfig cfg;
  cfg.n_cells = 200;
  cfg.pulses = 64;
  cfg.model_order = 8;
  cfg.clutter.ar = {std::complex<double>(-0.8, 0.0)};
  cfg.clutter.power = 1.0;
  cfg.targets = {{60, 0.25, 10.0}, {140, -0.3, 10.0}};
  cfg.noise_power = 0.05;
  cfg.seed = seed;
  return cfg;
}

namespace detail {

using geomedian::detail::mix_seed;
using geomedian::detail::Rng;

/// Stationary power of the unit-innovation AR process with prediction
/// coefficients a: r_0 = 1 / prod_k (1 - |mu_k|^2).
inline double unit_ar_power(const std::vector<std::complex<double>>& a) {
  if (a.empty()) return 1.0;
  const auto mus = prediction_to_reflection(a);
  double prod = 1.0;
  for (const auto& mu : mus) prod *= 1.0 - std::norm(mu);
  return 1.0 / prod;
}

}  // namespace detail

/// Simulates the scene cell by cell.  Each cell has its own seeded stream
/// (mix of config seed and cell index) with a fixed draw order: clutter
/// innovations (burn-in first), then noise, then one target phase, so the
/// same seed yields the same clutter and noise whether or not targets are
/// present.  Deterministic: identical configs give identical output.
inline PulseMatrix simulate_scene(const SceneConfig& cfg) {
  validate_scene(cfg);
  const std::size_t n = cfg.pulses;
  const std::size_t q = cfg.clutter.ar.size();
  const bool clutter_on = cfg.clutter.power > 0.0;
  const double clutter_scale =
      clutter_on ? std::sqrt(cfg.clutter.power / detail::unit_ar_power(cfg.clutter.ar)) : 0.0;
  const double noise_scale = std::sqrt(cfg.noise_power);
  constexpr double two_pi = 6.283185307179586476925286766559;

  PulseMatrix out(cfg.n_cells);
  parallel_for(cfg.n_cells, [&](std::size_t cell) {
    detail::Rng rng(detail::mix_seed(cfg.seed, cell));
    std::vector<std::complex<double>> x(n, 0.0);

    if (clutter_on) {
      const std::size_t burn = 200 + 10 * q;
      std::vector<std::complex<double>> hist(q, 0.0);  // hist[k] = x_{t-1-k}
      for (std::size_t t = 0; t < burn + n; ++t) {
        std::complex<double> value = rng.complex_gaussian();
        for (std::size_t k = 0; k < q; ++k) value -= cfg.clutter.ar[k] * hist[k];
        if (q > 0) {
          for (std::size_t k = q - 1; k > 0; --k) hist[k] = hist[k - 1];
          hist[0] = value;
        }
        if (t >= burn) x[t - burn] = clutter_scale * value;
      }
    }
    if (noise_scale > 0.0)
      for (std::size_t t = 0; t < n; ++t) x[t] += noise_scale * rng.complex_gaussian();

    for (const auto& target : cfg.targets) {
      if (target.cell != cell) continue;
      const double phase = two_pi * rng.uniform();
      const double amp = std::sqrt(target.power);
      for (std::size_t t = 0; t < n; ++t) {
        const double arg = two_pi * target.frequency * static_cast<double>(t) + phase;
        x[t] += amp * std::complex<double>(std::cos(arg), std::sin(arg));
      }
    }
    out[cell] = std::move(x);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Per-cell estimation

/// Reflection-coefficient field over the range cells.  flags[i] != 0 marks a
/// cell that needed repair (degenerate signal) or whose filter solve did not
/// converge to tolerance.
struct CellField {
  std::vector<ReflectionCoords> cells;
  std::vector<std::uint8_t> flags;

  std::size_t size() const { return cells.size(); }
  std::size_t order() const { return cells.empty() ? 0 : cells.front().order(); }
};

/// Runs the regularized Burg estimator on every cell.  `order` is the AR
/// model order, i.e. the number of reflection coefficients mu_1..mu_order
/// per cell (the underlying covariance matrix has order `order` + 1).
/// Degenerate cells (zero energy) are replaced by the nearest valid
/// neighbor (lower index on ties) and flagged; if every cell is degenerate
/// there is nothing to salvage and the degeneracy propagates as an error.
inline CellField estimate_cells(const PulseMatrix& pulses, std::size_t order,
                                double regularization = 0.0) {
  if (pulses.empty()) throw std::invalid_argument("estimate_cells: empty pulse matrix");
  if (order < 1) throw std::invalid_argument("estimate_cells: order must be >= 1");
  const std::size_t n_samples = pulses.front().size();
  for (const auto& row : pulses)
    if (row.size() != n_samples)
      throw std::invalid_argument("estimate_cells: ragged pulse matrix");
  if (n_samples <= order + 1)
    throw std::invalid_argument("estimate_cells: need more pulses than the model order");

  CellField field;
  field.cells.resize(pulses.size());
  field.flags.assign(pulses.size(), 0);

  parallel_for(pulses.size(), [&](std::size_t i) {
    try {
      field.cells[i] = burg_reflection(pulses[i], static_cast<int>(order) + 1, regularization);
    } catch (const degenerate_signal_error&) {
      field.flags[i] = 1;
    }
  });

  std::vector<std::size_t> valid;
  for (std::size_t i = 0; i < field.size(); ++i)
    if (!field.flags[i]) valid.push_back(i);
  if (valid.empty())
    throw degenerate_signal_error("estimate_cells: every cell is degenerate");
  const auto gap = [](std::size_t a, std::size_t b) { return a > b ? a - b : b - a; };
  for (std::size_t i = 0; i < field.size(); ++i) {
    if (!field.flags[i]) continue;
    std::size_t best = valid.front();
    for (std::size_t v : valid)
      if (gap(v, i) < gap(best, i)) best = v;
    field.cells[i] = field.cells[best];
  }
  return field;
}

// ---------------------------------------------------------------------------
// Sliding-window filtering in the reflection-coefficient manifold

enum class FilterKind { median, barycenter };

inline const char* to_string(FilterKind k) {
  return k == FilterKind::median ? "median" : "barycenter";
}

struct FilterOptions {
  std::size_t median_iterations = 800;
  std::size_t barycenter_iterations = 60;
  double tolerance = 1e-9;
  double flag_residual = 1e-6;  // cells ending above this are flagged
};

/// Replaces every cell by the Fréchet median (p = 1) or barycenter (p = 2)
/// of the cells in a window centered on it.  Windows are truncated at the
/// field edges (no wraparound).  With exclude_center the cell itself does
/// not vote, which prevents a strong target from masking itself; a window
/// whose neighborhood ends up empty degrades to the identity.
inline CellField sliding_filter(const CellField& field, std::size_t window, FilterKind kind,
                                bool exclude_center = true, const FilterOptions& opts = {}) {
  if (field.size() == 0) throw std::invalid_argument("sliding_filter: empty field");
  if (window == 0 || window % 2 == 0)
    throw std::invalid_argument("sliding_filter: window must be odd and positive");
  if (window > field.size())
    throw std::invalid_argument("sliding_filter: window larger than the field");
  const std::size_t order = field.order();
  for (const auto& c : field.cells)
    if (c.order() != order) throw std::invalid_argument("sliding_filter: mixed cell orders");

  const ManifoldDescriptor manifold = tn_manifold(static_cast<int>(order));
  const auto bounds = default_curvature_bounds(manifold);

  std::vector<ManifoldPoint> points(field.size());
  for (std::size_t i = 0; i < field.size(); ++i)
    points[i] = to_manifold_point(clamped(field.cells[i]));

  CellField out;
  out.cells.resize(field.size());
  out.flags = field.flags;

  const std::size_t half = window / 2;
  parallel_for(field.size(), [&](std::size_t i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(field.size() - 1, i + half);
    std::vector<ManifoldPoint> win;
    win.reserve(hi - lo + 1);
    for (std::size_t j = lo; j <= hi; ++j)
      if (!(exclude_center && j == i)) win.push_back(points[j]);
    if (win.empty()) {  // single-cell window excluding itself
      out.cells[i] = field.cells[i];
      return;
    }

    // short-circuit constant windows; keeps exact identity on flat fields
    bool constant = true;
    for (std::size_t j = 1; j < win.size() && constant; ++j)
      constant = distance(manifold, win[0], win[j]) < 1e-14;
    if (constant) {
      out.cells[i] = from_manifold_point(win[0]);
      return;
    }

    const auto mu = uniform_measure(manifold, win);
    const auto center = mu.points[medoid_index(manifold, mu)];
    const double sr = support_radius(manifold, mu, center);
    const BallContext ball{center, sr + 1.0, sr, bounds.first, bounds.second, kInf};

    SolverOptions sopts;
    sopts.tolerance = opts.tolerance;
    sopts.record_iterates = false;
    double residual = 0.0;
    ManifoldPoint solution;
    if (kind == FilterKind::median) {
      sopts.max_iterations = opts.median_iterations;
      const auto res = solve_median_subgradient(
          manifold, mu, ball, StepSchedule::harmonic(0.5, step_cap_T(ball)), sopts);
      solution = res.point;
      residual = res.trace.final_residual;
    } else {
      sopts.max_iterations = opts.barycenter_iterations;
      const auto res = solve_pmean_gradient(
          manifold, mu, ball, 2.0,
          StepSchedule::custom(std::vector<double>(opts.barycenter_iterations, 0.5)), sopts);
      solution = res.point;
      residual = res.trace.final_residual;
    }
    if (residual > opts.flag_residual) out.flags[i] = 1;
    out.cells[i] = from_manifold_point(solution);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Detection statistic and thresholding

/// D_i = d(cell_i, reference_i) in the reflection-coefficient geometry.
inline std::vector<double> detection_statistic(const CellField& field,
                                               const CellField& reference) {
  if (field.size() != reference.size() || field.size() == 0)
    throw std::invalid_argument("detection_statistic: field sizes differ");
  if (field.order() != reference.order())
    throw std::invalid_argument("detection_statistic: field orders differ");
  const ManifoldDescriptor manifold = tn_manifold(static_cast<int>(field.order()));
  std::vector<double> stat(field.size());
  parallel_for(field.size(), [&](std::size_t i) {
    stat[i] = distance(manifold, to_manifold_point(clamped(field.cells[i])),
                       to_manifold_point(clamped(reference.cells[i])));
  });
  return stat;
}

struct ThresholdPolicy {
  enum class Kind { fixed, quantile, median_mad };
  Kind kind = Kind::fixed;
  double value = 0.0;

  static ThresholdPolicy fixed(double c) { return {Kind::fixed, c}; }
  static ThresholdPolicy quantile(double q) {
    if (!(q >= 0.0 && q <= 1.0))
      throw std::invalid_argument("threshold: quantile must lie in [0, 1]");
    return {Kind::quantile, q};
  }
  static ThresholdPolicy median_mad(double k) {
    if (!(k >= 0.0)) throw std::invalid_argument("threshold: MAD multiplier must be >= 0");
    return {Kind::median_mad, k};
  }
};

struct DetectionReport {
  std::vector<double> statistic;
  double threshold = 0.0;
  std::vector<std::size_t> declared;
  std::size_t window_size = 0;
  std::string filter_kind;
};

namespace detail {

inline double middle_of_sorted(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Applies the threshold policy and declares every cell whose statistic
/// strictly exceeds it.  quantile uses nearest-rank on the sorted sample;
/// median_mad sets threshold = median + k * median(|x - median|).
inline DetectionReport threshold_and_declare(const std::vector<double>& statistic,
                                             const ThresholdPolicy& policy,
                                             std::size_t window_size = 0,
                                             const std::string& filter_kind = "") {
  if (statistic.empty()) throw std::invalid_argument("threshold_and_declare: empty statistic");
  DetectionReport report;
  report.statistic = statistic;
  report.window_size = window_size;
  report.filter_kind = filter_kind;

  switch (policy.kind) {
    case ThresholdPolicy::Kind::fixed:
      report.threshold = policy.value;
      break;
    case ThresholdPolicy::Kind::quantile: {
      std::vector<double> sorted = statistic;
      std::sort(sorted.begin(), sorted.end());
      const auto n = static_cast<double>(sorted.size());
      std::size_t rank = static_cast<std::size_t>(std::ceil(policy.value * n));
      rank = std::clamp<std::size_t>(rank, 1, sorted.size());
      report.threshold = sorted[rank - 1];
      break;
    }
    case ThresholdPolicy::Kind::median_mad: {
      std::vector<double> tmp = statistic;
      const double med = detail::middle_of_sorted(tmp);
      for (double& x : tmp) x = std::abs(x - med);
      const double mad = detail::middle_of_sorted(tmp);
      report.threshold = med + policy.value * mad;
      break;
    }
  }
  for (std::size_t i = 0; i < statistic.size(); ++i)
    if (statistic[i] > report.threshold) report.declared.push_back(i);
  return report;
}

// ---------------------------------------------------------------------------
// Spectra and the distortion comparison harness

/// Power spectral densities of all cells, one row per cell.
inline std::vector<std::vector<double>> spectra_matrix(const CellField& field,
                                                       std::size_t n_freq) {
  std::vector<std::vector<double>> rows(field.size());
  parallel_for(field.size(), [&](std::size_t i) {
    rows[i] = ar_spectrum(field.cells[i], static_cast<int>(n_freq));
  });
  return rows;
}

struct DistortionSummary {
  double median_distortion = 0.0;
  double barycenter_distortion = 0.0;
  std::size_t cells_compared = 0;
};

/// Measures how much each filter distorts target-adjacent cells: filters the
/// noisy-scene field, then compares those cells against the estimates from
/// the same scene with the targets removed (the per-cell streams make
/// clutter and noise identical across the two simulations).  Smaller is
/// better; the median filter is expected to win because a target inside the
/// window is an outlier to it but drags the barycenter.
inline DistortionSummary filter_distortion(const SceneConfig& cfg, std::size_t window,
                                           double regularization = 0.0) {
  validate_scene(cfg);
  if (cfg.targets.empty())
    throw std::invalid_argument("filter_distortion: scene must contain targets");

  SceneConfig clean_cfg = cfg;
  clean_cfg.targets.clear();
  const auto noisy = estimate_cells(simulate_scene(cfg), cfg.model_order, regularization);
  const auto clean = estimate_cells(simulate_scene(clean_cfg), cfg.model_order, regularization);

  const auto med = sliding_filter(noisy, window, FilterKind::median, true);
  const auto bar = sliding_filter(noisy, window, FilterKind::barycenter, true);

  const ManifoldDescriptor manifold = tn_manifold(static_cast<int>(noisy.order()));
  const std::size_t half = window / 2;
  DistortionSummary sum;
  for (std::size_t j = 0; j < noisy.size(); ++j) {
    bool adjacent = false;
    for (const auto& t : cfg.targets) {
      const auto gap = j > t.cell ? j - t.cell : t.cell - j;
      if (gap > 0 && gap <= half) adjacent = true;
      if (gap == 0) {  // the target cell itself is not a distortion probe
        adjacent = false;
        break;
      }
    }
    if (!adjacent) continue;
    const auto reference = to_manifold_point(clamped(clean.cells[j]));
    sum.median_distortion += distance(manifold, to_manifold_point(clamped(med.cells[j])), reference);
    sum.barycenter_distortion +=
        distance(manifold, to_manifold_point(clamped(bar.cells[j])), reference);
    ++sum.cells_compared;
  }
  if (sum.cells_compared > 0) {
    sum.median_distortion /= static_cast<double>(sum.cells_compared);
    sum.barycenter_distortion /= static_cast<double>(sum.cells_compared);
  }
  return sum;
}

}  // namespace radar
}  // namespace geomedian
