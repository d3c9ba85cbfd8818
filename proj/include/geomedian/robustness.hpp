#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "manifold.hpp"
#include "measure.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace geomedian {

// ---------------------------------------------------------------------------
// Concentration context: at least a fraction alpha > 1/2 of the mass lies in
// the closed ball of radius rho, with curvature at most curvature_upper on
// the enclosing coarse ball.

struct ConcentrationContext {
  double alpha = 1.0;            // concentrated mass fraction, in (1/2, 1]
  double rho = 1.0;              // concentration radius
  double curvature_upper = 0.0;  // upper sectional curvature bound on the coarse ball
  double injectivity = kInf;     // injectivity radius of the coarse ball

  /// min(pi/sqrt(Delta), inj); the first term is +infinity when Delta <= 0.
  double r_star() const {
    constexpr double pi = 3.14159265358979323846;
    if (curvature_upper > 0.0) return std::min(pi / std::sqrt(curvature_upper), injectivity);
    return injectivity;
  }
};

inline void validate_concentration(const ConcentrationContext& ctx) {
  if (!(ctx.alpha > 0.5) || !(ctx.alpha <= 1.0))
    throw std::invalid_argument("concentration context: alpha must lie in (1/2, 1]");
  if (!(ctx.rho > 0.0) || !std::isfinite(ctx.rho))
    throw std::invalid_argument("concentration context: rho must be positive and finite");
  if (!(ctx.injectivity > 0.0))
    throw std::invalid_argument("concentration context: injectivity must be positive");
}

// ---------------------------------------------------------------------------
// Closed-form robustness balls

/// Every median lies within 2 alpha rho / (2 alpha - 1) of the concentration
/// center, on any manifold (no curvature input involved).
inline double coarse_ball_radius(const ConcentrationContext& ctx) {
  validate_concentration(ctx);
  return 2.0 * ctx.alpha * ctx.rho / (2.0 * ctx.alpha - 1.0);
}

namespace detail {

inline double cot(double x) { return std::cos(x) / std::sin(x); }

}  // namespace detail

/// Curvature-refined ball radius.  Requires the coarse ball to fit inside
/// r_star (precondition_error otherwise).  For a positive curvature bound
/// the half-ball confinement must first be certified, either because the
/// coarse ball is already small enough or through the sign of the
/// comparison function F at r_star/2 - rho; when neither certifies, a
/// not_certified_error reports it rather than returning an unproven radius.
inline double refined_ball_radius(const ConcentrationContext& ctx) {
  validate_concentration(ctx);
  const double coarse = coarse_ball_radius(ctx);
  const double r_star = ctx.r_star();
  if (!(coarse < r_star))
    throw precondition_error(
        "refined_ball_radius: coarse ball does not fit inside r_star (condition violated)");

  const double a = ctx.alpha;
  const double denom = std::sqrt(2.0 * a - 1.0);
  const double Delta = ctx.curvature_upper;

  if (Delta > 0.0) {
    if (coarse > r_star / 2.0) {
      // certify half-ball confinement through F(r_star/2 - rho) <= 0
      const double t = r_star / 2.0 - ctx.rho;
      const double t_max = ctx.rho / (2.0 * a - 1.0);
      if (!(t > 0.0 && t <= t_max))
        throw not_certified_error(
            "refined_ball_radius: comparison function not applicable at r_star/2 - rho");
      const double sd = std::sqrt(Delta);
      const double f = detail::cot(sd * (2.0 * a - 1.0) * t) - detail::cot(sd * t) -
                       2.0 * detail::cot(sd * ctx.rho);
      if (!(f <= 0.0))
        throw not_certified_error(
            "refined_ball_radius: half-ball confinement not certified (comparison function is "
            "positive)");
    }
    const double sd = std::sqrt(Delta);
    const double arg = a * std::sin(sd * ctx.rho) / denom;
    if (!(arg <= 1.0))
      throw not_certified_error("refined_ball_radius: spherical bound degenerates (arcsin "
                                "argument exceeds 1)");
    return std::asin(arg) / sd;
  }
  if (Delta == 0.0) return a * ctx.rho / denom;
  const double sd = std::sqrt(-Delta);
  return std::asinh(a * std::sinh(sd * ctx.rho) / denom) / sd;
}

// ---------------------------------------------------------------------------
// Adversarial Monte-Carlo verification

struct RobustnessReport {
  double bound = 0.0;         // refined radius when certified, else the coarse one
  double max_observed = 0.0;  // largest d(median, center) seen
  std::size_t trials = 0;
  std::size_t violations = 0;  // observations beyond bound plus solver slack
};

struct MonteCarloOptions {
  std::size_t atoms_inside = 6;
  std::size_t atoms_outside = 3;
  double adversary_reach = 0.0;  // 0: choose from the coarse radius
  std::size_t solver_iterations = 1500;
};

namespace detail {

inline ManifoldPoint canonical_base_point(const ManifoldDescriptor& m) {
  std::vector<double> c(m.dimension(), 0.0);
  for_each_leaf(m, 0, [&](const ManifoldDescriptor& leaf, int off) {
    if (leaf.kind == ManifoldKind::positive_reals) c[off] = 1.0;
  });
  return ManifoldPoint{std::move(c)};
}

}  // namespace detail

/// Places alpha mass inside the concentration ball and the remaining mass
/// adversarially far outside, solves for the median, and checks containment
/// in the theoretical ball.  The bound is the refined radius when its
/// certification succeeds and the coarse radius otherwise.  A small relative
/// slack (1e-6) absorbs solver tolerance when counting violations.  Trials
/// with per-trial seeds run in parallel; results are independent of the
/// thread count.
inline RobustnessReport monte_carlo_robustness(const ManifoldDescriptor& m,
                                               const ConcentrationContext& ctx,
                                               std::size_t trials, std::uint64_t seed,
                                               const MonteCarloOptions& opts = {}) {
  validate_concentration(ctx);
  if (trials == 0) throw std::invalid_argument("monte_carlo_robustness: trials must be > 0");
  if (opts.atoms_inside == 0)
    throw std::invalid_argument("monte_carlo_robustness: needs at least one inside atom");

  const double coarse = coarse_ball_radius(ctx);
  double bound = coarse;
  try {
    bound = refined_ball_radius(ctx);
  } catch (const not_certified_error&) {
    // fall back to the always-valid coarse ball
  } catch (const precondition_error&) {
  }

  const ManifoldPoint center = detail::canonical_base_point(m);
  const double reach = opts.adversary_reach > 0.0 ? opts.adversary_reach : 3.0 * coarse + 5.0;
  const double kappa_lo = default_curvature_bounds(m).first;

  std::vector<double> observed(trials, 0.0);
  parallel_for(trials, [&](std::size_t trial) {
    detail::Rng rng(detail::mix_seed(seed, trial));

    std::vector<ManifoldPoint> points;
    std::vector<double> weights;
    const std::size_t n_out = ctx.alpha >= 1.0 ? 0 : opts.atoms_outside;
    points.reserve(opts.atoms_inside + n_out);

    for (std::size_t i = 0; i < opts.atoms_inside; ++i) {
      // bias toward the boundary of the concentration ball (harder cases)
      const double len = ctx.rho * std::pow(rng.uniform(), 0.25);
      points.push_back(exp_map(m, center, detail::random_tangent_of_norm(m, center, rng, len)));
      weights.push_back(ctx.alpha / static_cast<double>(opts.atoms_inside));
    }
    for (std::size_t i = 0; i < n_out; ++i) {
      const double len = coarse + (reach - coarse) * rng.uniform();
      points.push_back(exp_map(m, center, detail::random_tangent_of_norm(m, center, rng, len)));
      weights.push_back((1.0 - ctx.alpha) / static_cast<double>(n_out));
    }
    const auto mu = make_measure(m, std::move(points), std::move(weights));

    // the solver ball must contain the whole support with room to spare
    const double sr = support_radius(m, mu, center);
    BallContext ball{center, sr + 1.0, sr, kappa_lo, 0.0, kInf};
    SolverOptions sopts;
    sopts.max_iterations = opts.solver_iterations;
    sopts.record_iterates = false;
    sopts.tolerance = 1e-9;
    const auto res = solve_median_subgradient(
        m, mu, ball, StepSchedule::harmonic(0.5, step_cap_T(ball)), sopts);
    observed[trial] = distance(m, center, res.point);
  });

  RobustnessReport report;
  report.bound = bound;
  report.trials = trials;
  for (double d : observed) {
    report.max_observed = std::max(report.max_observed, d);
    if (d > bound * (1.0 + 1e-6)) ++report.violations;
  }
  return report;
}

}  // namespace geomedian
