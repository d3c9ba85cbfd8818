#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "manifold.hpp"
#include "measure.hpp"
#include "rng.hpp"

namespace geomedian {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Geodesic-ball context

/// Geometry of the problem: measure supported in B(center, support_radius)
/// inside the working ball B(center, radius), with sectional curvature
/// between curvature_lower (delta) and curvature_upper (Delta) there.
struct BallContext {
  ManifoldPoint center;
  double radius = 1.0;
  double support_radius = 0.0;
  double curvature_lower = 0.0;
  double curvature_upper = 0.0;
  double injectivity = kInf;
};

inline void validate_ball_context(const BallContext& ctx) {
  if (!(ctx.radius > 0.0) || !std::isfinite(ctx.radius))
    throw context_error("ball context: radius must be positive and finite");
  if (!(ctx.support_radius >= 0.0) || ctx.support_radius > ctx.radius)
    throw context_error("ball context: support radius must lie in [0, radius]");
  if (!(ctx.curvature_lower <= ctx.curvature_upper))
    throw context_error("ball context: curvature bounds out of order");
  if (!(ctx.injectivity > 0.0)) throw context_error("ball context: injectivity must be positive");
  if (ctx.curvature_upper > 0.0) {
    const double limit = std::min(3.14159265358979323846 / (4.0 * std::sqrt(ctx.curvature_upper)),
                                  ctx.injectivity / 2.0);
    if (!(ctx.radius < limit))
      throw context_error("ball context: radius too large for positive curvature bound");
  }
}

inline BallContext make_ball_context(const ManifoldDescriptor& m, const ManifoldPoint& center,
                                     double radius, const DiscreteMeasure& mu,
                                     double curvature_lower, double curvature_upper,
                                     double injectivity = kInf) {
  validate_point(m, center);
  BallContext ctx{center, radius, support_radius(m, mu, center),
                  curvature_lower, curvature_upper, injectivity};
  validate_ball_context(ctx);
  return ctx;
}

namespace detail {

/// x coth(x), stable through x = 0.
inline double xcoth(double x) {
  const double ax = std::abs(x);
  if (ax < 1e-4) return 1.0 + x * x / 3.0;
  return x / std::tanh(x);
}

/// Isotropic random tangent at x with the requested Riemannian norm.
inline TangentVector random_tangent_of_norm(const ManifoldDescriptor& m, const ManifoldPoint& x,
                                            Rng& rng, double length) {
  TangentVector v = zero_tangent(m, x);
  double n = 0.0;
  while (n == 0.0) {
    for (auto& c : v.components) c = rng.gaussian();
    n = norm(m, x, v);
  }
  for (auto& c : v.components) c *= length / n;
  return v;
}

}  // namespace detail

/// C(rho, delta): 1 when delta >= 0, else 2 rho sqrt(-delta) coth(2 rho sqrt(-delta)).
inline double curvature_constant_c(double rho, double delta) {
  if (delta >= 0.0) return 1.0;
  return detail::xcoth(2.0 * rho * std::sqrt(-delta));
}

/// F(rho, Delta): 1 when Delta >= 0, else cosh(2 rho sqrt(-Delta)).
inline double curvature_constant_f(double rho, double Delta) {
  if (Delta >= 0.0) return 1.0;
  return std::cosh(2.0 * rho * std::sqrt(-Delta));
}

/// Largest safe step for the median subgradient iteration:
/// T = (rho - sigma) / (C(rho, delta) F(rho, Delta) + 1).
inline double step_cap_T(const BallContext& ctx) {
  validate_ball_context(ctx);
  if (!(ctx.support_radius < ctx.radius))
    throw context_error("step_cap_T: support radius must be strictly inside the ball");
  const double c = curvature_constant_c(ctx.radius, ctx.curvature_lower);
  const double f = curvature_constant_f(ctx.radius, ctx.curvature_upper);
  return (ctx.radius - ctx.support_radius) / (c * f + 1.0);
}

// ---------------------------------------------------------------------------
// Step schedules

/// Positive step sequence t_0, t_1, ..; either the capped harmonic family
/// t_k = min(delta_step / (k+1), cap) or an explicit finite sequence.
class StepSchedule {
 public:
  static StepSchedule harmonic(double delta_step, double cap = kInf) {
    if (!(delta_step > 0.0)) throw std::invalid_argument("StepSchedule: delta_step must be > 0");
    if (!(cap > 0.0)) throw std::invalid_argument("StepSchedule: cap must be > 0");
    StepSchedule s;
    s.delta_step_ = delta_step;
    s.cap_ = cap;
    return s;
  }

  static StepSchedule custom(std::vector<double> steps, double cap = kInf) {
    if (steps.empty()) throw std::invalid_argument("StepSchedule: custom sequence is empty");
    if (!(cap > 0.0)) throw std::invalid_argument("StepSchedule: cap must be > 0");
    for (double t : steps)
      if (!(t > 0.0) || !std::isfinite(t))
        throw std::invalid_argument("StepSchedule: steps must be positive and finite");
    StepSchedule s;
    s.steps_ = std::move(steps);
    s.cap_ = cap;
    return s;
  }

  bool is_finite() const { return !steps_.empty(); }
  std::size_t size() const {
    return steps_.empty() ? std::numeric_limits<std::size_t>::max() : steps_.size();
  }

  double step(std::size_t k) const {
    if (!steps_.empty()) {
      if (k >= steps_.size()) throw std::out_of_range("StepSchedule: index past custom sequence");
      return std::min(steps_[k], cap_);
    }
    return std::min(delta_step_ / static_cast<double>(k + 1), cap_);
  }

 private:
  StepSchedule() = default;
  double delta_step_ = 1.0;
  double cap_ = kInf;
  std::vector<double> steps_;
};

// ---------------------------------------------------------------------------
// Solver plumbing

enum class Termination {
  certificate,     // characterization held exactly (residual == 0)
  converged,       // residual fell below tolerance after refinement
  tolerance,       // steps and residual both below tolerance
  max_iterations,  // budget exhausted
};

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::certificate: return "certificate";
    case Termination::converged: return "converged";
    case Termination::tolerance: return "tolerance";
    case Termination::max_iterations: return "max_iterations";
  }
  return "unknown";
}

struct SolverTrace {
  std::vector<std::size_t> steps;       // iteration index of each sample
  std::vector<ManifoldPoint> iterates;  // empty when record_iterates is off
  std::vector<double> costs;            // empty when no cost reference exists
  std::vector<double> subgradient_norms;
  Termination termination = Termination::max_iterations;
  std::size_t iterations = 0;  // total point updates performed
  double final_cost = 0.0;
  double final_residual = 0.0;
};

struct SolverOptions {
  std::size_t max_iterations = 4000;
  double tolerance = 1e-8;
  std::size_t trace_stride = 0;  // 0: choose so that ~256 samples are kept
  bool record_iterates = true;
  // Weiszfeld-type refinement interleaved with the subgradient phase.  The
  // convergence theory needs only the subgradient iteration; refinement
  // exists to reach certificate-grade residuals in far fewer steps, and
  // every accepted refinement step is validated by cost decrease and ball
  // confinement.
  bool polish = true;
  std::size_t polish_interval = 256;       // subgradient steps between refinements
  std::size_t polish_max_iterations = 200;
};

struct SolverResult {
  ManifoldPoint point;
  SolverTrace trace;
};

// ---------------------------------------------------------------------------
// Cost, subgradient, characterization

/// H_p(x) = sum_i w_i d(x, p_i)^p.
inline double cost(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                   const ManifoldPoint& x, double p = 1.0) {
  if (!(p >= 1.0)) throw std::invalid_argument("cost: p must be >= 1");
  double s = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double d = distance(m, x, mu.points[i]);
    if (p == 1.0) s += mu.weights[i] * d;
    else if (p == 2.0) s += mu.weights[i] * d * d;
    else s += mu.weights[i] * std::pow(d, p);
  }
  return s;
}

namespace detail {

struct MedianEval {
  TangentVector H;        // subgradient
  double norm = 0.0;      // |H(x)| in the Riemannian metric
  double mass = 0.0;      // mu{x}
  double inv_sum = 0.0;   // sum of w_i / d_i over non-coincident atoms
  double residual = 0.0;  // max(0, |H| - mu{x})
};

inline MedianEval eval_median(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                              const ManifoldPoint& x) {
  MedianEval ev;
  ev.H = zero_tangent(m, x);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double d = distance(m, x, mu.points[i]);
    if (d < kAtomEps) {
      ev.mass += mu.weights[i];
      continue;
    }
    add_scaled(ev.H, log_map(m, x, mu.points[i]), -mu.weights[i] / d);
    ev.inv_sum += mu.weights[i] / d;
  }
  ev.norm = norm(m, x, ev.H);
  ev.residual = std::max(0.0, ev.norm - ev.mass);
  return ev;
}

}  // namespace detail

/// Subgradient H(x) of the median cost: atoms coinciding with x are
/// excluded, each remaining atom contributes -w_i exp_x^{-1}(p_i)/d(x, p_i).
/// Its weighted norm never exceeds 1.
inline TangentVector median_subgradient(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                                        const ManifoldPoint& x) {
  return detail::eval_median(m, mu, x).H;
}

/// max(0, |H(x)| - mu{x}); zero exactly when x satisfies the median
/// characterization.
inline double characterization_residual(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                                        const ManifoldPoint& x) {
  return detail::eval_median(m, mu, x).residual;
}

/// Riemannian gradient of H_p (p >= 1, away from atoms when p < 2):
/// grad H_p(x) = -p sum_i w_i d_i^{p-2} exp_x^{-1}(p_i).
inline TangentVector pmean_gradient(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                                    const ManifoldPoint& x, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("pmean_gradient: p must be >= 1");
  TangentVector g = zero_tangent(m, x);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double d = distance(m, x, mu.points[i]);
    if (d < kAtomEps) continue;  // removable singularity: the term tends to 0
    add_scaled(g, log_map(m, x, mu.points[i]), -p * mu.weights[i] * std::pow(d, p - 2.0));
  }
  return g;
}

// ---------------------------------------------------------------------------
// Median solver (subgradient phase with certificate-driven refinement)

namespace detail {

struct TraceRecorder {
  SolverTrace* trace;
  std::size_t stride;
  bool record_iterates;

  void sample(std::size_t k, const ManifoldPoint& x, double cost_value, double gnorm,
              bool force = false) {
    if (!force && stride > 1 && k % stride != 0) return;
    if (!trace->steps.empty() && trace->steps.back() == k) return;
    trace->steps.push_back(k);
    if (record_iterates) trace->iterates.push_back(x);
    trace->costs.push_back(cost_value);
    trace->subgradient_norms.push_back(gnorm);
  }
};

inline std::size_t auto_stride(std::size_t n, std::size_t requested) {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, n / 256);
}

}  // namespace detail

/// Median of mu by the subgradient iteration
///   x_{k+1} = exp_{x_k}(-t_k H(x_k)/|H(x_k)|),
/// steps clamped at step_cap_T(ctx) so iterates stay in the ball.  Between
/// subgradient stretches a damped Weiszfeld refinement drives the
/// characterization residual toward zero; if the nearest atom certifies
/// |H| <= mu{atom} the atom itself is returned.
inline SolverResult solve_median_subgradient(const ManifoldDescriptor& m,
                                             const DiscreteMeasure& mu, const BallContext& ctx,
                                             const StepSchedule& schedule,
                                             const ManifoldPoint& x0,
                                             const SolverOptions& opts = {}) {
  validate_point(m, x0);
  const double T = step_cap_T(ctx);
  const double rho = ctx.radius;
  if (distance(m, ctx.center, x0) > rho * (1.0 + 1e-12) + 1e-12)
    throw std::invalid_argument("solve_median_subgradient: x0 outside the context ball");

  const std::size_t n_limit =
      schedule.is_finite() ? std::min(opts.max_iterations, schedule.size()) : opts.max_iterations;

  SolverResult res{x0, {}};
  ManifoldPoint& x = res.point;
  SolverTrace& tr = res.trace;
  detail::TraceRecorder rec{&tr, detail::auto_stride(n_limit, opts.trace_stride),
                            opts.record_iterates};

  const std::size_t snap_gate = 4096;  // skip nearest-atom scans on huge supports
  std::size_t k = 0;                   // total updates (subgradient + refinement)
  std::size_t since_polish = opts.polish_interval;  // refine once before the first stretch
  std::ptrdiff_t last_snap_attempt = -1;

  detail::MedianEval ev = detail::eval_median(m, mu, x);
  double cost_x = cost(m, mu, x);
  rec.sample(0, x, cost_x, ev.norm, true);

  auto finish = [&](Termination t) {
    tr.termination = t;
    tr.iterations = k;
    tr.final_cost = cost_x;
    tr.final_residual = ev.residual;
    rec.sample(k, x, cost_x, ev.norm, true);
    return std::move(res);
  };

  // One damped Weiszfeld pass from the current point; leaves x at the best
  // point found.  Returns true if the residual target was reached.
  auto refine = [&]() -> bool {
    for (std::size_t it = 0; it < opts.polish_max_iterations && k < n_limit; ++it) {
      if (ev.residual <= 0.0 || ev.residual <= opts.tolerance) return true;

      if (mu.size() <= snap_gate) {
        // certificate check at the nearest atom
        std::size_t j = 0;
        double best = kInf;
        for (std::size_t i = 0; i < mu.size(); ++i) {
          const double d = distance(m, x, mu.points[i]);
          if (d < best) {
            best = d;
            j = i;
          }
        }
        if (static_cast<std::ptrdiff_t>(j) != last_snap_attempt) {
          last_snap_attempt = static_cast<std::ptrdiff_t>(j);
          const auto atom_ev = detail::eval_median(m, mu, mu.points[j]);
          if (atom_ev.residual == 0.0) {
            x = mu.points[j];
            ev = atom_ev;
            cost_x = cost(m, mu, x);
            return true;
          }
        }
      }

      if (ev.inv_sum <= 0.0 || ev.norm <= 0.0) return ev.residual <= opts.tolerance;
      // Weiszfeld step toward the tangent-space weighted median, shortened
      // by the mass sitting at x itself
      double step_len = std::max(0.0, ev.norm - ev.mass) / ev.inv_sum;
      bool accepted = false;
      for (int halve = 0; halve < 30 && step_len > 0.0; ++halve) {
        const ManifoldPoint cand = exp_map(m, x, scaled(ev.H, -step_len / ev.norm));
        const double cand_cost = cost(m, mu, cand);
        if (cand_cost <= cost_x && distance(m, ctx.center, cand) <= rho * (1.0 + 1e-9) + 1e-9) {
          const bool progressed = cand_cost < cost_x;
          x = cand;
          cost_x = cand_cost;
          ev = detail::eval_median(m, mu, x);
          ++k;
          rec.sample(k, x, cost_x, ev.norm);
          accepted = progressed;
          break;
        }
        step_len *= 0.5;
      }
      if (!accepted) return ev.residual <= opts.tolerance;
    }
    return ev.residual <= opts.tolerance;
  };

  while (true) {
    if (ev.residual == 0.0) return finish(Termination::certificate);
    if (k >= n_limit) return finish(Termination::max_iterations);

    if (opts.polish && since_polish >= opts.polish_interval) {
      since_polish = 0;
      if (refine())
        return finish(ev.residual == 0.0 ? Termination::certificate : Termination::converged);
      if (k >= n_limit) return finish(Termination::max_iterations);
    }

    const double tk = std::min(schedule.step(k), T);
    if (tk < opts.tolerance && ev.residual < opts.tolerance)
      return finish(Termination::tolerance);

    x = exp_map(m, x, scaled(ev.H, -tk / ev.norm));
    ++k;
    ++since_polish;
    if (distance(m, ctx.center, x) > rho + 1e-9)
      throw diagnostic_error(
          "solve_median_subgradient: iterate escaped the ball; context curvature bounds or "
          "radius are misconfigured");
    ev = detail::eval_median(m, mu, x);
    cost_x = cost(m, mu, x);
    rec.sample(k, x, cost_x, ev.norm);
  }
}

inline SolverResult solve_median_subgradient(const ManifoldDescriptor& m,
                                             const DiscreteMeasure& mu, const BallContext& ctx,
                                             const StepSchedule& schedule,
                                             const SolverOptions& opts = {}) {
  return solve_median_subgradient(m, mu, ctx, schedule, mu.points[medoid_index(m, mu)], opts);
}

// ---------------------------------------------------------------------------
// Error-bound envelopes (shared linear recursion b' = (1 - s t) b + q t^2)

namespace detail {

inline void check_envelope_steps(const StepSchedule& sch, double shrink, std::size_t start,
                                 std::size_t count, const char* who) {
  for (std::size_t j = 0; j + 1 < count; ++j) {
    const double t = sch.step(start + j);
    if (!(shrink * t < 1.0))
      throw precondition_error(std::string(who) +
                               ": step too large for the error recursion (s*t >= 1)");
  }
}

inline std::vector<double> envelope_recursive(double lead, double shrink, double quad,
                                              const StepSchedule& sch, std::size_t start,
                                              std::size_t count) {
  std::vector<double> b(count);
  if (count == 0) return b;
  b[0] = lead;
  for (std::size_t j = 1; j < count; ++j) {
    const double t = sch.step(start + j - 1);
    b[j] = (1.0 - shrink * t) * b[j - 1] + quad * t * t;
  }
  return b;
}

// Direct evaluation of the product/sum closed form, carried in log space:
//   b_{start+j} = lead * prod_{i<j}(1 - s t_{start+i})
//              + q * ( sum_{l=1}^{j-1} t_{start+l-1}^2 prod_{i=l}^{j-1}(..) + t_{start+j-1}^2 ).
inline std::vector<double> envelope_closed_form(double lead, double shrink, double quad,
                                                const StepSchedule& sch, std::size_t start,
                                                std::size_t count) {
  std::vector<double> b(count);
  if (count == 0) return b;
  b[0] = lead;
  // prefix[j] = sum_{i=0}^{j-1} log(1 - s t_{start+i})
  std::vector<double> prefix(count);
  prefix[0] = 0.0;
  for (std::size_t j = 1; j < count; ++j)
    prefix[j] = prefix[j - 1] + std::log1p(-shrink * sch.step(start + j - 1));
  for (std::size_t j = 1; j < count; ++j) {
    double value = lead * std::exp(prefix[j]);
    double tail = 0.0;
    for (std::size_t l = 1; l < j; ++l) {
      const double t = sch.step(start + l - 1);
      tail += t * t * std::exp(prefix[j] - prefix[l]);
    }
    const double t_last = sch.step(start + j - 1);
    b[j] = value + quad * (tail + t_last * t_last);
  }
  return b;
}

}  // namespace detail

/// Deviation envelope for the median iteration: b_N = (rho + sigma)^2 and
/// b_{k+1} = (1 - 2 tau t_k) b_k + C(rho, delta) t_k^2.  Returns
/// [b_N, .., b_{N+count-1}].  tau is the caller's lower bound on the growth
/// constant of f - f_* against squared distance (see
/// estimate_tau_lower_bound).
inline std::vector<double> error_bound_sequence(const BallContext& ctx, const StepSchedule& sch,
                                                double tau, std::size_t start_index,
                                                std::size_t count) {
  if (!(tau > 0.0)) throw std::invalid_argument("error_bound_sequence: tau must be > 0");
  validate_ball_context(ctx);
  detail::check_envelope_steps(sch, 2.0 * tau, start_index, count, "error_bound_sequence");
  const double lead = (ctx.radius + ctx.support_radius) * (ctx.radius + ctx.support_radius);
  return detail::envelope_recursive(lead, 2.0 * tau,
                                    curvature_constant_c(ctx.radius, ctx.curvature_lower), sch,
                                    start_index, count);
}

inline std::vector<double> error_bound_sequence_closed_form(const BallContext& ctx,
                                                            const StepSchedule& sch, double tau,
                                                            std::size_t start_index,
                                                            std::size_t count) {
  if (!(tau > 0.0)) throw std::invalid_argument("error_bound_sequence: tau must be > 0");
  validate_ball_context(ctx);
  detail::check_envelope_steps(sch, 2.0 * tau, start_index, count, "error_bound_sequence");
  const double lead = (ctx.radius + ctx.support_radius) * (ctx.radius + ctx.support_radius);
  return detail::envelope_closed_form(lead, 2.0 * tau,
                                      curvature_constant_c(ctx.radius, ctx.curvature_lower), sch,
                                      start_index, count);
}

/// Empirical lower bound for tau: the smallest observed ratio
/// (f(x) - f_*) / d^2(x, m) over random ball points, shrunk by 5%.
inline double estimate_tau_lower_bound(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                                       const ManifoldPoint& median, double f_star,
                                       const BallContext& ctx, std::size_t samples,
                                       std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("estimate_tau_lower_bound: samples must be > 0");
  detail::Rng rng(seed);
  double worst = kInf;
  std::size_t used = 0;
  for (std::size_t attempt = 0; used < samples; ++attempt) {
    if (attempt > 1000 * samples)
      throw precondition_error("estimate_tau_lower_bound: could not sample away from the median");
    const double len = ctx.radius * std::sqrt(rng.uniform());
    const auto x = exp_map(m, ctx.center, detail::random_tangent_of_norm(m, ctx.center, rng, len));
    const double d = distance(m, x, median);
    if (d < 1e-3 * ctx.radius) continue;  // ratio is noise-dominated near m
    ++used;
    worst = std::min(worst, (cost(m, mu, x) - f_star) / (d * d));
  }
  if (!(worst > 0.0))
    throw precondition_error(
        "estimate_tau_lower_bound: sampled cost dips below f_star; median or f_star is wrong");
  return 0.95 * worst;
}

// ---------------------------------------------------------------------------
// Gradient descent for p-means (p > 1)

/// C(beta, r, p) of the descent error bounds; beta = sqrt(-delta) for the
/// lower curvature bound delta <= 0.
inline double descent_curvature_constant(double beta, double r, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("descent_curvature_constant: p must be > 1");
  const double bc = detail::xcoth(2.0 * beta * r) / (2.0 * r);  // beta coth(2 beta r)
  if (p < 2.0) return p * p * std::pow(2.0 * r, 2.0 * p - 1.0) * bc;
  return p * p * p * std::pow(2.0 * r, 3.0 * p - 4.0) * (detail::xcoth(2.0 * beta * r) + p - 2.0);
}

/// Step cap guaranteeing the deterministic p-mean descent stays in the ball:
/// p eps^{p+1} / (pi p^2 (2r)^{2p-1} beta coth(2 beta r) + p eps^p) with
/// eps = (r - sigma)/2.
inline double gd_step_cap(const BallContext& ctx, double p) {
  if (!(p > 1.0)) throw std::invalid_argument("gd_step_cap: p must be > 1");
  validate_ball_context(ctx);
  if (!(ctx.support_radius < ctx.radius))
    throw context_error("gd_step_cap: support radius must be strictly inside the ball");
  const double r = ctx.radius;
  const double eps = (r - ctx.support_radius) / 2.0;
  const double beta = std::sqrt(std::max(0.0, -ctx.curvature_lower));
  const double bc = detail::xcoth(2.0 * beta * r) / (2.0 * r);
  constexpr double pi = 3.14159265358979323846;
  return p * std::pow(eps, p + 1.0) /
         (pi * p * p * std::pow(2.0 * r, 2.0 * p - 1.0) * bc + p * std::pow(eps, p));
}

/// Validates the radius restriction of Assumption 1 for the ball context.
inline void validate_pmean_context(const BallContext& ctx, double p) {
  validate_ball_context(ctx);
  if (ctx.curvature_upper <= 0.0) return;  // r_{alpha,p} is infinite up to injectivity
  const double alpha = std::sqrt(ctx.curvature_upper);
  constexpr double pi = 3.14159265358979323846;
  const double arc = (p < 2.0) ? pi / (2.0 * alpha) : pi / alpha;
  if (!(ctx.radius < 0.5 * std::min(ctx.injectivity, arc)))
    throw precondition_error("pmean context: radius violates the curvature restriction");
}

/// Gradient descent x_{k+1} = exp_{x_k}(-t_k grad H_p(x_k)) for p > 1.  The
/// schedule is applied as given; gd_step_cap(ctx, p) yields the largest
/// step with the full confinement guarantee, and escape is diagnosed when a
/// cap-respecting run leaves the ball anyway.
inline SolverResult solve_pmean_gradient(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                                         const BallContext& ctx, double p,
                                         const StepSchedule& schedule, const ManifoldPoint& x0,
                                         const SolverOptions& opts = {}) {
  if (!(p > 1.0))
    throw std::invalid_argument("solve_pmean_gradient: p must be > 1 (use the subgradient "
                                "solver for medians)");
  validate_pmean_context(ctx, p);
  validate_point(m, x0);
  if (distance(m, ctx.center, x0) > ctx.radius * (1.0 + 1e-12) + 1e-12)
    throw std::invalid_argument("solve_pmean_gradient: x0 outside the context ball");

  const double cap = ctx.support_radius < ctx.radius ? gd_step_cap(ctx, p) : 0.0;
  const std::size_t n_limit =
      schedule.is_finite() ? std::min(opts.max_iterations, schedule.size()) : opts.max_iterations;

  SolverResult res{x0, {}};
  ManifoldPoint& x = res.point;
  SolverTrace& tr = res.trace;
  detail::TraceRecorder rec{&tr, detail::auto_stride(n_limit, opts.trace_stride),
                            opts.record_iterates};

  bool within_cap = true;
  std::size_t k = 0;
  TangentVector g = pmean_gradient(m, mu, x, p);
  double gn = norm(m, x, g);
  double cost_x = cost(m, mu, x, p);
  rec.sample(0, x, cost_x, gn, true);

  auto finish = [&](Termination t) {
    tr.termination = t;
    tr.iterations = k;
    tr.final_cost = cost_x;
    tr.final_residual = gn;
    rec.sample(k, x, cost_x, gn, true);
    return std::move(res);
  };

  while (true) {
    if (gn <= opts.tolerance) return finish(Termination::converged);
    if (k >= n_limit) return finish(Termination::max_iterations);
    const double tk = schedule.step(k);
    within_cap = within_cap && tk <= cap * (1.0 + 1e-12);
    x = exp_map(m, x, scaled(g, -tk));
    ++k;
    const double excess = distance(m, ctx.center, x);
    if (within_cap && excess > ctx.radius + 1e-9)
      throw diagnostic_error(
          "solve_pmean_gradient: cap-respecting iterate escaped the ball; context is "
          "misconfigured");
    if (excess > 4.0 * ctx.radius + 1.0)
      throw diagnostic_error("solve_pmean_gradient: iterate diverged far outside the ball");
    g = pmean_gradient(m, mu, x, p);
    gn = norm(m, x, g);
    cost_x = cost(m, mu, x, p);
    rec.sample(k, x, cost_x, gn);
  }
}

inline SolverResult solve_pmean_gradient(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                                         const BallContext& ctx, double p,
                                         const StepSchedule& schedule,
                                         const SolverOptions& opts = {}) {
  return solve_pmean_gradient(m, mu, ctx, p, schedule, mu.points[medoid_index(m, mu)], opts);
}

/// Descent error envelopes: values[j] bounds, at iteration j,
/// rho^2(x_j, e_p) when 1 < p < 2 (lead 4r^2) or the cost gap
/// H_p(x_j) - H_p(e_p) when p >= 2 (lead (2r)^p).  c_pmuk is the caller's
/// convexity-type constant; every step must satisfy t_k < 1/c_pmuk.
struct GdErrorBounds {
  std::vector<double> values;
  bool bounds_squared_distance = true;
};

inline GdErrorBounds gd_error_bounds(const BallContext& ctx, double p, const StepSchedule& sch,
                                     double c_pmuk, std::size_t count) {
  if (!(p > 1.0)) throw std::invalid_argument("gd_error_bounds: p must be > 1");
  if (!(c_pmuk > 0.0)) throw std::invalid_argument("gd_error_bounds: c_pmuk must be > 0");
  validate_ball_context(ctx);
  detail::check_envelope_steps(sch, c_pmuk, 0, count, "gd_error_bounds");
  const double r = ctx.radius;
  const double beta = std::sqrt(std::max(0.0, -ctx.curvature_lower));
  const double lead = (p < 2.0) ? 4.0 * r * r : std::pow(2.0 * r, p);
  return {detail::envelope_recursive(lead, c_pmuk, descent_curvature_constant(beta, r, p), sch,
                                     0, count),
          p < 2.0};
}

inline GdErrorBounds gd_error_bounds_closed_form(const BallContext& ctx, double p,
                                                 const StepSchedule& sch, double c_pmuk,
                                                 std::size_t count) {
  if (!(p > 1.0)) throw std::invalid_argument("gd_error_bounds: p must be > 1");
  if (!(c_pmuk > 0.0)) throw std::invalid_argument("gd_error_bounds: c_pmuk must be > 0");
  validate_ball_context(ctx);
  detail::check_envelope_steps(sch, c_pmuk, 0, count, "gd_error_bounds");
  const double r = ctx.radius;
  const double beta = std::sqrt(std::max(0.0, -ctx.curvature_lower));
  const double lead = (p < 2.0) ? 4.0 * r * r : std::pow(2.0 * r, p);
  return {detail::envelope_closed_form(lead, c_pmuk, descent_curvature_constant(beta, r, p), sch,
                                       0, count),
          p < 2.0};
}

/// Empirical lower bound for the descent constant: smallest observed
/// <grad H_p(x), -exp_x^{-1} e_p> / d^2(x, e_p) over random ball points,
/// shrunk by 5%.
inline double estimate_gd_constant(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                                   const ManifoldPoint& e_p, const BallContext& ctx, double p,
                                   std::size_t samples, std::uint64_t seed) {
  if (samples == 0) throw std::invalid_argument("estimate_gd_constant: samples must be > 0");
  detail::Rng rng(seed);
  double worst = kInf;
  std::size_t used = 0;
  for (std::size_t attempt = 0; used < samples; ++attempt) {
    if (attempt > 1000 * samples)
      throw precondition_error("estimate_gd_constant: could not sample away from e_p");
    const double len = ctx.radius * std::sqrt(rng.uniform());
    const auto x = exp_map(m, ctx.center, detail::random_tangent_of_norm(m, ctx.center, rng, len));
    const double d = distance(m, x, e_p);
    if (d < 1e-3 * ctx.radius) continue;
    ++used;
    const auto g = pmean_gradient(m, mu, x, p);
    const double q = -inner(m, x, g, log_map(m, x, e_p)) / (d * d);
    worst = std::min(worst, q);
  }
  if (!(worst > 0.0))
    throw precondition_error(
        "estimate_gd_constant: gradient field not contracting toward the supplied e_p");
  return 0.95 * worst;
}

// ---------------------------------------------------------------------------
// Stochastic solver (one-sample-per-step random walk)

/// Sample stream for the stochastic solver: an endless stream drawn from a
/// measure, a finite recorded sequence, or a caller-supplied generator.
class SampleSource {
 public:
  static SampleSource from_measure(DiscreteMeasure mu) {
    SampleSource s;
    s.measure_ = std::make_shared<DiscreteMeasure>(std::move(mu));
    s.sampler_.emplace(*s.measure_);
    return s;
  }

  static SampleSource from_sequence(const ManifoldDescriptor& m,
                                    std::vector<ManifoldPoint> seq) {
    if (seq.empty()) throw std::invalid_argument("SampleSource: empty sequence");
    SampleSource s;
    s.measure_ = std::make_shared<DiscreteMeasure>(uniform_measure(m, seq));
    s.sequence_ = std::move(seq);
    return s;
  }

  static SampleSource from_generator(
      std::function<std::optional<ManifoldPoint>(detail::Rng&)> gen) {
    SampleSource s;
    s.generator_ = std::move(gen);
    return s;
  }

  std::optional<ManifoldPoint> next(detail::Rng& rng) {
    if (generator_) return generator_(rng);
    if (!sequence_.empty()) {
      if (cursor_ >= sequence_.size()) return std::nullopt;
      return sequence_[cursor_++];
    }
    return sampler_->draw(rng);
  }

  /// Empirical measure the stream represents; null for raw generators.
  const DiscreteMeasure* cost_measure() const { return measure_.get(); }

 private:
  SampleSource() = default;
  std::shared_ptr<DiscreteMeasure> measure_;
  std::optional<DiscreteSampler> sampler_;
  std::vector<ManifoldPoint> sequence_;
  std::size_t cursor_ = 0;
  std::function<std::optional<ManifoldPoint>(detail::Rng&)> generator_;
};

/// Step cap keeping the stochastic walk inside the ball in expectation:
/// min(1/c_pmuk, (r - sigma)/(2p (2r)^{p-1})).
/// Pass NaN for c_pmuk when the constant is unknown; only the second term is
/// used then (see the schedule notes: the constant is configuration, not
/// derived).
inline double stochastic_step_cap(const BallContext& ctx, double p,
                                  double c_pmuk = std::numeric_limits<double>::quiet_NaN()) {
  if (!(p >= 1.0)) throw std::invalid_argument("stochastic_step_cap: p must be >= 1");
  validate_ball_context(ctx);
  if (!(ctx.support_radius < ctx.radius))
    throw context_error("stochastic_step_cap: support radius must be strictly inside the ball");
  const double gap = ctx.radius - ctx.support_radius;
  const double cap = gap / (2.0 * p * std::pow(2.0 * ctx.radius, p - 1.0));
  if (std::isnan(c_pmuk)) return cap;
  if (!(c_pmuk > 0.0)) throw std::invalid_argument("stochastic_step_cap: c_pmuk must be > 0");
  return std::min(cap, 1.0 / c_pmuk);
}

/// Stochastic gradient walk X_{k+1} = exp_{X_k}(-t_{k+1} grad F_p(., P_{k+1}))
/// with P i.i.d. from the source; grad F_p(., x) at x itself is zero by
/// convention.  The schedule is applied verbatim (schedule.step(k) is the
/// step taken after drawing sample k+1), which keeps the Euclidean p=2,
/// t_k = 1/(2k) chain equal to the running empirical mean exactly.
inline SolverResult solve_pmean_stochastic(const ManifoldDescriptor& m, SampleSource source,
                                           const BallContext& ctx, double p,
                                           const StepSchedule& schedule, const ManifoldPoint& x0,
                                           std::uint64_t seed, const SolverOptions& opts = {}) {
  if (!(p >= 1.0)) throw std::invalid_argument("solve_pmean_stochastic: p must be >= 1");
  validate_ball_context(ctx);
  validate_point(m, x0);
  if (distance(m, ctx.center, x0) > ctx.radius * (1.0 + 1e-12) + 1e-12)
    throw std::invalid_argument("solve_pmean_stochastic: x0 outside the context ball");

  const std::size_t n_limit =
      schedule.is_finite() ? std::min(opts.max_iterations, schedule.size()) : opts.max_iterations;
  const DiscreteMeasure* cost_ref = source.cost_measure();

  SolverResult res{x0, {}};
  ManifoldPoint& x = res.point;
  SolverTrace& tr = res.trace;
  detail::TraceRecorder rec{&tr, detail::auto_stride(n_limit, opts.trace_stride),
                            opts.record_iterates};
  // costs are recorded against the stream's empirical measure when known
  auto cost_at = [&](const ManifoldPoint& y) {
    return cost_ref ? cost(m, *cost_ref, y, p) : 0.0;
  };

  detail::Rng rng(seed);
  double gn = 0.0;
  rec.sample(0, x, cost_at(x), 0.0, true);
  std::size_t k = 0;
  for (; k < n_limit; ++k) {
    auto drawn = source.next(rng);
    if (!drawn)
      throw sampler_exhausted_error("solve_pmean_stochastic: sample source exhausted at step " +
                                    std::to_string(k));
    const double t = schedule.step(k);
    const double d = distance(m, x, *drawn);
    if (d > 0.0) {
      TangentVector g = scaled(log_map(m, x, *drawn), -p * std::pow(d, p - 2.0));
      gn = norm(m, x, g);
      x = exp_map(m, x, scaled(g, -t));
    } else {
      gn = 0.0;
    }
    rec.sample(k + 1, x, cost_at(x), gn);
  }
  tr.termination = Termination::max_iterations;
  tr.iterations = k;
  tr.final_cost = cost_at(x);
  tr.final_residual = gn;
  rec.sample(k, x, tr.final_cost, gn, true);
  return res;
}

inline SolverResult solve_pmean_stochastic(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                                           const BallContext& ctx, double p,
                                           const StepSchedule& schedule, const ManifoldPoint& x0,
                                           std::uint64_t seed, const SolverOptions& opts = {}) {
  return solve_pmean_stochastic(m, SampleSource::from_measure(mu), ctx, p, schedule, x0, seed,
                                opts);
}

// ---------------------------------------------------------------------------
// Fluctuation chain (tangent-space renormalization of the stochastic walk)

/// Y_k^n = (k / sqrt(n)) exp_{e_p}^{-1} X_k for every step of a stride-1
/// trace.  Requires the trace to have recorded every iterate.
inline std::vector<TangentVector> fluctuation_chain(const ManifoldDescriptor& m,
                                                    const SolverTrace& trace,
                                                    const ManifoldPoint& e_p, std::size_t n) {
  if (n == 0) throw std::invalid_argument("fluctuation_chain: n must be >= 1");
  validate_point(m, e_p);
  if (trace.iterates.size() != trace.steps.size())
    throw std::invalid_argument("fluctuation_chain: trace has no recorded iterates");
  for (std::size_t i = 0; i < trace.steps.size(); ++i)
    if (trace.steps[i] != i)
      throw std::invalid_argument("fluctuation_chain: trace must be recorded at stride 1");
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<TangentVector> out;
  out.reserve(trace.iterates.size());
  for (std::size_t i = 0; i < trace.iterates.size(); ++i)
    out.push_back(scaled(log_map(m, e_p, trace.iterates[i]), static_cast<double>(i) / root_n));
  return out;
}

// ---------------------------------------------------------------------------
// Lipschitz necessary condition and brute-force oracle

/// Necessary condition for medianhood over 1-Lipschitz probe functions
/// d(., q): checks d(x, q) <= f_star + sum_i w_i d(p_i, q) + slack for every
/// probe q.  When f_star is not supplied, cost(mu, x) is used, which keeps
/// "false" a proof of non-medianhood but weakens the test.
inline bool lipschitz_median_check(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                                   const ManifoldPoint& x,
                                   const std::vector<ManifoldPoint>& probes,
                                   std::optional<double> f_star = std::nullopt,
                                   double slack = 1e-9) {
  validate_point(m, x);
  const double fs = f_star ? *f_star : cost(m, mu, x);
  for (const auto& q : probes) {
    double integral = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i)
      integral += mu.weights[i] * distance(m, mu.points[i], q);
    if (distance(m, x, q) > fs + integral + slack) return false;
  }
  return true;
}

/// Axis-aligned search region in flat coordinates.
struct GridRegion {
  std::vector<double> lo, hi;
};

/// Exhaustive grid minimizer of the p-cost with self-refining grids; the
/// reference oracle for the iterative solvers.  Deterministic: on exact
/// cost ties the lexicographically smallest grid point wins.
inline ManifoldPoint brute_force_median(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                                        const GridRegion& region, int resolution, double p = 1.0,
                                        int refine_levels = 8,
                                        std::size_t budget = 40000000) {
  const int dim = m.dimension();
  if (dim > 4)
    throw std::invalid_argument("brute_force_median: only low-dimensional manifolds (dim <= 4)");
  if (static_cast<int>(region.lo.size()) != dim || static_cast<int>(region.hi.size()) != dim)
    throw std::invalid_argument("brute_force_median: region dimension mismatch");
  for (int i = 0; i < dim; ++i)
    if (!(region.lo[i] < region.hi[i]))
      throw std::invalid_argument("brute_force_median: empty region");
  if (resolution < 2) throw std::invalid_argument("brute_force_median: resolution must be >= 2");
  double total = 1.0;
  for (int i = 0; i < dim; ++i) total *= resolution;
  if (total > static_cast<double>(budget))
    throw budget_error("brute_force_median: grid exceeds the evaluation budget");

  std::vector<double> lo = region.lo, hi = region.hi;
  ManifoldPoint best;
  double best_cost = kInf;
  for (int level = 0; level < refine_levels; ++level) {
    ManifoldPoint level_best;
    double level_cost = kInf;
    std::vector<int> idx(dim, 0);
    std::vector<double> coords(dim);
    while (true) {
      for (int i = 0; i < dim; ++i)
        coords[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / (resolution - 1);
      ManifoldPoint candidate{coords};
      if (is_valid_point(m, candidate)) {
        const double c = cost(m, mu, candidate, p);
        if (c < level_cost) {
          level_cost = c;
          level_best = candidate;
        }
      }
      int axis = dim - 1;
      while (axis >= 0 && ++idx[axis] == resolution) idx[axis--] = 0;
      if (axis < 0) break;
    }
    if (!std::isfinite(level_cost))
      throw std::invalid_argument("brute_force_median: no valid grid point in the region");
    if (level_cost < best_cost) {
      best_cost = level_cost;
      best = level_best;
    }
    // shrink around the level winner, staying inside the original region
    for (int i = 0; i < dim; ++i) {
      const double cell = (hi[i] - lo[i]) / (resolution - 1);
      const double half = 1.5 * cell;
      lo[i] = std::max(region.lo[i], level_best.coords[i] - half);
      hi[i] = std::min(region.hi[i], level_best.coords[i] + half);
      if (!(lo[i] < hi[i])) {
        lo[i] = level_best.coords[i] - 1e-15;
        hi[i] = level_best.coords[i] + 1e-15;
      }
    }
  }
  return best;
}

}  // namespace geomedian
