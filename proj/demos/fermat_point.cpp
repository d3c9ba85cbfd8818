// Classic sanity check for the median solver: the Fermat point of a
// triangle, the point minimizing the summed distances to the vertices.
// For an equilateral triangle it is the centroid, so the answer is known
// in closed form and the characterization |H(x)| <= mass at x can be
// watched as it tightens.

#include <cmath>
#include <iostream>

#include <geomedian/estimators.hpp>
#include <geomedian/manifold.hpp>
#include <geomedian/measure.hpp>

using namespace geomedian;

int main() {
  const auto m = euclidean(2);
  const auto mu = uniform_measure(m, {ManifoldPoint{{0.0, 0.0}}, ManifoldPoint{{1.0, 0.0}},
                                      ManifoldPoint{{0.5, std::sqrt(3.0) / 2.0}}});

  const auto center = mu.points[medoid_index(m, mu)];
  const auto ctx = make_ball_context(m, center, 2.0, mu, 0.0, 0.0);
  std::cout << "step cap T = " << step_cap_T(ctx) << "\n\n";

  SolverOptions opts;
  opts.trace_stride = 4;
  const auto res = solve_median_subgradient(m, mu, ctx,
                                            StepSchedule::harmonic(0.5, step_cap_T(ctx)), opts);

  std::cout << "  k      cost          |H|\n";
  for (std::size_t i = 0; i < res.trace.steps.size(); ++i)
    std::cout << "  " << res.trace.steps[i] << "\t " << res.trace.costs[i] << "\t "
              << res.trace.subgradient_norms[i] << '\n';

  const double cx = 0.5, cy = std::sqrt(3.0) / 6.0;
  std::cout << "\nterminated: " << to_string(res.trace.termination) << " after "
            << res.trace.iterations << " iterations\n"
            << "computed Fermat point: (" << res.point.coords[0] << ", " << res.point.coords[1]
            << ")\n"
            << "analytic centroid:     (" << cx << ", " << cy << ")\n"
            << "offset: "
            << std::hypot(res.point.coords[0] - cx, res.point.coords[1] - cy) << '\n'
            << "characterization residual: " << characterization_residual(m, mu, res.point)
            << '\n';
  return 0;
}
