#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "manifold.hpp"
#include "rng.hpp"

namespace geomedian {

/// Finitely supported probability measure: atoms `points[i]` carrying mass
/// `weights[i]`.  Weights are strictly positive and sum to 1 within 1e-12.
struct DiscreteMeasure {
  std::vector<ManifoldPoint> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
};

inline DiscreteMeasure make_measure(const ManifoldDescriptor& m,
                                    std::vector<ManifoldPoint> points,
                                    std::vector<double> weights) {
  if (points.empty()) throw std::invalid_argument("make_measure: needs at least one atom");
  if (points.size() != weights.size())
    throw std::invalid_argument("make_measure: points/weights size mismatch");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w))
      throw std::invalid_argument("make_measure: weights must be positive and finite");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("make_measure: weights must sum to 1 (within 1e-12)");
  for (const auto& p : points) validate_point(m, p);
  return DiscreteMeasure{std::move(points), std::move(weights)};
}

inline DiscreteMeasure uniform_measure(const ManifoldDescriptor& m,
                                       std::vector<ManifoldPoint> points) {
  const std::size_t n = points.size();
  if (n == 0) throw std::invalid_argument("uniform_measure: needs at least one atom");
  return make_measure(m, std::move(points), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

/// Total mass sitting exactly at x, where "exactly" means within kAtomEps
/// in the Riemannian distance.
inline double mass_at(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                      const ManifoldPoint& x) {
  double w = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (distance(m, x, mu.points[i]) < kAtomEps) w += mu.weights[i];
  return w;
}

/// Radius of the smallest closed ball around `center` containing the support.
inline double support_radius(const ManifoldDescriptor& m, const DiscreteMeasure& mu,
                             const ManifoldPoint& center) {
  double r = 0.0;
  for (const auto& p : mu.points) r = std::max(r, distance(m, center, p));
  return r;
}

/// Index of the support point with the smallest weighted sum of distances to
/// the others; ties resolve to the lowest index.  A cheap, always-feasible
/// initial guess for the iterative solvers.
inline std::size_t medoid_index(const ManifoldDescriptor& m, const DiscreteMeasure& mu) {
  std::size_t best = 0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double c = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j)
      c += mu.weights[j] * distance(m, mu.points[i], mu.points[j]);
    if (c < best_cost) {
      best_cost = c;
      best = i;
    }
  }
  return best;
}

/// Samples atom indices with probability proportional to their weights by
/// inverting the cumulative table.
class DiscreteSampler {
 public:
  explicit DiscreteSampler(const DiscreteMeasure& mu) : mu_(&mu) {
    cumulative_.resize(mu.size());
    std::partial_sum(mu.weights.begin(), mu.weights.end(), cumulative_.begin());
    cumulative_.back() = 1.0;
  }

  std::size_t draw_index(detail::Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - cumulative_.begin(), static_cast<std::ptrdiff_t>(cumulative_.size()) - 1));
  }

  const ManifoldPoint& draw(detail::Rng& rng) const { return mu_->points[draw_index(rng)]; }

 private:
  const DiscreteMeasure* mu_;
  std::vector<double> cumulative_;
};

}  // namespace geomedian
