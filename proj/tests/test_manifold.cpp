#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <geomedian/manifold.hpp>

#include "oracles.hpp"

using namespace geomedian;
using Catch::Approx;

namespace {

std::vector<ManifoldDescriptor> survey_manifolds() {
  return {
      euclidean(2),
      euclidean(5),
      positive_reals(1.0),
      positive_reals(4.0),
      poincare_disc(1.0),
      poincare_disc(3.0),
      product({positive_reals(4.0), poincare_disc(3.0), poincare_disc(2.0), poincare_disc(1.0)}),
      product({euclidean(2), positive_reals(2.0), poincare_disc(1.5)}),
  };
}

}  // namespace

TEST_CASE("descriptor factories validate their arguments", "[manifold]") {
  CHECK_THROWS_AS(euclidean(0), std::invalid_argument);
  CHECK_THROWS_AS(positive_reals(0.0), std::invalid_argument);
  CHECK_THROWS_AS(positive_reals(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(poincare_disc(std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(product({}), std::invalid_argument);
  CHECK(euclidean(3).dimension() == 3);
  CHECK(positive_reals(2.0).dimension() == 1);
  CHECK(poincare_disc().dimension() == 2);
  CHECK(product({euclidean(2), poincare_disc()}).dimension() == 4);
}

TEST_CASE("point validation rejects out-of-domain coordinates", "[manifold]") {
  CHECK_THROWS_AS(make_point(euclidean(2), {1.0}), invalid_point_error);
  CHECK_THROWS_AS(make_point(euclidean(2), {1.0, std::nan("")}), invalid_point_error);
  CHECK_THROWS_AS(make_point(positive_reals(), {0.0}), invalid_point_error);
  CHECK_THROWS_AS(make_point(positive_reals(), {-2.0}), invalid_point_error);
  CHECK_THROWS_AS(make_point(poincare_disc(), {1.0, 0.0}), invalid_point_error);
  // Boundary band: modulus exactly 1 - 1e-12 is the last admissible value.
  CHECK_NOTHROW(make_point(poincare_disc(), {1.0 - 1e-12, 0.0}));
  CHECK_THROWS_AS(make_point(poincare_disc(), {1.0 - 1e-13, 0.0}), invalid_point_error);
  CHECK_NOTHROW(make_point(product({positive_reals(2.0), poincare_disc()}), {1.5, 0.3, -0.2}));
}

TEST_CASE("closed-form distances on the factor manifolds", "[manifold]") {
  // Flat factor: plain Euclidean distance.
  CHECK(distance(euclidean(2), {{0.0, 0.0}}, {{3.0, 4.0}}) == Approx(5.0).margin(1e-15));

  // Positive reals with weight w: sqrt(w) |log(Q/P)|.
  CHECK(distance(positive_reals(1.0), {{1.0}}, {{std::exp(1.0)}}) == Approx(1.0).margin(1e-13));
  CHECK(distance(positive_reals(4.0), {{2.0}}, {{2.0 * std::exp(3.0)}}) ==
        Approx(6.0).margin(1e-12));

  // Unit-weight disc: d(0, z) = atanh(|z|); at |z| = 1/2 this is log(3)/2.
  CHECK(distance(poincare_disc(1.0), {{0.0, 0.0}}, {{0.0, 0.5}}) ==
        Approx(0.5493061443340549).margin(1e-15));

  // Moebius-invariant form for generic endpoints.
  const std::complex<double> mu(0.3, -0.1), nu(-0.45, 0.6);
  const double expected = std::atanh(std::abs((nu - mu) / (1.0 - std::conj(mu) * nu)));
  CHECK(distance(poincare_disc(1.0), {{mu.real(), mu.imag()}}, {{nu.real(), nu.imag()}}) ==
        Approx(expected).margin(1e-14));

  // Weight rescales disc distance by sqrt(w).
  CHECK(distance(poincare_disc(9.0), {{0.0, 0.0}}, {{0.0, 0.5}}) ==
        Approx(3.0 * 0.5493061443340549).margin(1e-14));

  // Product metric adds squared factor distances.
  const auto m = product({positive_reals(2.0), poincare_disc(1.0)});
  const double d = distance(m, {{1.0, 0.0, 0.0}}, {{std::exp(1.0), 0.0, 0.5}});
  CHECK(d == Approx(std::sqrt(2.0 + 0.5493061443340549 * 0.5493061443340549)).margin(1e-13));
}

TEST_CASE("exp and log invert each other", "[manifold]") {
  for (const auto& m : survey_manifolds()) {
    detail::Rng rng(detail::mix_seed(17, m.dimension()));
    double worst = 0.0;
    for (int it = 0; it < 1000; ++it) {
      const auto x = oracles::random_point(m, rng);
      const auto y = oracles::random_point(m, rng);
      const auto v = log_map(m, x, y);
      const auto y2 = exp_map(m, x, v);
      worst = std::max(worst, distance(m, y, y2));
      // norm of the log agrees with the distance
      const double d = distance(m, x, y);
      CHECK(norm(m, x, v) == Approx(d).margin(1e-12 * (1.0 + d)));
    }
    INFO("manifold " << m.name());
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("exp is a radial isometry", "[manifold]") {
  // d(x, exp_x(t u)) == t for unit u on Cartan-Hadamard manifolds.
  for (const auto& m : survey_manifolds()) {
    detail::Rng rng(detail::mix_seed(23, m.dimension()));
    for (int it = 0; it < 200; ++it) {
      const auto x = oracles::random_point(m, rng);
      const double t = rng.uniform(0.0, 4.0);
      const auto v = oracles::random_tangent(m, x, rng, t);
      const auto y = exp_map(m, x, v);
      INFO("manifold " << m.name());
      CHECK(distance(m, x, y) == Approx(t).margin(1e-9 * (1.0 + t)));
    }
  }
}

TEST_CASE("geodesic arc length parameterization", "[manifold]") {
  for (const auto& m : survey_manifolds()) {
    detail::Rng rng(detail::mix_seed(31, m.dimension()));
    for (int it = 0; it < 100; ++it) {
      const auto x = oracles::random_point(m, rng);
      const auto y = oracles::random_point(m, rng);
      const double d = distance(m, x, y);
      const double s = rng.uniform() * d;
      const auto z = geodesic_point(m, x, y, s);
      CHECK(distance(m, x, z) == Approx(s).margin(1e-9 * (1.0 + d)));
      CHECK(distance(m, z, y) == Approx(d - s).margin(1e-9 * (1.0 + d)));
    }
    const auto x = oracles::random_point(m, rng);
    const auto y = oracles::random_point(m, rng);
    CHECK_THROWS_AS(geodesic_point(m, x, y, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(geodesic_point(m, x, y, distance(m, x, y) + 0.5), std::invalid_argument);
  }
}

TEST_CASE("geodesics measure and minimize the metric integrand", "[manifold]") {
  // The polyline length under the raw metric integrand must reproduce the
  // claimed distance, and small smooth perturbations must be longer.
  for (const auto& m : survey_manifolds()) {
    detail::Rng rng(detail::mix_seed(47, m.dimension()));
    for (int it = 0; it < 5; ++it) {
      const auto x = oracles::random_point(m, rng, 0.9);
      const auto y = oracles::random_point(m, rng, 0.9);
      const double d = distance(m, x, y);
      if (d < 1e-6) continue;
      const int segments = 2000;
      std::vector<std::vector<double>> path;
      path.reserve(segments + 1);
      for (int i = 0; i <= segments; ++i)
        path.push_back(geodesic_point(m, x, y, d * i / segments).coords);
      const double len = oracles::polyline_length(m, path);
      INFO("manifold " << m.name());
      CHECK(len == Approx(d).epsilon(1e-6));

      // Bump the interior nodes along a coordinate direction; any smooth
      // variation of a minimizing geodesic cannot shorten it.  Skipped in
      // dimension one, where every monotone path has the same length and
      // only quadrature noise would be compared.
      if (m.dimension() < 2) continue;
      for (int axis = 0; axis < std::min(2, m.dimension()); ++axis) {
        auto bent = path;
        for (int i = 1; i < segments; ++i) {
          const double bump = 0.05 * std::sin(3.14159265358979323846 * i / segments);
          bent[i][axis] += bump * std::min(1.0, 0.5 * (1.0 - std::hypot(bent[i][0], bent[i][1])));
        }
        bool valid = true;
        for (int i = 1; i < segments && valid; ++i)
          if (!is_valid_point(m, ManifoldPoint{bent[i]})) valid = false;
        if (!valid) continue;
        CHECK(oracles::polyline_length(m, bent) >= len - 1e-7 * (1.0 + len));
      }
    }
  }
}

TEST_CASE("triangle inequality and symmetry", "[manifold]") {
  for (const auto& m : survey_manifolds()) {
    detail::Rng rng(detail::mix_seed(59, m.dimension()));
    for (int it = 0; it < 200; ++it) {
      const auto x = oracles::random_point(m, rng);
      const auto y = oracles::random_point(m, rng);
      const auto z = oracles::random_point(m, rng);
      const double dxy = distance(m, x, y);
      const double dyx = distance(m, y, x);
      CHECK(std::abs(dxy - dyx) < 1e-13 * (1.0 + dxy));
      CHECK(dxy <= distance(m, x, z) + distance(m, z, y) + 1e-12);
      CHECK(distance(m, x, x) == 0.0);
    }
  }
}

TEST_CASE("inner products respect factor weights", "[manifold]") {
  const auto m = product({positive_reals(3.0), poincare_disc(2.0)});
  const auto x = make_point(m, {2.0, 0.5, 0.0});
  TangentVector u = zero_tangent(m, x);
  u.components = {1.0, 0.2, -0.1};
  TangentVector v = zero_tangent(m, x);
  v.components = {-0.5, 0.0, 0.4};
  const double g_disc = 1.0 - 0.25;
  const double expected = 3.0 * (1.0 * -0.5) / 4.0 + 2.0 * (0.2 * 0.0 + -0.1 * 0.4) / (g_disc * g_disc);
  CHECK(inner(m, x, u, v) == Approx(expected).margin(1e-15));
  CHECK(norm(m, x, u) == Approx(std::sqrt(inner(m, x, u, u))).margin(1e-15));

  TangentVector stray = u;
  stray.base = {1.0, 0.0, 0.0};
  CHECK_THROWS_AS(inner(m, x, stray, v), std::invalid_argument);
  CHECK_THROWS_AS(exp_map(m, x, stray), std::invalid_argument);
}

TEST_CASE("disc exponential saturates instead of overflowing", "[manifold]") {
  const auto m = poincare_disc(1.0);
  const auto x = make_point(m, {0.2, -0.3});
  TangentVector v = zero_tangent(m, x);
  v.components = {1e6, 2e6};
  const auto y = exp_map(m, x, v);
  CHECK(is_valid_point(m, y));
  CHECK(std::hypot(y.coords[0], y.coords[1]) <= kDiscMaxAbs + 1e-15);

  // Zero vector is a fixed point.
  const auto z = exp_map(m, x, zero_tangent(m, x));
  CHECK(z.coords == x.coords);
}

TEST_CASE("default curvature bounds per descriptor", "[manifold]") {
  CHECK(default_curvature_bounds(euclidean(3)) == std::pair<double, double>{0.0, 0.0});
  CHECK(default_curvature_bounds(positive_reals(5.0)) == std::pair<double, double>{0.0, 0.0});
  CHECK(default_curvature_bounds(poincare_disc(1.0)) == std::pair<double, double>{-4.0, -4.0});
  CHECK(default_curvature_bounds(poincare_disc(2.0)) == std::pair<double, double>{-2.0, -2.0});
  const auto tn_like = product({positive_reals(3.0), poincare_disc(2.0), poincare_disc(1.0)});
  CHECK(default_curvature_bounds(tn_like) == std::pair<double, double>{-4.0, 0.0});
}
