#include <catch2/catch_amalgamated.hpp>

#include <geomedian/measure.hpp>

#include "oracles.hpp"

using namespace geomedian;
using Catch::Approx;

TEST_CASE("measure construction enforces the probability contract", "[measure]") {
  const auto m = euclidean(2);
  std::vector<ManifoldPoint> pts = {{{0.0, 0.0}}, {{1.0, 0.0}}};
  CHECK_THROWS_AS(make_measure(m, {}, {}), std::invalid_argument);
  CHECK_THROWS_AS(make_measure(m, pts, {0.5}), std::invalid_argument);
  CHECK_THROWS_AS(make_measure(m, pts, {0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(make_measure(m, pts, {1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(make_measure(m, pts, {1.2, -0.2}), std::invalid_argument);
  CHECK_NOTHROW(make_measure(m, pts, {0.25, 0.75}));

  const auto mu = uniform_measure(m, pts);
  CHECK(mu.weights[0] == Approx(0.5).margin(1e-16));

  std::vector<ManifoldPoint> bad = {{{0.0}}};
  CHECK_THROWS_AS(uniform_measure(m, bad), invalid_point_error);
}

TEST_CASE("mass at a point counts coincident atoms", "[measure]") {
  const auto m = euclidean(1);
  const auto mu = make_measure(m, {{{0.0}}, {{0.0}}, {{2.0}}}, {0.25, 0.25, 0.5});
  CHECK(mass_at(m, mu, {{0.0}}) == Approx(0.5).margin(1e-16));
  CHECK(mass_at(m, mu, {{2.0}}) == Approx(0.5).margin(1e-16));
  CHECK(mass_at(m, mu, {{1.0}}) == 0.0);
  // within the atom tolerance counts as the same point
  CHECK(mass_at(m, mu, {{1e-15}}) == Approx(0.5).margin(1e-16));
}

TEST_CASE("support radius and medoid", "[measure]") {
  const auto m = euclidean(2);
  const auto mu = uniform_measure(m, {{{0.0, 0.0}}, {{1.0, 0.0}}, {{0.0, 2.0}}});
  CHECK(support_radius(m, mu, {{0.0, 0.0}}) == Approx(2.0).margin(1e-15));
  // the origin is closest on average to the other two atoms
  CHECK(medoid_index(m, mu) == 0);

  const auto heavy = make_measure(m, {{{0.0, 0.0}}, {{10.0, 0.0}}}, {0.01, 0.99});
  CHECK(medoid_index(m, heavy) == 1);
}

TEST_CASE("discrete sampler reproduces the weights", "[measure]") {
  const auto m = euclidean(1);
  const auto mu = make_measure(m, {{{0.0}}, {{1.0}}, {{2.0}}}, {0.2, 0.3, 0.5});
  DiscreteSampler sampler(mu);
  detail::Rng rng(99);
  std::vector<int> counts(3, 0);
  const int n = 200000;
  for (int i = 0; i < n; ++i) ++counts[sampler.draw_index(rng)];
  CHECK(counts[0] / double(n) == Approx(0.2).margin(0.005));
  CHECK(counts[1] / double(n) == Approx(0.3).margin(0.005));
  CHECK(counts[2] / double(n) == Approx(0.5).margin(0.005));
}
