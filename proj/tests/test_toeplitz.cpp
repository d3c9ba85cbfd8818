#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <geomedian/toeplitz.hpp>

#include "oracles.hpp"

using namespace geomedian;
using namespace geomedian::toeplitz;
using Catch::Approx;

namespace {

ReflectionCoords random_coords(int n, detail::Rng& rng, double max_abs = 0.9) {
  ReflectionCoords c;
  c.P0 = std::exp(rng.uniform(-2.0, 2.0));
  for (int k = 1; k < n; ++k) {
    const double r = max_abs * std::sqrt(rng.uniform());
    const double a = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    c.mu.emplace_back(r * std::cos(a), r * std::sin(a));
  }
  return c;
}

// k-by-k upper-left corner of the full matrix.
oracles::Matrix corner(const oracles::Matrix& m, int k) {
  oracles::Matrix out(k, std::vector<cplx>(k));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) out[i][j] = m[i][j];
  return out;
}

}  // namespace

TEST_CASE("tn_manifold layout and weights", "[toeplitz]") {
  const auto t1 = tn_manifold(1);
  CHECK(t1.kind == ManifoldKind::positive_reals);
  CHECK(t1.dimension() == 1);

  const auto t4 = tn_manifold(4);
  REQUIRE(t4.kind == ManifoldKind::product);
  REQUIRE(t4.factors.size() == 4);
  CHECK(t4.factors[0].kind == ManifoldKind::positive_reals);
  CHECK(t4.factors[0].weight == 4.0);
  for (int k = 1; k <= 3; ++k) {
    CHECK(t4.factors[k].kind == ManifoldKind::poincare_disc);
    CHECK(t4.factors[k].weight == double(4 - k));
  }
  CHECK(t4.dimension() == 7);
  CHECK_THROWS_AS(tn_manifold(0), std::invalid_argument);
}

TEST_CASE("reflection coordinates round-trip the matrix", "[toeplitz]") {
  detail::Rng rng(2024);
  for (int n = 1; n <= 8; ++n) {
    for (int rep = 0; rep < 50; ++rep) {
      const auto c = random_coords(n, rng);
      const auto t = phi_inv(c);
      REQUIRE(t.order() == n);
      const auto c2 = phi(t);
      CHECK(c2.P0 == Approx(c.P0).epsilon(1e-10));
      for (int k = 0; k < n - 1; ++k)
        CHECK(std::abs(c2.mu[k] - c.mu[k]) < 1e-10);

      // and the other direction, through the first column
      const auto t2 = phi_inv(c2);
      for (int k = 0; k < n; ++k)
        CHECK(std::abs(t2.first_column[k] - t.first_column[k]) <
              1e-10 * (1.0 + std::abs(t.first_column[k])));
    }
  }
}

TEST_CASE("phi agrees with the determinant-ratio expression", "[toeplitz]") {
  // mu_k = (-1)^k det(S_k) / det(R_k) with R_k the k-by-k corner and S_k the
  // (k+1)-corner stripped of its first row and last column.
  detail::Rng rng(7);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 2 + int(rng.uniform() * 6.0);
    const auto c = random_coords(n, rng, 0.85);
    const auto t = phi_inv(c);
    const auto m = oracles::toeplitz_from_first_column(t.first_column);
    for (int k = 1; k <= n - 1; ++k) {
      oracles::Matrix sk(k, std::vector<cplx>(k));
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) sk[i][j] = m[i + 1][j];
      const cplx det_sk = oracles::lu_det(sk);
      const cplx det_rk = oracles::lu_det(corner(m, k));
      const cplx mu_oracle = ((k % 2) ? -1.0 : 1.0) * det_sk / det_rk;
      CHECK(std::abs(mu_oracle - c.mu[k - 1]) < 1e-8 * (1.0 + std::abs(mu_oracle)));
    }
    // P_k = det R_{k+1} / det R_k equals P0 prod (1 - |mu|^2)
    double P = c.P0;
    for (int k = 1; k <= n - 1; ++k) {
      P *= 1.0 - std::norm(c.mu[k - 1]);
      const cplx ratio = oracles::lu_det(corner(m, k + 1)) / oracles::lu_det(corner(m, k));
      CHECK(std::abs(ratio.imag()) < 1e-8 * std::abs(ratio));
      CHECK(ratio.real() == Approx(P).epsilon(1e-8));
    }
  }
}

TEST_CASE("log determinant and Kaehler potential", "[toeplitz]") {
  detail::Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 1 + int(rng.uniform() * 8.0);
    const auto c = random_coords(n, rng, 0.85);
    const auto m = oracles::toeplitz_from_first_column(phi_inv(c).first_column);
    const cplx det = oracles::lu_det(m);
    CHECK(std::abs(det.imag()) < 1e-9 * std::abs(det));
    CHECK(log_det(c) == Approx(std::log(det.real())).margin(1e-8));
    const double pi = 3.14159265358979323846;
    CHECK(kahler_potential(c) ==
          Approx(-std::log(det.real()) - n * std::log(pi * std::exp(1.0))).margin(1e-8));
  }
  // order 2 spot value: det = P0^2 (1 - |mu1|^2)
  ReflectionCoords c2{1.0, {cplx(0.5, 0.0)}};
  CHECK(kahler_potential(c2) ==
        Approx(-std::log(0.75) - 2.0 * std::log(3.14159265358979323846 * std::exp(1.0)))
            .margin(1e-12));
}

TEST_CASE("phi rejects matrices that are not positive definite", "[toeplitz]") {
  CHECK_THROWS_AS(phi(ToeplitzHPD{{cplx(-1.0, 0.0)}}), decomposition_error);
  CHECK_THROWS_AS(phi(ToeplitzHPD{{cplx(1.0, 0.5)}}), std::invalid_argument);
  try {
    phi(ToeplitzHPD{{1.0, 2.0}});
    FAIL("expected decomposition_error");
  } catch (const decomposition_error& e) {
    CHECK(e.order() == 1);
  }
  try {
    phi(ToeplitzHPD{{1.0, 0.9, -0.9}});
    FAIL("expected decomposition_error");
  } catch (const decomposition_error& e) {
    CHECK(e.order() == 2);
  }
  CHECK_THROWS_AS(phi_inv(ReflectionCoords{-1.0, {}}), std::invalid_argument);
  CHECK_THROWS_AS(phi_inv(ReflectionCoords{1.0, {cplx(1.0, 0.0)}}), std::invalid_argument);
}

TEST_CASE("prediction coefficients solve the Yule-Walker system", "[toeplitz]") {
  detail::Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 2 + int(rng.uniform() * 6.0);
    const auto c = random_coords(n, rng, 0.85);
    const auto m = oracles::toeplitz_from_first_column(phi_inv(c).first_column);
    const auto a = reflection_to_prediction(c.mu);
    REQUIRE(a.size() == std::size_t(n - 1));

    // rows 2..n of the corner system give  M[i][0] + sum_j M[i][j] a_j = 0
    const int k = n - 1;
    oracles::Matrix sys(k, std::vector<cplx>(k));
    std::vector<cplx> rhs(k);
    for (int i = 0; i < k; ++i) {
      rhs[i] = -m[i + 1][0];
      for (int j = 0; j < k; ++j) sys[i][j] = m[i + 1][j + 1];
    }
    const auto sol = oracles::lu_solve(sys, rhs);
    for (int j = 0; j < k; ++j)
      CHECK(std::abs(sol[j] - a[j]) < 1e-8 * (1.0 + std::abs(sol[j])));

    // step-down recursion inverts the step-up
    const auto mu_back = prediction_to_reflection(a);
    for (int j = 0; j < k; ++j) CHECK(std::abs(mu_back[j] - c.mu[j]) < 1e-10);

    // prediction error from the system matches the product form
    cplx P = m[0][0];
    for (int j = 0; j < k; ++j) P += m[0][j + 1] * a[j];
    CHECK(P.real() == Approx(final_prediction_error(c)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(prediction_to_reflection(std::vector<cplx>{cplx(1.5, 0.0)}),
                  std::invalid_argument);
}

TEST_CASE("Burg estimates an AR(1) pole", "[toeplitz]") {
  const double a = 0.7;
  detail::Rng rng(31415);
  std::vector<cplx> x;
  cplx prev = 0.0;
  for (int t = 0; t < 20500; ++t) {
    prev = a * prev + rng.complex_gaussian();
    if (t >= 500) x.push_back(prev);
  }
  const auto c = burg_reflection(x, 2);
  CHECK(std::abs(c.mu[0] - cplx(-a, 0.0)) < 0.03);
  CHECK(c.P0 == Approx(1.0 / (1.0 - a * a)).epsilon(0.05));

  // higher-order coefficients of an AR(1) process are near zero
  const auto c4 = burg_reflection(x, 4);
  CHECK(std::abs(c4.mu[1]) < 0.05);
  CHECK(std::abs(c4.mu[2]) < 0.05);
}

TEST_CASE("Burg clamps deterministic signals onto the admissible disc", "[toeplitz]") {
  std::vector<cplx> tone(64);
  const double w = 2.0 * 3.14159265358979323846 * 0.2;
  for (int t = 0; t < 64; ++t) tone[t] = std::exp(cplx(0.0, w * t));
  const auto c = burg_reflection(tone, 2);
  CHECK(std::abs(c.mu[0]) == Approx(kDiscMaxAbs).margin(1e-15));
  // mu_1 ~ -e^{iw}: the estimate must stay a valid manifold point
  CHECK(std::arg(-c.mu[0]) == Approx(w).margin(1e-9));
  CHECK_NOTHROW(to_manifold_point(c));
}

TEST_CASE("Burg edge cases and regularization", "[toeplitz]") {
  std::vector<cplx> zeros(32, 0.0);
  CHECK_THROWS_AS(burg_reflection(zeros, 2), degenerate_signal_error);
  std::vector<cplx> tiny = {1.0, 2.0};
  CHECK_THROWS_AS(burg_reflection(tiny, 2), std::invalid_argument);
  CHECK_THROWS_AS(burg_reflection(tiny, 0), std::invalid_argument);
  std::vector<cplx> three = {1.0, 2.0, 0.5};
  CHECK_THROWS_AS(burg_reflection(three, 2, -1.0), std::invalid_argument);

  detail::Rng rng(4242);
  std::vector<cplx> x;
  cplx prev = 0.0;
  for (int t = 0; t < 600; ++t) {
    prev = 0.9 * prev + rng.complex_gaussian();
    if (t >= 100) x.push_back(prev);
  }
  const auto plain = burg_reflection(x, 3, 0.0);
  const auto reg = burg_reflection(x, 3, 5.0);
  CHECK(std::abs(reg.mu[0]) < std::abs(plain.mu[0]));
  CHECK(std::abs(reg.mu[1]) < std::abs(plain.mu[1]) + 1e-12);

  // white noise at moderate length gives small reflection coefficients
  std::vector<cplx> noise(50000);
  for (auto& z : noise) z = rng.complex_gaussian();
  const auto cw = burg_reflection(noise, 4);
  for (const auto& mu : cw.mu) CHECK(std::abs(mu) < 0.02);
}

TEST_CASE("AR spectrum integrates to the power and peaks at the pole", "[toeplitz]") {
  detail::Rng rng(55);
  for (int rep = 0; rep < 5; ++rep) {
    const auto c = random_coords(4, rng, 0.7);
    const auto a = reflection_to_prediction(c.mu);
    const double Pn = final_prediction_error(c);
    const auto psd_at = [&](double f) {
      cplx A = 1.0;
      for (std::size_t k = 0; k < a.size(); ++k)
        A += a[k] * std::exp(cplx(0.0, -2.0 * 3.14159265358979323846 * f * double(k + 1)));
      return Pn / std::norm(A);
    };
    const double integral = oracles::simpson(psd_at, -0.5, 0.5, 8192);
    const double r0 = phi_inv(c).first_column[0].real();
    CHECK(integral == Approx(r0).epsilon(1e-6));

    // the sampled spectrum matches the direct evaluation
    const auto psd = ar_spectrum(c, 256);
    const auto freqs = spectrum_frequencies(256);
    for (int j = 0; j < 256; j += 37)
      CHECK(psd[j] == Approx(psd_at(freqs[j])).epsilon(1e-12));
  }

  // AR(1) with pole at 0.9 e^{i w}: the peak sits at normalized frequency w/2pi
  const double w = 2.0 * 3.14159265358979323846 * 0.15;
  ReflectionCoords c1{1.0, {-0.9 * std::exp(cplx(0.0, w))}};
  const auto psd = ar_spectrum(c1, 512);
  const auto freqs = spectrum_frequencies(512);
  const auto it = std::max_element(psd.begin(), psd.end());
  CHECK(freqs[it - psd.begin()] == Approx(0.15).margin(2.0 / 512));
  CHECK_THROWS_AS(ar_spectrum(c1, 0), std::invalid_argument);
}

TEST_CASE("manifold point conversions validate the domain", "[toeplitz]") {
  ReflectionCoords c{2.0, {cplx(0.3, 0.4), cplx(-0.1, 0.0)}};
  const auto x = to_manifold_point(c);
  CHECK(x.coords == std::vector<double>{2.0, 0.3, 0.4, -0.1, 0.0});
  const auto c2 = from_manifold_point(x);
  CHECK(c2.P0 == 2.0);
  CHECK(c2.mu == c.mu);

  ReflectionCoords hot{1.0, {cplx(1.0 - 1e-13, 0.0)}};
  CHECK_THROWS_AS(to_manifold_point(hot), invalid_point_error);
  const auto cooled = clamped(hot);
  CHECK(std::abs(cooled.mu[0]) == Approx(kDiscMaxAbs).margin(1e-16));
  CHECK_NOTHROW(to_manifold_point(cooled));

  CHECK_THROWS_AS(from_manifold_point(ManifoldPoint{{1.0, 0.5}}), std::invalid_argument);
}
