#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "manifold.hpp"

namespace geomedian {
namespace toeplitz {

using cplx = std::complex<double>;

/// Hermitian Toeplitz positive definite matrix, stored by its first column
/// r_0 .. r_{n-1}; r_0 is real and positive.
struct ToeplitzHPD {
  std::vector<cplx> first_column;
  int order() const { return static_cast<int>(first_column.size()); }
};

/// Reflection-coefficient coordinates (P_0, mu_1, .., mu_{n-1}) of an order-n
/// matrix: mean power P_0 > 0 and points of the open unit disc.
struct ReflectionCoords {
  double P0 = 1.0;
  std::vector<cplx> mu;
  int order() const { return static_cast<int>(mu.size()) + 1; }
};

/// The manifold carrying ReflectionCoords for order n: the factor
/// R_+^* x D^{n-1} with metric n dP^2/P^2 + sum_k (n-k) |dmu_k|^2/(1-|mu_k|^2)^2.
inline ManifoldDescriptor tn_manifold(int n) {
  if (n < 1) throw std::invalid_argument("tn_manifold: order must be >= 1");
  if (n == 1) return positive_reals(static_cast<double>(n));
  std::vector<ManifoldDescriptor> factors;
  factors.reserve(n);
  factors.push_back(positive_reals(static_cast<double>(n)));
  for (int k = 1; k <= n - 1; ++k)
    factors.push_back(poincare_disc(static_cast<double>(n - k)));
  return product(std::move(factors));
}

/// Flat coordinate layout (P0, re mu_1, im mu_1, ..) on tn_manifold(order()).
inline ManifoldPoint to_manifold_point(const ReflectionCoords& c) {
  std::vector<double> coords;
  coords.reserve(1 + 2 * c.mu.size());
  coords.push_back(c.P0);
  for (const auto& z : c.mu) {
    coords.push_back(z.real());
    coords.push_back(z.imag());
  }
  return make_point(tn_manifold(c.order()), std::move(coords));
}

inline ReflectionCoords from_manifold_point(const ManifoldPoint& x) {
  if (x.coords.empty() || x.coords.size() % 2 == 0)
    throw std::invalid_argument("from_manifold_point: expected 1 + 2(n-1) coordinates");
  ReflectionCoords c;
  c.P0 = x.coords[0];
  for (std::size_t i = 1; i + 1 < x.coords.size(); i += 2)
    c.mu.emplace_back(x.coords[i], x.coords[i + 1]);
  validate_point(tn_manifold(c.order()), x);
  return c;
}

/// Pulls disc coordinates with |mu| > 1 - 1e-12 radially back onto that
/// circle; P0 is left alone.
inline ReflectionCoords clamped(ReflectionCoords c) {
  for (auto& z : c.mu) {
    const double r = std::abs(z);
    if (r > kDiscMaxAbs) z *= kDiscMaxAbs / r;
  }
  return c;
}

namespace detail_lev {

// One Levinson order update: a (length k-1) becomes length k with the new
// reflection coefficient appended.
inline void append_reflection(std::vector<cplx>& a, cplx mu) {
  const std::size_t k = a.size() + 1;
  std::vector<cplx> next(k);
  for (std::size_t i = 0; i + 1 < k; ++i)
    next[i] = a[i] + mu * std::conj(a[k - 2 - i]);
  next[k - 1] = mu;
  a = std::move(next);
}

}  // namespace detail_lev

/// Levinson-Durbin map from a Toeplitz HPD matrix to reflection
/// coordinates.  Throws decomposition_error at the first order where the
/// leading minors stop being positive definite (|mu_k| >= 1 or P_k <= 0).
inline ReflectionCoords phi(const ToeplitzHPD& t) {
  const int n = t.order();
  if (n < 1) throw std::invalid_argument("phi: empty matrix");
  const cplx r0 = t.first_column[0];
  if (std::abs(r0.imag()) > 1e-12 * std::max(1.0, std::abs(r0.real())))
    throw std::invalid_argument("phi: r_0 must be real");
  if (!(r0.real() > 0.0))
    throw decomposition_error("phi: r_0 must be positive", 0);

  ReflectionCoords c;
  c.P0 = r0.real();
  double P = c.P0;
  std::vector<cplx> a;  // prediction coefficients a_1 .. a_{k-1}
  for (int k = 1; k < n; ++k) {
    cplx acc = t.first_column[k];
    for (int i = 1; i < k; ++i) acc += a[i - 1] * t.first_column[k - i];
    const cplx mu = -acc / P;
    if (!(std::abs(mu) < 1.0))
      throw decomposition_error("phi: leading minor not positive definite", k);
    detail_lev::append_reflection(a, mu);
    P *= 1.0 - std::norm(mu);
    if (!(P > 0.0))
      throw decomposition_error("phi: prediction error collapsed", k);
    c.mu.push_back(mu);
  }
  return c;
}

/// Inverse of phi: rebuilds the first column of the unique Toeplitz HPD
/// matrix with the given reflection coordinates.
inline ToeplitzHPD phi_inv(const ReflectionCoords& c) {
  if (!(c.P0 > 0.0) || !std::isfinite(c.P0))
    throw std::invalid_argument("phi_inv: P0 must be positive and finite");
  for (const auto& z : c.mu)
    if (!(std::abs(z) < 1.0))
      throw std::invalid_argument("phi_inv: reflection coefficients must lie in the open disc");

  ToeplitzHPD t;
  t.first_column.resize(c.order());
  t.first_column[0] = c.P0;
  double P = c.P0;
  std::vector<cplx> a;
  for (std::size_t k = 1; k < static_cast<std::size_t>(c.order()); ++k) {
    cplx acc = 0.0;
    for (std::size_t i = 1; i < k; ++i) acc += a[i - 1] * t.first_column[k - i];
    t.first_column[k] = -c.mu[k - 1] * P - acc;
    detail_lev::append_reflection(a, c.mu[k - 1]);
    P *= 1.0 - std::norm(c.mu[k - 1]);
  }
  return t;
}

/// log det R_n in reflection coordinates:
/// det R_n = P0^n prod_k (1-|mu_k|^2)^{n-k}, evaluated in log space.
inline double log_det(const ReflectionCoords& c) {
  const int n = c.order();
  double s = n * std::log(c.P0);
  for (int k = 1; k <= n - 1; ++k)
    s += (n - k) * std::log1p(-std::norm(c.mu[k - 1]));
  return s;
}

/// Entropy-style Kaehler potential -log det(R_n) - n log(pi e).
inline double kahler_potential(const ReflectionCoords& c) {
  constexpr double pi = 3.14159265358979323846;
  return -log_det(c) - c.order() * (1.0 + std::log(pi));
}

/// Prediction coefficients a_1..a_m of the filter A(z) = 1 + sum a_k z^-k
/// from reflection coefficients mu_1..mu_m.
inline std::vector<cplx> reflection_to_prediction(std::span<const cplx> mu) {
  std::vector<cplx> a;
  for (const auto& m : mu) detail_lev::append_reflection(a, m);
  return a;
}

/// Inverse step-down recursion.  Throws if the filter is not minimum phase
/// (some |mu_k| >= 1).
inline std::vector<cplx> prediction_to_reflection(std::span<const cplx> a_in) {
  std::vector<cplx> a(a_in.begin(), a_in.end());
  std::vector<cplx> mu(a.size());
  for (std::size_t k = a.size(); k >= 1; --k) {
    const cplx mk = a[k - 1];
    if (!(std::abs(mk) < 1.0))
      throw std::invalid_argument("prediction_to_reflection: filter is not minimum phase");
    mu[k - 1] = mk;
    const double den = 1.0 - std::norm(mk);
    std::vector<cplx> prev(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i)
      prev[i] = (a[i] - mk * std::conj(a[k - 2 - i])) / den;
    a = std::move(prev);
  }
  return mu;
}

/// Final prediction error P_{n-1} = P0 prod (1-|mu_k|^2).
inline double final_prediction_error(const ReflectionCoords& c) {
  double P = c.P0;
  for (const auto& z : c.mu) P *= 1.0 - std::norm(z);
  return P;
}

/// Burg estimate of reflection coordinates from N complex samples; `order`
/// is the matrix order n, so n-1 reflection coefficients are produced.
/// `gamma` adds gamma * k * ||x||^2 / N to the stage-k denominator, biasing
/// coefficients toward zero for short or noisy records (gamma = 0 recovers
/// the classic estimator).  Coefficients are radially clamped into the
/// admissible disc, so deterministic signals stay representable.
inline ReflectionCoords burg_reflection(std::span<const cplx> signal, int order,
                                        double gamma = 0.0) {
  const std::size_t N = signal.size();
  if (order < 1) throw std::invalid_argument("burg_reflection: order must be >= 1");
  if (N <= static_cast<std::size_t>(order))
    throw std::invalid_argument("burg_reflection: need more samples than the order");
  if (gamma < 0.0) throw std::invalid_argument("burg_reflection: gamma must be >= 0");

  double power = 0.0;
  for (const auto& z : signal) power += std::norm(z);
  if (power <= 0.0)
    throw degenerate_signal_error("burg_reflection: signal has no energy");

  ReflectionCoords c;
  c.P0 = power / static_cast<double>(N);

  std::vector<cplx> f(signal.begin(), signal.end());  // forward residual, valid on [k, N)
  std::vector<cplx> b(signal.begin(), signal.end());  // backward residual, valid on [k-1, N-1)
  for (int k = 1; k <= order - 1; ++k) {
    cplx num = 0.0;
    double den = gamma * k * power / static_cast<double>(N);
    for (std::size_t t = k; t < N; ++t) {
      num += f[t] * std::conj(b[t - 1]);
      den += std::norm(f[t]) + std::norm(b[t - 1]);
    }
    cplx mu = den > 0.0 ? -2.0 * num / den : cplx(0.0);
    const double r = std::abs(mu);
    if (r > kDiscMaxAbs) mu *= kDiscMaxAbs / r;
    for (std::size_t t = N - 1; t >= static_cast<std::size_t>(k); --t) {
      const cplx ft = f[t];
      f[t] = ft + mu * b[t - 1];
      b[t] = b[t - 1] + std::conj(mu) * ft;
    }
    c.mu.push_back(mu);
  }
  return c;
}

/// Power spectral density of the AR model in reflection coordinates,
/// sampled at n_freq normalized frequencies -1/2 + j/n_freq.
inline std::vector<double> ar_spectrum(const ReflectionCoords& c, int n_freq) {
  if (n_freq < 1) throw std::invalid_argument("ar_spectrum: n_freq must be >= 1");
  const auto a = reflection_to_prediction(c.mu);
  const double Pn = final_prediction_error(c);
  constexpr double two_pi = 2.0 * 3.14159265358979323846;
  std::vector<double> psd(n_freq);
  for (int j = 0; j < n_freq; ++j) {
    const double f = -0.5 + static_cast<double>(j) / n_freq;
    cplx A = 1.0;
    for (std::size_t k = 0; k < a.size(); ++k)
      A += a[k] * std::exp(cplx(0.0, -two_pi * f * static_cast<double>(k + 1)));
    psd[j] = Pn / std::norm(A);
  }
  return psd;
}

inline std::vector<double> spectrum_frequencies(int n_freq) {
  std::vector<double> f(n_freq);
  for (int j = 0; j < n_freq; ++j) f[j] = -0.5 + static_cast<double>(j) / n_freq;
  return f;
}

}  // namespace toeplitz
}  // namespace geomedian
