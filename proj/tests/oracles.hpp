#pragma once

// Independent reference implementations used to cross-check the library.
// Everything here is deliberately written from first principles (dense
// linear algebra, quadrature, metric integrands) rather than by calling the
// code under test, so agreement is evidence and not tautology.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include <geomedian/manifold.hpp>
#include <geomedian/rng.hpp>

namespace oracles {

using cplx = std::complex<double>;
using Matrix = std::vector<std::vector<cplx>>;

// ---------------------------------------------------------------------------
// Dense complex linear algebra (LU with partial pivoting).

struct Lu {
  Matrix lu;
  std::vector<int> perm;
  int sign = 1;
  bool singular = false;
};

inline Lu lu_factor(Matrix a) {
  const int n = static_cast<int>(a.size());
  Lu f;
  f.perm.resize(n);
  for (int i = 0; i < n; ++i) f.perm[i] = i;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(a[k][k]);
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > best) {
        best = std::abs(a[i][k]);
        piv = i;
      }
    if (best == 0.0) {
      f.singular = true;
      f.lu = std::move(a);
      return f;
    }
    if (piv != k) {
      std::swap(a[piv], a[k]);
      std::swap(f.perm[piv], f.perm[k]);
      f.sign = -f.sign;
    }
    for (int i = k + 1; i < n; ++i) {
      a[i][k] /= a[k][k];
      for (int j = k + 1; j < n; ++j) a[i][j] -= a[i][k] * a[k][j];
    }
  }
  f.lu = std::move(a);
  return f;
}

inline cplx lu_det(const Matrix& m) {
  if (m.empty()) return 1.0;
  Lu f = lu_factor(m);
  if (f.singular) return 0.0;
  cplx d = static_cast<double>(f.sign);
  for (std::size_t i = 0; i < m.size(); ++i) d *= f.lu[i][i];
  return d;
}

inline std::vector<cplx> lu_solve(const Matrix& m, std::vector<cplx> b) {
  const int n = static_cast<int>(m.size());
  Lu f = lu_factor(m);
  if (f.singular) throw std::runtime_error("lu_solve: singular matrix");
  std::vector<cplx> x(n);
  for (int i = 0; i < n; ++i) x[i] = b[f.perm[i]];
  for (int i = 1; i < n; ++i)
    for (int j = 0; j < i; ++j) x[i] -= f.lu[i][j] * x[j];
  for (int i = n - 1; i >= 0; --i) {
    for (int j = i + 1; j < n; ++j) x[i] -= f.lu[i][j] * x[j];
    x[i] /= f.lu[i][i];
  }
  return x;
}

// Hermitian Toeplitz matrix from its first column r_0 .. r_{n-1}.
inline Matrix toeplitz_from_first_column(const std::vector<cplx>& r) {
  const int n = static_cast<int>(r.size());
  Matrix m(n, std::vector<cplx>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m[i][j] = (j >= i) ? std::conj(r[j - i]) : r[i - j];
  return m;
}

// ---------------------------------------------------------------------------
// Quadrature.

inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// ---------------------------------------------------------------------------
// Metric integrand, written directly from the factor metrics
//   ds^2 = sum_euclid dx^2 + w dP^2/P^2 + w |dz|^2/(1-|z|^2)^2,
// independent of the library's inner().  `delta` is a flat coordinate
// displacement evaluated at point coordinates `x`.

inline double quadratic_form(const geomedian::ManifoldDescriptor& m,
                             const std::vector<double>& x, const std::vector<double>& delta) {
  double q = 0.0;
  geomedian::detail::for_each_leaf(m, 0, [&](const geomedian::ManifoldDescriptor& leaf, int off) {
    using geomedian::ManifoldKind;
    switch (leaf.kind) {
      case ManifoldKind::euclidean:
        for (int i = 0; i < leaf.euclidean_dim; ++i) q += delta[off + i] * delta[off + i];
        break;
      case ManifoldKind::positive_reals: {
        const double P = x[off];
        q += leaf.weight * delta[off] * delta[off] / (P * P);
        break;
      }
      case ManifoldKind::poincare_disc: {
        const double g = 1.0 - (x[off] * x[off] + x[off + 1] * x[off + 1]);
        q += leaf.weight * (delta[off] * delta[off] + delta[off + 1] * delta[off + 1]) / (g * g);
        break;
      }
      default: break;
    }
  });
  return q;
}

// Riemannian length of the polyline through `pts`, each segment measured by
// the quadratic form at its coordinate midpoint (second-order accurate).
inline double polyline_length(const geomedian::ManifoldDescriptor& m,
                              const std::vector<std::vector<double>>& pts) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const std::size_t d = pts[i].size();
    std::vector<double> mid(d), delta(d);
    for (std::size_t j = 0; j < d; ++j) {
      mid[j] = 0.5 * (pts[i][j] + pts[i + 1][j]);
      delta[j] = pts[i + 1][j] - pts[i][j];
    }
    len += std::sqrt(quadratic_form(m, mid, delta));
  }
  return len;
}

// ---------------------------------------------------------------------------
// Random points and tangents for property tests.

inline geomedian::ManifoldPoint random_point(const geomedian::ManifoldDescriptor& m,
                                             geomedian::detail::Rng& rng,
                                             double disc_max_abs = 0.99) {
  std::vector<double> c(m.dimension());
  geomedian::detail::for_each_leaf(m, 0, [&](const geomedian::ManifoldDescriptor& leaf, int off) {
    using geomedian::ManifoldKind;
    switch (leaf.kind) {
      case ManifoldKind::euclidean:
        for (int i = 0; i < leaf.euclidean_dim; ++i) c[off + i] = rng.uniform(-3.0, 3.0);
        break;
      case ManifoldKind::positive_reals:
        c[off] = std::exp(rng.uniform(-2.0, 2.0));
        break;
      case ManifoldKind::poincare_disc: {
        const double r = disc_max_abs * std::sqrt(rng.uniform());
        const double a = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        c[off] = r * std::cos(a);
        c[off + 1] = r * std::sin(a);
        break;
      }
      default: break;
    }
  });
  return geomedian::ManifoldPoint{std::move(c)};
}

inline geomedian::TangentVector random_tangent(const geomedian::ManifoldDescriptor& m,
                                               const geomedian::ManifoldPoint& x,
                                               geomedian::detail::Rng& rng, double len) {
  geomedian::TangentVector v = geomedian::zero_tangent(m, x);
  for (double& c : v.components) c = rng.gaussian();
  const double n = std::sqrt(quadratic_form(m, x.coords, v.components));
  if (n == 0.0) return v;
  for (double& c : v.components) c *= len / n;
  return v;
}

// ---------------------------------------------------------------------------
// Plain Euclidean Weiszfeld iteration in flat coordinates; reference for
// geometric medians on euclidean descriptors only.

inline std::vector<double> euclidean_weiszfeld(const std::vector<std::vector<double>>& pts,
                                               const std::vector<double>& w, int iters = 2000) {
  const std::size_t d = pts[0].size();
  std::vector<double> x(d, 0.0);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) x[j] += w[i] * pts[i][j];
  for (int it = 0; it < iters; ++it) {
    std::vector<double> num(d, 0.0);
    double den = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double t = x[j] - pts[i][j];
        dist += t * t;
      }
      dist = std::sqrt(dist);
      if (dist < 1e-14) continue;
      const double c = w[i] / dist;
      den += c;
      for (std::size_t j = 0; j < d; ++j) num[j] += c * pts[i][j];
    }
    if (den == 0.0) break;
    bool moved = false;
    for (std::size_t j = 0; j < d; ++j) {
      const double nx = num[j] / den;
      if (std::abs(nx - x[j]) > 1e-15) moved = true;
      x[j] = nx;
    }
    if (!moved) break;
  }
  return x;
}

}  // namespace oracles
