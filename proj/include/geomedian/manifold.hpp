#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"

namespace geomedian {

/// Points whose disc factors have modulus above this are rejected; estimators
/// that can push against the boundary clamp onto it instead.
inline constexpr double kDiscMaxAbs = 1.0 - 1e-12;

/// Two points closer than this are treated as the same atom when
/// subgradients and point masses are evaluated.
inline constexpr double kAtomEps = 1e-14;

enum class ManifoldKind { euclidean, positive_reals, poincare_disc, product };

/// Description of a Cartan-Hadamard factor manifold.  Supported factors:
///   euclidean(d)        flat R^d
///   positive_reals(w)   R_+^* with metric w dP^2 / P^2
///   poincare_disc(w)    unit disc with metric w |dz|^2 / (1-|z|^2)^2
///   product(...)        finite product with the sum metric
/// The constant weight w rescales distances by sqrt(w) but leaves geodesics,
/// exponential and logarithm maps untouched, so each leaf implements the
/// unweighted maps and folds w into inner products and lengths only.
struct ManifoldDescriptor {
  ManifoldKind kind = ManifoldKind::euclidean;
  int euclidean_dim = 0;                     // used when kind == euclidean
  double weight = 1.0;                       // used by the weighted leaves
  std::vector<ManifoldDescriptor> factors;   // used when kind == product

  /// Number of flat real coordinates (a disc factor contributes two).
  int dimension() const {
    switch (kind) {
      case ManifoldKind::euclidean: return euclidean_dim;
      case ManifoldKind::positive_reals: return 1;
      case ManifoldKind::poincare_disc: return 2;
      case ManifoldKind::product: {
        int d = 0;
        for (const auto& f : factors) d += f.dimension();
        return d;
      }
    }
    return 0;
  }

  std::string name() const {
    std::ostringstream os;
    switch (kind) {
      case ManifoldKind::euclidean: os << "euclidean:" << euclidean_dim; break;
      case ManifoldKind::positive_reals: os << "positive_reals:" << weight; break;
      case ManifoldKind::poincare_disc: os << "poincare_disc:" << weight; break;
      case ManifoldKind::product: {
        os << "product(";
        for (std::size_t i = 0; i < factors.size(); ++i) {
          if (i) os << ",";
          os << factors[i].name();
        }
        os << ")";
        break;
      }
    }
    return os.str();
  }
};

inline ManifoldDescriptor euclidean(int d) {
  if (d < 1) throw std::invalid_argument("euclidean: dimension must be >= 1");
  ManifoldDescriptor m;
  m.kind = ManifoldKind::euclidean;
  m.euclidean_dim = d;
  return m;
}

inline ManifoldDescriptor positive_reals(double weight = 1.0) {
  if (!(weight > 0.0) || !std::isfinite(weight))
    throw std::invalid_argument("positive_reals: weight must be positive and finite");
  ManifoldDescriptor m;
  m.kind = ManifoldKind::positive_reals;
  m.weight = weight;
  return m;
}

inline ManifoldDescriptor poincare_disc(double weight = 1.0) {
  if (!(weight > 0.0) || !std::isfinite(weight))
    throw std::invalid_argument("poincare_disc: weight must be positive and finite");
  ManifoldDescriptor m;
  m.kind = ManifoldKind::poincare_disc;
  m.weight = weight;
  return m;
}

inline ManifoldDescriptor product(std::vector<ManifoldDescriptor> factors) {
  if (factors.empty()) throw std::invalid_argument("product: needs at least one factor");
  ManifoldDescriptor m;
  m.kind = ManifoldKind::product;
  m.factors = std::move(factors);
  return m;
}

/// A point stored as flat real coordinates in the descriptor's layout.
struct ManifoldPoint {
  std::vector<double> coords;
};

/// A tangent vector anchored at `base`, with components in the same flat
/// layout as the point coordinates.
struct TangentVector {
  std::vector<double> base;
  std::vector<double> components;
};

namespace detail {

/// Applies `f(leaf_descriptor, offset)` to every non-product factor, with
/// `offset` the index of the factor's first flat coordinate.
template <class F>
inline void for_each_leaf(const ManifoldDescriptor& m, int offset, F&& f) {
  if (m.kind == ManifoldKind::product) {
    for (const auto& fac : m.factors) {
      for_each_leaf(fac, offset, f);
      offset += fac.dimension();
    }
  } else {
    f(m, offset);
  }
}

inline std::complex<double> read_complex(const std::vector<double>& v, int off) {
  return {v[off], v[off + 1]};
}

inline void write_complex(std::vector<double>& v, int off, std::complex<double> z) {
  v[off] = z.real();
  v[off + 1] = z.imag();
}

/// atanh with the argument clamped inside (-1, 1); the clamp absorbs
/// rounding in Moebius quotients whose exact value sits just below 1.
inline double safe_atanh(double m) {
  const double lim = 1.0 - 1e-16;
  if (m > lim) m = lim;
  if (m < -lim) m = -lim;
  return std::atanh(m);
}

}  // namespace detail

inline bool is_valid_point(const ManifoldDescriptor& m, const ManifoldPoint& x) {
  if (static_cast<int>(x.coords.size()) != m.dimension()) return false;
  bool ok = true;
  detail::for_each_leaf(m, 0, [&](const ManifoldDescriptor& leaf, int off) {
    switch (leaf.kind) {
      case ManifoldKind::euclidean:
        for (int i = 0; i < leaf.euclidean_dim; ++i)
          if (!std::isfinite(x.coords[off + i])) ok = false;
        break;
      case ManifoldKind::positive_reals:
        if (!std::isfinite(x.coords[off]) || !(x.coords[off] > 0.0)) ok = false;
        break;
      case ManifoldKind::poincare_disc: {
        const double re = x.coords[off], im = x.coords[off + 1];
        if (!std::isfinite(re) || !std::isfinite(im)) ok = false;
        // relative slack of a few ulps so radially clamped values pass
        else if (std::hypot(re, im) > kDiscMaxAbs * (1.0 + 1e-15)) ok = false;
        break;
      }
      default: break;
    }
  });
  return ok;
}

inline void validate_point(const ManifoldDescriptor& m, const ManifoldPoint& x) {
  if (static_cast<int>(x.coords.size()) != m.dimension()) {
    std::ostringstream os;
    os << "point has " << x.coords.size() << " coordinates, manifold " << m.name()
       << " expects " << m.dimension();
    throw invalid_point_error(os.str());
  }
  if (!is_valid_point(m, x))
    throw invalid_point_error("point violates domain constraints of " + m.name());
}

inline ManifoldPoint make_point(const ManifoldDescriptor& m, std::vector<double> coords) {
  ManifoldPoint x{std::move(coords)};
  validate_point(m, x);
  return x;
}

inline TangentVector zero_tangent(const ManifoldDescriptor& m, const ManifoldPoint& x) {
  return TangentVector{x.coords, std::vector<double>(m.dimension(), 0.0)};
}

namespace detail {

inline void check_tangent(const ManifoldDescriptor& m, const ManifoldPoint& x,
                          const TangentVector& v, const char* where) {
  if (static_cast<int>(v.components.size()) != m.dimension() || v.base != x.coords) {
    throw std::invalid_argument(std::string(where) +
                                ": tangent vector is not based at the given point");
  }
}

}  // namespace detail

inline double distance(const ManifoldDescriptor& m, const ManifoldPoint& x,
                       const ManifoldPoint& y) {
  validate_point(m, x);
  validate_point(m, y);
  double sq = 0.0;
  detail::for_each_leaf(m, 0, [&](const ManifoldDescriptor& leaf, int off) {
    switch (leaf.kind) {
      case ManifoldKind::euclidean:
        for (int i = 0; i < leaf.euclidean_dim; ++i) {
          const double d = y.coords[off + i] - x.coords[off + i];
          sq += d * d;
        }
        break;
      case ManifoldKind::positive_reals: {
        const double s = std::log(y.coords[off] / x.coords[off]);
        sq += leaf.weight * s * s;
        break;
      }
      case ManifoldKind::poincare_disc: {
        const auto mu = detail::read_complex(x.coords, off);
        const auto nu = detail::read_complex(y.coords, off);
        const double num = std::abs(nu - mu);
        const double den = std::abs(1.0 - std::conj(mu) * nu);
        const double t = detail::safe_atanh(num / den);
        sq += leaf.weight * t * t;
        break;
      }
      default: break;
    }
  });
  return std::sqrt(sq);
}

/// Riemannian exponential.  Each leaf map is the unit-weight one; see the
/// descriptor note on why weights do not enter.
inline ManifoldPoint exp_map(const ManifoldDescriptor& m, const ManifoldPoint& x,
                             const TangentVector& v) {
  validate_point(m, x);
  detail::check_tangent(m, x, v, "exp_map");
  ManifoldPoint out{x.coords};
  detail::for_each_leaf(m, 0, [&](const ManifoldDescriptor& leaf, int off) {
    switch (leaf.kind) {
      case ManifoldKind::euclidean:
        for (int i = 0; i < leaf.euclidean_dim; ++i)
          out.coords[off + i] = x.coords[off + i] + v.components[off + i];
        break;
      case ManifoldKind::positive_reals: {
        const double P = x.coords[off];
        out.coords[off] = P * std::exp(v.components[off] / P);
        break;
      }
      case ManifoldKind::poincare_disc: {
        const auto mu = detail::read_complex(x.coords, off);
        const auto w = detail::read_complex(v.components, off);
        const double speed = std::abs(w);
        if (speed == 0.0) break;
        // Unit-speed geodesic from mu in direction u, evaluated at arc
        // length L = |w| / (1 - |mu|^2).  Written with G = exp(-2L) <= 1 so
        // nothing overflows; as G -> 0 the value tends to the boundary
        // point (mu + u) / (1 + conj(mu) u), which the clamp pulls inside.
        const std::complex<double> u = w / speed;
        const double L = speed / (1.0 - std::norm(mu));
        const double G = std::exp(-2.0 * L);
        const std::complex<double> num = (mu + u) + (mu - u) * G;
        const std::complex<double> den = (1.0 + std::conj(mu) * u) + (1.0 - std::conj(mu) * u) * G;
        std::complex<double> z = num / den;
        const double r = std::abs(z);
        if (r > kDiscMaxAbs) z *= kDiscMaxAbs / r;
        detail::write_complex(out.coords, off, z);
        break;
      }
      default: break;
    }
  });
  return out;
}

/// Riemannian logarithm; satisfies exp_map(m, x, log_map(m, x, y)) == y and
/// norm(m, x, log_map(m, x, y)) == distance(m, x, y) up to roundoff.
inline TangentVector log_map(const ManifoldDescriptor& m, const ManifoldPoint& x,
                             const ManifoldPoint& y) {
  validate_point(m, x);
  validate_point(m, y);
  TangentVector v = zero_tangent(m, x);
  detail::for_each_leaf(m, 0, [&](const ManifoldDescriptor& leaf, int off) {
    switch (leaf.kind) {
      case ManifoldKind::euclidean:
        for (int i = 0; i < leaf.euclidean_dim; ++i)
          v.components[off + i] = y.coords[off + i] - x.coords[off + i];
        break;
      case ManifoldKind::positive_reals: {
        const double P = x.coords[off];
        v.components[off] = P * std::log(y.coords[off] / P);
        break;
      }
      case ManifoldKind::poincare_disc: {
        const auto mu = detail::read_complex(x.coords, off);
        const auto nu = detail::read_complex(y.coords, off);
        const std::complex<double> c = (nu - mu) / (1.0 - std::conj(mu) * nu);
        const double mod = std::abs(c);
        if (mod == 0.0) break;
        const double tau = detail::safe_atanh(mod);
        const std::complex<double> dir = c / mod;
        detail::write_complex(v.components, off, tau * (1.0 - std::norm(mu)) * dir);
        break;
      }
      default: break;
    }
  });
  return v;
}

inline double inner(const ManifoldDescriptor& m, const ManifoldPoint& x,
                    const TangentVector& u, const TangentVector& v) {
  validate_point(m, x);
  detail::check_tangent(m, x, u, "inner");
  detail::check_tangent(m, x, v, "inner");
  double s = 0.0;
  detail::for_each_leaf(m, 0, [&](const ManifoldDescriptor& leaf, int off) {
    switch (leaf.kind) {
      case ManifoldKind::euclidean:
        for (int i = 0; i < leaf.euclidean_dim; ++i)
          s += u.components[off + i] * v.components[off + i];
        break;
      case ManifoldKind::positive_reals: {
        const double P = x.coords[off];
        s += leaf.weight * u.components[off] * v.components[off] / (P * P);
        break;
      }
      case ManifoldKind::poincare_disc: {
        const double g = 1.0 - std::norm(detail::read_complex(x.coords, off));
        const double dot = u.components[off] * v.components[off] +
                           u.components[off + 1] * v.components[off + 1];
        s += leaf.weight * dot / (g * g);
        break;
      }
      default: break;
    }
  });
  return s;
}

inline double norm(const ManifoldDescriptor& m, const ManifoldPoint& x,
                   const TangentVector& v) {
  return std::sqrt(inner(m, x, v, v));
}

inline TangentVector scaled(const TangentVector& v, double a) {
  TangentVector out = v;
  for (double& c : out.components) c *= a;
  return out;
}

inline void add_scaled(TangentVector& acc, const TangentVector& v, double a) {
  for (std::size_t i = 0; i < acc.components.size(); ++i)
    acc.components[i] += a * v.components[i];
}

/// Point at arc length s on the minimizing geodesic from x to y.
/// Requires 0 <= s <= distance(x, y).
inline ManifoldPoint geodesic_point(const ManifoldDescriptor& m, const ManifoldPoint& x,
                                    const ManifoldPoint& y, double s) {
  const double d = distance(m, x, y);
  if (!(s >= 0.0) || s > d * (1.0 + 1e-12) + 1e-300)
    throw std::invalid_argument("geodesic_point: arc length outside [0, d(x,y)]");
  if (d == 0.0 || s == 0.0) return x;
  return exp_map(m, x, scaled(log_map(m, x, y), std::min(s / d, 1.0)));
}

/// Sectional curvature bounds (lower, upper) that hold everywhere on the
/// manifold.  A lone disc factor with weight w has constant curvature -4/w;
/// products with more than one factor always admit flat planes, so the
/// upper bound is 0.
inline std::pair<double, double> default_curvature_bounds(const ManifoldDescriptor& m) {
  switch (m.kind) {
    case ManifoldKind::euclidean:
    case ManifoldKind::positive_reals:
      return {0.0, 0.0};
    case ManifoldKind::poincare_disc:
      return {-4.0 / m.weight, -4.0 / m.weight};
    case ManifoldKind::product: {
      if (m.factors.size() == 1) return default_curvature_bounds(m.factors[0]);
      double lo = 0.0;
      for (const auto& f : m.factors) lo = std::min(lo, default_curvature_bounds(f).first);
      return {lo, 0.0};
    }
  }
  return {0.0, 0.0};
}

}  // namespace geomedian
