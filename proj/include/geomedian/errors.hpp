#pragma once

#include <stdexcept>
#include <string>

namespace geomedian {

/// A coordinate tuple violates its manifold's domain constraints
/// (non-positive P, |mu| outside the open disc, non-finite entries).
class invalid_point_error : public std::invalid_argument {
 public:
  explicit invalid_point_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Levinson / Cholesky-style factorization failed; `order` is the first
/// leading order at which positive definiteness broke down.
class decomposition_error : public std::runtime_error {
 public:
  decomposition_error(const std::string& what, int order)
      : std::runtime_error(what), order_(order) {}
  int order() const noexcept { return order_; }

 private:
  int order_;
};

/// Signal with no usable energy was handed to an estimator.
class degenerate_signal_error : public std::runtime_error {
 public:
  explicit degenerate_signal_error(const std::string& what) : std::runtime_error(what) {}
};

/// A geodesic-ball context is inconsistent (sigma >= rho, curvature bounds
/// out of order, radius too large for the curvature/injectivity constraint).
class context_error : public std::invalid_argument {
 public:
  explicit context_error(const std::string& what) : std::invalid_argument(what) {}
};

/// A solver iterate left its confinement ball by more than the tolerance;
/// points at a misconfigured context rather than user input.
class diagnostic_error : public std::runtime_error {
 public:
  explicit diagnostic_error(const std::string& what) : std::runtime_error(what) {}
};

/// Radius refinement could not be certified (neither sub-condition held).
class not_certified_error : public std::runtime_error {
 public:
  explicit not_certified_error(const std::string& what) : std::runtime_error(what) {}
};

/// A hypothesis required by a closed-form bound does not hold for the inputs.
class precondition_error : public std::invalid_argument {
 public:
  explicit precondition_error(const std::string& what) : std::invalid_argument(what) {}
};

/// Grid search would exceed its evaluation budget.
class budget_error : public std::invalid_argument {
 public:
  explicit budget_error(const std::string& what) : std::invalid_argument(what) {}
};

/// A finite sample source ran out before the solver finished.
class sampler_exhausted_error : public std::runtime_error {
 public:
  explicit sampler_exhausted_error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file.
class parse_error : public std::runtime_error {
 public:
  explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace geomedian
