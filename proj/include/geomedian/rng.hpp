#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace geomedian {
namespace detail {

/// splitmix64 finalizer; decorrelates seed/stream pairs so that per-trial
/// and per-cell generators can be derived from one user seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// mt19937_64 with hand-rolled variate transforms.  The engine's output
/// sequence is fixed by the standard, and doing the uniform/normal
/// transforms ourselves keeps streams identical across compilers
/// (std::uniform_real_distribution and std::normal_distribution are not
/// specified bit-for-bit).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Standard normal via Box-Muller; second variate is cached.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Circularly symmetric complex normal with E|z|^2 = 1.
  std::complex<double> complex_gaussian() {
    const double s = std::sqrt(0.5);
    const double re = gaussian();
    const double im = gaussian();
    return {s * re, s * im};
  }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace detail
}  // namespace geomedian
