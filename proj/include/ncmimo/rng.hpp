#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace ncmimo {

/// Gaussian sample source with platform-independent output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniforms take the top 53 bits of one draw; complex samples use
/// the polar Box-Muller map on two uniforms, so no implementation-defined
/// std::*_distribution is involved.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1].
  double uniform_open_closed();
  /// Uniform on [0, 1).
  double uniform();
  /// Circularly symmetric complex normal with E|z|^2 = variance.
  std::complex<double> complex_normal(double variance = 1.0);
  double standard_normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Seed for trial `trial` of SNR point `point` under `base`.
std::uint64_t trial_seed(std::uint64_t base, std::uint64_t point, std::uint64_t trial);

}  // namespace ncmimo
