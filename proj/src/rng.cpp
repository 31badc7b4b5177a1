#include "ncmimo/rng.hpp"

#include <cmath>
#include <numbers>

namespace ncmimo {

double GaussianSource::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double GaussianSource::uniform_open_closed() {
  return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
}

std::complex<double> GaussianSource::complex_normal(double variance) {
  const double radius = std::sqrt(-variance * std::log(uniform_open_closed()));
  const double angle = 2.0 * std::numbers::pi * uniform();
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

double GaussianSource::standard_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Unit-variance complex sample has N(0, 1/2) parts.
  const std::complex<double> z = complex_normal(2.0);
  spare_ = z.imag();
  has_spare_ = true;
  return z.real();
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t trial_seed(std::uint64_t base, std::uint64_t point, std::uint64_t trial) {
  return mix64(base ^ mix64((point << 32) | (trial & 0xffffffffULL)));
}

}  // namespace ncmimo
