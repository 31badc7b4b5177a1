#include "ncmimo/signal.hpp"

#include "ncmimo/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace ncmimo {

void SnapshotSet::validate() const {
  if (tx_count < 1 || rx_count < 1) throw std::invalid_argument("snapshots: antenna counts must be positive");
  if (data.cols() < 1) throw std::invalid_argument("snapshots: at least one snapshot required");
  if (data.rows() != path_count()) throw std::invalid_argument("snapshots: row count must equal M*N");
  if (!(noise_variance >= 0) || !std::isfinite(noise_variance))
    throw std::invalid_argument("snapshots: noise variance must be finite and non-negative");
}

SnapshotSet synthesize(const AntennaGeometryd& geometry, const MotionCoefficientsd& motion,
                       const RadarParamsd& params, const ReflectionVector& b, double noise_variance,
                       std::uint64_t seed) {
  geometry.validate();
  params.validate();
  if (b.size() != geometry.path_count()) throw std::invalid_argument("synthesize: reflection vector must have length M*N");
  if (!b.allFinite()) throw std::invalid_argument("synthesize: non-finite reflection coefficient");
  if (!std::isfinite(noise_variance) || noise_variance < 0)
    throw std::invalid_argument("synthesize: noise variance must be finite and non-negative");

  SnapshotSet out;
  out.tx_count = geometry.tx_count();
  out.rx_count = geometry.rx_count();
  out.noise_variance = noise_variance;
  out.seed = seed;
  out.data.resize(geometry.path_count(), params.snapshot_count);

  GaussianSource noise(seed);
  ComplexVector<double> t(geometry.path_count());
  for (int k = 0; k < params.snapshot_count; ++k) {
    steering_diagonal_at(geometry, motion, params, params.time_of(k), t);
    auto r = out.data.col(k);
    r = params.energy_ratio * t.cwiseProduct(b);
    if (noise_variance > 0)
      for (Eigen::Index i = 0; i < r.size(); ++i) r(i) += noise.complex_normal(noise_variance);
  }
  return out;
}

ReflectionVector draw_reflection(int path_count, std::uint64_t seed) {
  if (path_count < 1) throw std::invalid_argument("draw_reflection: path count must be positive");
  GaussianSource source(seed);
  ReflectionVector b(path_count);
  for (auto& v : b) v = source.complex_normal(1.0);
  return b;
}

double snr_db(const RadarParamsd& params, const ReflectionVector& b, double noise_variance) {
  if (!(noise_variance > 0)) throw std::invalid_argument("snr_db: noise variance must be positive");
  return 10.0 * std::log10(params.energy_per_antenna() * b.squaredNorm() / static_cast<double>(b.size()) /
                           noise_variance);
}

double noise_variance_for_snr(const RadarParamsd& params, const ReflectionVector& b, double snr) {
  if (!std::isfinite(snr)) throw std::invalid_argument("noise_variance_for_snr: SNR must be finite");
  return params.energy_per_antenna() * b.squaredNorm() / static_cast<double>(b.size()) * std::pow(10.0, -snr / 10.0);
}

}  // namespace ncmimo
