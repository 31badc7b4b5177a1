#pragma once

#include "ncmimo/scene.hpp"

#include <complex>
#include <cstdint>
#include <numbers>

namespace ncmimo {

template <typename Scalar>
using ComplexVector = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

/// Path gains b, one per virtual path, fixed over an observation.
using ReflectionVector = ComplexVector<double>;

/// Diagonal of T(k): entry (n*M + m) is exp(-j 2 pi f_c tau_mn(k)).
template <typename Scalar>
struct SteeringMatrix {
  ComplexVector<Scalar> diag;
  int snapshot = 0;

  auto dense() const { return diag.asDiagonal(); }
};

/// Writes the steering diagonal at continuous time `t` into `out` (length MN).
template <typename Scalar, typename Out>
void steering_diagonal_at(const AntennaGeometry<Scalar>& geometry, const MotionCoefficients<Scalar>& motion,
                          const RadarParams<Scalar>& params, Scalar t, Eigen::MatrixBase<Out>& out) {
  using std::floor;
  const int tx = geometry.tx_count();
  const int rx = geometry.rx_count();
  const Position3<Scalar> pos = eval_position_at(motion, t);
  const Scalar cycles_per_meter = params.carrier_frequency / params.propagation_speed;
  const Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  // Ranges are shared across paths: M + N norms instead of 2MN.
  auto fill = [&](auto& d_tx, auto& d_rx) {
    for (int m = 0; m < tx; ++m) d_tx(m) = (pos - geometry.transmitters[m]).norm();
    for (int n = 0; n < rx; ++n) d_rx(n) = (pos - geometry.receivers[n]).norm();
    for (int n = 0; n < rx; ++n) {
      for (int m = 0; m < tx; ++m) {
        Scalar cycles = cycles_per_meter * (d_tx(m) + d_rx(n));
        cycles -= floor(cycles);
        out(n * tx + m) = std::polar(Scalar(1), -two_pi * cycles);
      }
    }
  };
  if (tx <= 16 && rx <= 16) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1, 0, 16, 1> d_tx(tx), d_rx(rx);
    fill(d_tx, d_rx);
  } else {
    VectorX<Scalar> d_tx(tx), d_rx(rx);
    fill(d_tx, d_rx);
  }
}

template <typename Scalar>
SteeringMatrix<Scalar> steering_matrix(const AntennaGeometry<Scalar>& geometry,
                                       const MotionCoefficients<Scalar>& motion, const RadarParams<Scalar>& params,
                                       int k) {
  if (k < 0 || k >= params.snapshot_count) throw std::out_of_range("steering_matrix: snapshot index out of range");
  SteeringMatrix<Scalar> out{ComplexVector<Scalar>(geometry.path_count()), k};
  steering_diagonal_at(geometry, motion, params, params.time_of(k), out.diag);
  return out;
}

/// Circular complex white Gaussian noise; each real part has variance/2.
struct NoiseModel {
  double variance = 0.0;
};

/// K virtual snapshots r(k), stored column-wise (MN x K).
struct SnapshotSet {
  int tx_count = 0;
  int rx_count = 0;
  ComplexMatrix<double> data;
  double noise_variance = 0.0;
  std::uint64_t seed = 0;

  int path_count() const { return tx_count * rx_count; }
  int snapshot_count() const { return static_cast<int>(data.cols()); }
  auto snapshot(int k) const { return data.col(k); }
  void validate() const;
};

/// r(k) = sqrt(E/M) T(k) b + w(k), deterministic in `seed`.
SnapshotSet synthesize(const AntennaGeometryd& geometry, const MotionCoefficientsd& motion,
                       const RadarParamsd& params, const ReflectionVector& b, double noise_variance,
                       std::uint64_t seed);

/// Unit-variance circular Gaussian path gains, drawn from `seed`.
ReflectionVector draw_reflection(int path_count, std::uint64_t seed);

/// 10 log10((E/M) mean|b|^2 / sigma^2).
double snr_db(const RadarParamsd& params, const ReflectionVector& b, double noise_variance);

/// Inverse of snr_db: the noise variance that yields `snr`.
double noise_variance_for_snr(const RadarParamsd& params, const ReflectionVector& b, double snr);

}  // namespace ncmimo
