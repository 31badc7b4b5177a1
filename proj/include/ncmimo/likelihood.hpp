#pragma once

#include "ncmimo/scene.hpp"
#include "ncmimo/signal.hpp"

#include <stdexcept>

namespace ncmimo {

/// Snapshots plus the scene needed to rebuild T(k) for candidate motions.
///
/// Read-only after construction; every evaluation below is reentrant.
template <typename Scalar>
class ObjectiveContext {
 public:
  ObjectiveContext(AntennaGeometry<Scalar> geometry, RadarParams<Scalar> params, ComplexMatrix<Scalar> snapshots)
      : geometry_(std::move(geometry)), params_(std::move(params)), snapshots_(std::move(snapshots)) {
    geometry_.validate();
    if (snapshots_.rows() != geometry_.path_count())
      throw std::invalid_argument("objective: snapshot length must equal M*N");
    if (snapshots_.cols() != params_.snapshot_count)
      throw std::invalid_argument("objective: snapshot count must equal K");
    if (snapshots_.cols() < 1) throw std::invalid_argument("objective: at least one snapshot required");
    total_energy_ = snapshots_.squaredNorm();
  }

  ObjectiveContext(const AntennaGeometryd& geometry, const RadarParamsd& params, const SnapshotSet& set)
    requires(!std::is_same_v<Scalar, double>)
      : ObjectiveContext(geometry.cast<Scalar>(), params.cast<Scalar>(), set.data.cast<std::complex<Scalar>>()) {}

  ObjectiveContext(const AntennaGeometryd& geometry, const RadarParamsd& params, const SnapshotSet& set)
    requires(std::is_same_v<Scalar, double>)
      : ObjectiveContext(geometry, params, set.data) {}

  const AntennaGeometry<Scalar>& geometry() const { return geometry_; }
  const RadarParams<Scalar>& params() const { return params_; }
  const ComplexMatrix<Scalar>& snapshots() const { return snapshots_; }
  int snapshot_count() const { return static_cast<int>(snapshots_.cols()); }
  int path_count() const { return static_cast<int>(snapshots_.rows()); }
  /// sum_k ||r(k)||^2
  Scalar total_energy() const { return total_energy_; }

 private:
  AntennaGeometry<Scalar> geometry_;
  RadarParams<Scalar> params_;
  ComplexMatrix<Scalar> snapshots_;
  Scalar total_energy_{};
};

template <typename Scalar>
struct ObjectiveValue {
  Scalar positive_ll{};    // ||sum_k T^H(k) r(k)||^2
  Scalar negative_ll{};    // sum_k ||r(k)||^2 - positive_ll / K
};

/// sum_k T^H(k) r(k) for the motion `psi`.
template <typename Scalar>
ComplexVector<Scalar> coherent_sum(const ObjectiveContext<Scalar>& ctx, const MotionCoefficients<Scalar>& psi) {
  const auto& params = ctx.params();
  ComplexVector<Scalar> sum = ComplexVector<Scalar>::Zero(ctx.path_count());
  ComplexVector<Scalar> t(ctx.path_count());
  for (int k = 0; k < ctx.snapshot_count(); ++k) {
    steering_diagonal_at(ctx.geometry(), psi, params, params.time_of(k), t);
    sum.noalias() += t.conjugate().cwiseProduct(ctx.snapshots().col(k));
  }
  return sum;
}

/// Closed-form minimizer of the negative log-likelihood over b.
template <typename Scalar>
ComplexVector<Scalar> concentrate_b(const ObjectiveContext<Scalar>& ctx, const MotionCoefficients<Scalar>& psi) {
  return coherent_sum(ctx, psi) / (Scalar(ctx.snapshot_count()) * ctx.params().energy_ratio);
}

/// Concentrated likelihood; maximizing positive_ll is the ML estimator.
template <typename Scalar>
ObjectiveValue<Scalar> objective(const ObjectiveContext<Scalar>& ctx, const MotionCoefficients<Scalar>& psi) {
  const Scalar positive = coherent_sum(ctx, psi).squaredNorm();
  return {positive, ctx.total_energy() - positive / Scalar(ctx.snapshot_count())};
}

/// r~^H Q (Q^H Q)^{-1} Q^H r~ with Q the stacked steering matrices, built densely.
///
/// Cross-check for objective(); it never exploits Q^H Q = K I.
template <typename Scalar>
Scalar projection_objective(const ObjectiveContext<Scalar>& ctx, const MotionCoefficients<Scalar>& psi) {
  const int paths = ctx.path_count();
  const int snaps = ctx.snapshot_count();
  ComplexMatrix<Scalar> q = ComplexMatrix<Scalar>::Zero(Eigen::Index(paths) * snaps, paths);
  ComplexVector<Scalar> stacked(Eigen::Index(paths) * snaps);
  for (int k = 0; k < snaps; ++k) {
    const auto t = steering_matrix(ctx.geometry(), psi, ctx.params(), k);
    q.block(Eigen::Index(k) * paths, 0, paths, paths) = t.diag.asDiagonal();
    stacked.segment(Eigen::Index(k) * paths, paths) = ctx.snapshots().col(k);
  }
  const ComplexMatrix<Scalar> gram = q.adjoint() * q;
  const ComplexVector<Scalar> qr = q.adjoint() * stacked;
  const ComplexVector<Scalar> coeffs = gram.ldlt().solve(qr);
  return std::real(qr.dot(coeffs));
}

/// sum_k ||r(k) - sqrt(E/M) T(k) b||^2
template <typename Scalar>
Scalar negative_ll(const ObjectiveContext<Scalar>& ctx, const MotionCoefficients<Scalar>& psi,
                   const ComplexVector<Scalar>& b) {
  if (b.size() != ctx.path_count()) throw std::invalid_argument("negative_ll: reflection vector must have length M*N");
  const auto& params = ctx.params();
  ComplexVector<Scalar> t(ctx.path_count());
  Scalar total{};
  for (int k = 0; k < ctx.snapshot_count(); ++k) {
    steering_diagonal_at(ctx.geometry(), psi, params, params.time_of(k), t);
    total += (ctx.snapshots().col(k) - params.energy_ratio * t.cwiseProduct(b)).squaredNorm();
  }
  return total;
}

using ObjectiveContextd = ObjectiveContext<double>;

}  // namespace ncmimo
