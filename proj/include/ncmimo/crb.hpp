#pragma once

#include "ncmimo/scene.hpp"
#include "ncmimo/signal.hpp"

#include <Eigen/Dense>

#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncmimo {

/// Diagonals of Z_x(k), Z_y(k), Z_z(k): -j 2 pi f_c / c times the summed
/// transmitter and receiver direction cosines of each path.
template <typename Scalar>
struct ZMatrices {
  ComplexVector<Scalar> zx, zy, zz;

  const ComplexVector<Scalar>& axis(int a) const { return a == 0 ? zx : (a == 1 ? zy : zz); }
};

template <typename Scalar>
ZMatrices<Scalar> z_matrices_at(const AntennaGeometry<Scalar>& geometry, const MotionCoefficients<Scalar>& motion,
                                const RadarParams<Scalar>& params, Scalar t) {
  const int tx = geometry.tx_count();
  const int rx = geometry.rx_count();
  const Position3<Scalar> pos = eval_position_at(motion, t);
  std::vector<Position3<Scalar>> u_tx(tx), u_rx(rx);
  for (int m = 0; m < tx; ++m) {
    const Position3<Scalar> d = pos - geometry.transmitters[m];
    const Scalar r = d.norm();
    if (!(r > 0)) throw std::domain_error("z_matrices: target coincides with transmitter " + std::to_string(m));
    u_tx[m] = d / r;
  }
  for (int n = 0; n < rx; ++n) {
    const Position3<Scalar> d = pos - geometry.receivers[n];
    const Scalar r = d.norm();
    if (!(r > 0)) throw std::domain_error("z_matrices: target coincides with receiver " + std::to_string(n));
    u_rx[n] = d / r;
  }
  const std::complex<Scalar> scale(0, -Scalar(2) * std::numbers::pi_v<Scalar> * params.carrier_frequency /
                                          params.propagation_speed);
  ZMatrices<Scalar> z{ComplexVector<Scalar>(tx * rx), ComplexVector<Scalar>(tx * rx), ComplexVector<Scalar>(tx * rx)};
  for (int n = 0; n < rx; ++n) {
    for (int m = 0; m < tx; ++m) {
      const Position3<Scalar> s = u_tx[m] + u_rx[n];
      z.zx(n * tx + m) = scale * s.x();
      z.zy(n * tx + m) = scale * s.y();
      z.zz(n * tx + m) = scale * s.z();
    }
  }
  return z;
}

template <typename Scalar>
ZMatrices<Scalar> z_matrices(const AntennaGeometry<Scalar>& geometry, const MotionCoefficients<Scalar>& motion,
                             const RadarParams<Scalar>& params, int k) {
  if (k < 0 || k >= params.snapshot_count) throw std::out_of_range("z_matrices: snapshot index out of range");
  return z_matrices_at(geometry, motion, params, params.time_of(k));
}

/// B(k) = h^T (x) b, an MN x (Q+1) matrix whose column q is h_q b.
template <typename Scalar>
ComplexMatrix<Scalar> b_matrix(const ComplexVector<Scalar>& b, const VectorX<Scalar>& h) {
  return b * h.transpose().template cast<std::complex<Scalar>>();
}

/// d mu(k) / d psi without the sqrt(E/M) factor: [T Z_x B, T Z_y B, T Z_z B].
template <typename Scalar>
ComplexMatrix<Scalar> mean_jacobian_psi(const AntennaGeometry<Scalar>& geometry,
                                        const MotionCoefficients<Scalar>& motion, const RadarParams<Scalar>& params,
                                        const ComplexVector<Scalar>& b, int k) {
  const int order = motion.order();
  const Scalar t = params.time_of(k);
  ComplexVector<Scalar> steer(geometry.path_count());
  steering_diagonal_at(geometry, motion, params, t, steer);
  const auto z = z_matrices_at(geometry, motion, params, t);
  const ComplexMatrix<Scalar> bk = b_matrix(b, motion_basis(order, t));
  ComplexMatrix<Scalar> jac(geometry.path_count(), 3 * (order + 1));
  for (int a = 0; a < 3; ++a)
    jac.middleCols(a * (order + 1), order + 1) = steer.cwiseProduct(z.axis(a)).asDiagonal() * bk;
  return jac;
}

/// Neumaier-compensated running sum of equally shaped matrices.
template <typename Scalar>
class CompensatedSum {
 public:
  CompensatedSum(Eigen::Index rows, Eigen::Index cols)
      : sum_(MatrixX<Scalar>::Zero(rows, cols)), carry_(MatrixX<Scalar>::Zero(rows, cols)) {}

  void add(const MatrixX<Scalar>& term) {
    using std::abs;
    for (Eigen::Index j = 0; j < sum_.cols(); ++j) {
      for (Eigen::Index i = 0; i < sum_.rows(); ++i) {
        const Scalar s = sum_(i, j);
        const Scalar x = term(i, j);
        const Scalar next = s + x;
        carry_(i, j) += abs(s) >= abs(x) ? (s - next) + x : (x - next) + s;
        sum_(i, j) = next;
      }
    }
  }

  MatrixX<Scalar> value() const { return sum_ + carry_; }

 private:
  MatrixX<Scalar> sum_, carry_;
};

/// Unscaled Fisher-information blocks and their common factor 2E/(sigma^2 M).
template <typename Scalar>
struct FimBlocks {
  MatrixX<Scalar> psi_psi;  // 3(Q+1) x 3(Q+1)
  MatrixX<Scalar> psi_b;    // 3(Q+1) x 2MN
  MatrixX<Scalar> b_b;      // 2MN x 2MN
  Scalar scale{};
  MotionLayout layout;
  /// psi_psi - psi_b b_b^-1 psi_b^T, accumulated in centered form. Empty means
  /// "form it from the blocks".
  MatrixX<Scalar> psi_schur;

  /// Unscaled motion information left after eliminating b.
  MatrixX<Scalar> schur() const {
    if (psi_schur.size() > 0) return psi_schur;
    return psi_psi - psi_b * b_b.ldlt().solve(psi_b.transpose());
  }

  /// Scaled FIM over [psi, Re b, Im b].
  MatrixX<Scalar> assembled() const {
    const Eigen::Index p = psi_psi.rows();
    const Eigen::Index nb = b_b.rows();
    MatrixX<Scalar> f(p + nb, p + nb);
    f.topLeftCorner(p, p) = psi_psi;
    f.topRightCorner(p, nb) = psi_b;
    f.bottomLeftCorner(nb, p) = psi_b.transpose();
    f.bottomRightCorner(nb, nb) = b_b;
    return scale * f;
  }

  /// Scaled FIM with the pinned (z) motion rows and columns removed.
  MatrixX<Scalar> reduced() const {
    const Eigen::Index p = psi_psi.rows();
    const Eigen::Index keep = layout.free_count();
    const Eigen::Index nb = b_b.rows();
    const MatrixX<Scalar> full = assembled();
    MatrixX<Scalar> f(keep + nb, keep + nb);
    f.topLeftCorner(keep, keep) = full.topLeftCorner(keep, keep);
    f.topRightCorner(keep, nb) = full.block(0, p, keep, nb);
    f.bottomLeftCorner(nb, keep) = full.block(p, 0, nb, keep);
    f.bottomRightCorner(nb, nb) = full.bottomRightCorner(nb, nb);
    return f;
  }
};

/// Exact FIM of (psi, Re b, Im b) for the deterministic-b Gaussian model.
///
/// The noise-variance parameter decouples from (psi, b) and is left out.
template <typename Scalar>
FimBlocks<Scalar> fim(const AntennaGeometry<Scalar>& geometry, const MotionCoefficients<Scalar>& motion,
                      const RadarParams<Scalar>& params, const ComplexVector<Scalar>& b, Scalar noise_variance) {
  if (!(noise_variance > 0)) throw std::invalid_argument("fim: noise variance must be positive");
  if (b.size() != geometry.path_count()) throw std::invalid_argument("fim: reflection vector must have length M*N");
  const Eigen::Index paths = geometry.path_count();
  const Eigen::Index p = 3 * (motion.order() + 1);
  CompensatedSum<Scalar> psi_psi(p, p), psi_b(p, 2 * paths), b_b(2 * paths, 2 * paths);
  ComplexVector<Scalar> steer(paths);
  // With |T| = 1, T^H D(k) = Z B(k) =: A(k) and the b-eliminated information is
  // Re sum_k (A(k) - mean A)^H (A(k) - mean A). Summing it centered avoids the
  // cancellation of forming psi_psi - psi_b b_b^-1 psi_b^T.
  std::vector<ComplexMatrix<Scalar>> a_k;
  a_k.reserve(params.snapshot_count);
  ComplexMatrix<Scalar> a_mean = ComplexMatrix<Scalar>::Zero(paths, p);
  for (int k = 0; k < params.snapshot_count; ++k) {
    const ComplexMatrix<Scalar> jac = mean_jacobian_psi(geometry, motion, params, b, k);
    steering_diagonal_at(geometry, motion, params, params.time_of(k), steer);
    a_k.push_back(steer.conjugate().asDiagonal() * jac);
    a_mean += a_k.back();
    psi_psi.add((jac.adjoint() * jac).real());
    // D^H T J with J = [I, jI]: real part is [Re G, -Im G].
    const ComplexMatrix<Scalar> g = jac.adjoint() * steer.asDiagonal();
    MatrixX<Scalar> cross(p, 2 * paths);
    cross << g.real(), -g.imag();
    psi_b.add(cross);
    // J^H T^H T J = [[W, jW], [-jW, W]] with W = diag|t|^2.
    const VectorX<Scalar> w = steer.cwiseAbs2();
    MatrixX<Scalar> bb = MatrixX<Scalar>::Zero(2 * paths, 2 * paths);
    bb.topLeftCorner(paths, paths) = w.asDiagonal();
    bb.bottomRightCorner(paths, paths) = w.asDiagonal();
    b_b.add(bb);
  }
  a_mean /= Scalar(params.snapshot_count);
  CompensatedSum<Scalar> schur(p, p);
  for (const auto& a : a_k) {
    const ComplexMatrix<Scalar> centered = a - a_mean;
    schur.add((centered.adjoint() * centered).real());
  }
  return {psi_psi.value(), psi_b.value(), b_b.value(),
          Scalar(2) * params.energy_per_antenna() / noise_variance, motion.layout(), schur.value()};
}

struct CrbOptions {
  /// Fall back to a pseudo-inverse instead of failing on a singular FIM.
  bool allow_pseudo_inverse = false;
  /// Eigenvalues below this fraction of the largest count as null directions.
  double rank_tolerance = 1e-12;
};

template <typename Scalar>
struct CrbResult {
  MatrixX<Scalar> covariance;  // inverse of the reduced FIM, free psi first then [Re b, Im b]
  VectorX<Scalar> psi_std;     // sqrt of the free-psi diagonal
  MotionLayout layout;
  bool pseudo_inverse = false;
  int null_dimension = 0;

  MatrixX<Scalar> psi_covariance() const {
    const Eigen::Index p = layout.free_count();
    return covariance.topLeftCorner(p, p);
  }
};

class SingularFisherError : public std::runtime_error {
 public:
  SingularFisherError(int null_dimension)
      : std::runtime_error("crb: Fisher information is rank deficient (null-space dimension " +
                           std::to_string(null_dimension) + ")"),
        null_dimension_(null_dimension) {}
  int null_dimension() const { return null_dimension_; }

 private:
  int null_dimension_;
};

/// Inverts the full FIM, nuisance b included, and reports the motion bounds.
///
/// The inverse is assembled blockwise: the motion block is the inverse of the
/// Schur complement, which is where all the ill-conditioning lives.
template <typename Scalar>
CrbResult<Scalar> crb_psi(const FimBlocks<Scalar>& blocks, const CrbOptions& options = {}) {
  const Eigen::Index keep = blocks.layout.free_count();
  const Eigen::Index nb = blocks.b_b.rows();
  const MatrixX<Scalar> s = blocks.scale * blocks.schur().topLeftCorner(keep, keep);
  // Symmetric equilibration keeps meters and m/s^2 columns comparable.
  const VectorX<Scalar> d = s.diagonal().cwiseAbs().cwiseMax(std::numeric_limits<Scalar>::min()).cwiseSqrt();
  const VectorX<Scalar> dinv = d.cwiseInverse();
  const MatrixX<Scalar> g = dinv.asDiagonal() * s * dinv.asDiagonal();
  Eigen::SelfAdjointEigenSolver<MatrixX<Scalar>> eig(g);
  const VectorX<Scalar>& lambda = eig.eigenvalues();
  const Scalar cutoff = Scalar(options.rank_tolerance) * lambda.cwiseAbs().maxCoeff();
  int null_dim = 0;
  VectorX<Scalar> inv_lambda(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (lambda(i) <= cutoff) {
      ++null_dim;
      inv_lambda(i) = 0;
    } else {
      inv_lambda(i) = Scalar(1) / lambda(i);
    }
  }
  if (null_dim > 0 && !options.allow_pseudo_inverse) throw SingularFisherError(null_dim);

  const MatrixX<Scalar> ginv = eig.eigenvectors() * inv_lambda.asDiagonal() * eig.eigenvectors().transpose();
  const MatrixX<Scalar> s_inv = dinv.asDiagonal() * ginv * dinv.asDiagonal();
  const MatrixX<Scalar> f_bb = blocks.scale * blocks.b_b;
  const MatrixX<Scalar> f_psi_b = blocks.scale * blocks.psi_b.topRows(keep);
  const Eigen::LDLT<MatrixX<Scalar>> bb(f_bb);
  const MatrixX<Scalar> w = bb.solve(f_psi_b.transpose());  // F_bb^-1 F_b,psi

  CrbResult<Scalar> out;
  out.covariance.resize(keep + nb, keep + nb);
  out.covariance.topLeftCorner(keep, keep) = s_inv;
  out.covariance.topRightCorner(keep, nb) = -s_inv * w.transpose();
  out.covariance.bottomLeftCorner(nb, keep) = -w * s_inv;
  out.covariance.bottomRightCorner(nb, nb) =
      bb.solve(MatrixX<Scalar>::Identity(nb, nb)) + w * s_inv * w.transpose();
  out.layout = blocks.layout;
  out.pseudo_inverse = null_dim > 0;
  out.null_dimension = null_dim;
  out.psi_std = s_inv.diagonal().cwiseMax(Scalar(0)).cwiseSqrt();
  return out;
}

using FimBlocksd = FimBlocks<double>;
using CrbResultd = CrbResult<double>;

}  // namespace ncmimo
