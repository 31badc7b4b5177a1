#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ncmimo {

template <typename Scalar>
using Position3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// Transmit and receive antenna positions of the multistatic system.
///
/// Virtual paths are indexed receiver-major: path (m, n) lives at
/// `n * M + m`, the same layout the Fisher-information derivatives use.
template <typename Scalar>
struct AntennaGeometry {
  std::vector<Position3<Scalar>> transmitters;
  std::vector<Position3<Scalar>> receivers;

  int tx_count() const { return static_cast<int>(transmitters.size()); }
  int rx_count() const { return static_cast<int>(receivers.size()); }
  int path_count() const { return tx_count() * rx_count(); }
  int path_index(int m, int n) const { return n * tx_count() + m; }

  void validate() const {
    if (transmitters.empty()) throw std::invalid_argument("geometry: at least one transmitter required");
    if (receivers.empty()) throw std::invalid_argument("geometry: at least one receiver required");
    for (const auto& p : transmitters)
      if (!p.allFinite()) throw std::invalid_argument("geometry: non-finite transmitter position");
    for (const auto& p : receivers)
      if (!p.allFinite()) throw std::invalid_argument("geometry: non-finite receiver position");
  }

  template <typename Other>
  AntennaGeometry<Other> cast() const {
    AntennaGeometry<Other> out;
    for (const auto& p : transmitters) out.transmitters.push_back(p.template cast<Other>());
    for (const auto& p : receivers) out.receivers.push_back(p.template cast<Other>());
    return out;
  }
};

/// Carrier, propagation and slow-time constants.
template <typename Scalar>
struct RadarParams {
  Scalar carrier_frequency{};  // Hz
  Scalar propagation_speed{};  // m/s
  Scalar snapshot_interval{};  // s, one coherent integration interval
  int snapshot_count = 0;
  Scalar energy_ratio{1};  // sqrt(E / M)

  void validate() const {
    using std::isfinite;
    if (!(carrier_frequency > 0) || !isfinite(carrier_frequency))
      throw std::invalid_argument("radar: carrier_frequency must be positive");
    if (!(propagation_speed > 0) || !isfinite(propagation_speed))
      throw std::invalid_argument("radar: propagation_speed must be positive");
    if (!(snapshot_interval > 0) || !isfinite(snapshot_interval))
      throw std::invalid_argument("radar: snapshot_interval must be positive");
    if (snapshot_count < 1) throw std::invalid_argument("radar: snapshot_count must be >= 1");
    if (!(energy_ratio > 0) || !isfinite(energy_ratio))
      throw std::invalid_argument("radar: energy_ratio must be positive");
  }

  Scalar time_of(int k) const { return Scalar(k) * snapshot_interval; }
  Scalar energy_per_antenna() const { return energy_ratio * energy_ratio; }

  template <typename Other>
  RadarParams<Other> cast() const {
    return {Other(carrier_frequency), Other(propagation_speed), Other(snapshot_interval), snapshot_count,
            Other(energy_ratio)};
  }
};

/// Shape of the estimand: polynomial order and whether the z axis is pinned.
struct MotionLayout {
  int order = 0;
  bool planar = false;

  int axis_count() const { return planar ? 2 : 3; }
  int coefficient_count() const { return 3 * (order + 1); }
  // Free parameters are a prefix of the stacked [x, y, z] vector.
  int free_count() const { return axis_count() * (order + 1); }
  bool operator==(const MotionLayout&) const = default;
};

/// Factorial-weighted polynomial coefficients of the target trajectory.
///
/// Row `a` of the table holds axis `a` (x, y, z); column `q` multiplies
/// t^q / q!. Orders 0, 1, 2 are initial position, velocity and acceleration.
/// A planar motion keeps every z coefficient at zero and excludes them from
/// the free parameter vector.
template <typename Scalar>
class MotionCoefficients {
 public:
  using Table = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

  MotionCoefficients() : table_(Table::Zero(3, 1)) {}

  explicit MotionCoefficients(Table table, bool planar = false) : table_(std::move(table)), planar_(planar) {
    if (table_.cols() < 1) throw std::invalid_argument("motion: at least one coefficient per axis required");
    if (!table_.allFinite()) throw std::invalid_argument("motion: non-finite coefficient");
    if (planar_ && !table_.row(2).isZero(0)) throw std::invalid_argument("motion: planar motion needs zero z coefficients");
  }

  static MotionCoefficients from_axes(const VectorX<Scalar>& cx, const VectorX<Scalar>& cy,
                                      const VectorX<Scalar>& cz, bool planar = false) {
    if (cx.size() != cy.size() || cx.size() != cz.size())
      throw std::invalid_argument("motion: every axis needs order + 1 coefficients");
    Table t(3, cx.size());
    t.row(0) = cx.transpose();
    t.row(1) = cy.transpose();
    t.row(2) = cz.transpose();
    return MotionCoefficients(std::move(t), planar);
  }

  /// Planar motion from x and y coefficient lists.
  static MotionCoefficients planar_from(const VectorX<Scalar>& cx, const VectorX<Scalar>& cy) {
    return from_axes(cx, cy, VectorX<Scalar>::Zero(cx.size()), true);
  }

  int order() const { return static_cast<int>(table_.cols()) - 1; }
  bool planar() const { return planar_; }
  MotionLayout layout() const { return {order(), planar_}; }
  const Table& table() const { return table_; }
  Scalar operator()(int axis, int q) const { return table_(axis, q); }

  /// psi = [C_0..C_Q, D_0..D_Q, E_0..E_Q].
  VectorX<Scalar> stacked() const {
    const Eigen::Index n = table_.cols();
    VectorX<Scalar> psi(3 * n);
    for (int a = 0; a < 3; ++a) psi.segment(a * n, n) = table_.row(a).transpose();
    return psi;
  }

  static MotionCoefficients from_stacked(const VectorX<Scalar>& psi, bool planar = false) {
    if (psi.size() % 3 != 0 || psi.size() == 0) throw std::invalid_argument("motion: stacked size must be 3(Q+1)");
    const Eigen::Index n = psi.size() / 3;
    Table t(3, n);
    for (int a = 0; a < 3; ++a) t.row(a) = psi.segment(a * n, n).transpose();
    return MotionCoefficients(std::move(t), planar);
  }

  VectorX<Scalar> free_parameters() const { return stacked().head(layout().free_count()); }

  MotionCoefficients with_free_parameters(const VectorX<Scalar>& values) const {
    const auto lay = layout();
    if (values.size() != lay.free_count()) throw std::invalid_argument("motion: wrong free parameter count");
    VectorX<Scalar> psi = stacked();
    psi.head(lay.free_count()) = values;
    return from_stacked(psi, planar_);
  }

  static MotionCoefficients from_free(const MotionLayout& lay, const VectorX<Scalar>& values) {
    return MotionCoefficients(Table::Zero(3, lay.order + 1), lay.planar).with_free_parameters(values);
  }

  template <typename Other>
  MotionCoefficients<Other> cast() const {
    return MotionCoefficients<Other>(table_.template cast<Other>(), planar_);
  }

 private:
  Table table_;
  bool planar_ = false;
};

/// [1, t, t^2/2!, ..., t^Q/Q!]
template <typename Scalar>
VectorX<Scalar> motion_basis(int order, Scalar t) {
  VectorX<Scalar> h(order + 1);
  h(0) = Scalar(1);
  for (int q = 1; q <= order; ++q) h(q) = h(q - 1) * t / Scalar(q);
  return h;
}

/// Target position at continuous time `t` (seconds from the first snapshot).
template <typename Scalar>
Position3<Scalar> eval_position_at(const MotionCoefficients<Scalar>& motion, Scalar t) {
  const auto& c = motion.table();
  const int order = motion.order();
  Position3<Scalar> acc = c.col(order);
  for (int q = order; q >= 1; --q) acc = c.col(q - 1) + (t / Scalar(q)) * acc;
  return acc;
}

template <typename Scalar>
Position3<Scalar> eval_position(const MotionCoefficients<Scalar>& motion, const RadarParams<Scalar>& params, int k) {
  if (k < 0 || k >= params.snapshot_count) throw std::out_of_range("eval_position: snapshot index out of range");
  return eval_position_at(motion, params.time_of(k));
}

/// Transmitter and receiver ranges (d_m, d_n) of a point.
template <typename Scalar>
std::pair<Scalar, Scalar> path_ranges(const AntennaGeometry<Scalar>& geometry, const Position3<Scalar>& pos, int m,
                                      int n) {
  return {(pos - geometry.transmitters.at(m)).norm(), (pos - geometry.receivers.at(n)).norm()};
}

template <typename Scalar>
Scalar path_delay_at(const AntennaGeometry<Scalar>& geometry, const MotionCoefficients<Scalar>& motion,
                     const RadarParams<Scalar>& params, int m, int n, Scalar t) {
  const auto [dm, dn] = path_ranges(geometry, eval_position_at(motion, t), m, n);
  return (dm + dn) / params.propagation_speed;
}

/// Bistatic propagation delay of path (m, n) at snapshot k.
template <typename Scalar>
Scalar path_delay(const AntennaGeometry<Scalar>& geometry, const MotionCoefficients<Scalar>& motion,
                  const RadarParams<Scalar>& params, int m, int n, int k) {
  if (k < 0 || k >= params.snapshot_count) throw std::out_of_range("path_delay: snapshot index out of range");
  return path_delay_at(geometry, motion, params, m, n, params.time_of(k));
}

/// Doppler shift -f_c * d(tau)/dt at continuous time `t`, central difference with step `dt`.
template <typename Scalar>
Scalar doppler_at(const AntennaGeometry<Scalar>& geometry, const MotionCoefficients<Scalar>& motion,
                  const RadarParams<Scalar>& params, int m, int n, Scalar t, Scalar dt) {
  if (!(dt > 0)) throw std::invalid_argument("doppler: dt must be positive");
  // Differentiate the range sum; dividing by c afterwards keeps the
  // difference well above the delay's rounding floor.
  auto range_sum = [&](Scalar time) {
    const auto [dm, dn] = path_ranges(geometry, eval_position_at(motion, time), m, n);
    return dm + dn;
  };
  const Scalar rate = (range_sum(t + dt) - range_sum(t - dt)) / (Scalar(2) * dt);
  return -params.carrier_frequency * rate / params.propagation_speed;
}

template <typename Scalar>
Scalar instantaneous_doppler(const AntennaGeometry<Scalar>& geometry, const MotionCoefficients<Scalar>& motion,
                             const RadarParams<Scalar>& params, int m, int n, int k, Scalar dt) {
  if (k < 0 || k >= params.snapshot_count)
    throw std::out_of_range("instantaneous_doppler: snapshot index out of range");
  return doppler_at(geometry, motion, params, m, n, params.time_of(k), dt);
}

using Position3d = Position3<double>;
using AntennaGeometryd = AntennaGeometry<double>;
using RadarParamsd = RadarParams<double>;
using MotionCoefficientsd = MotionCoefficients<double>;

}  // namespace ncmimo
