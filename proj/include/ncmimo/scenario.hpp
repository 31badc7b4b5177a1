#pragma once

#include "ncmimo/estimator.hpp"
#include "ncmimo/scene.hpp"
#include "ncmimo/signal.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ncmimo {

/// Pulse timing inside one coherent integration interval.
struct PulseSchedule {
  double pulse_repetition = 0.0;  // s
  int pulses_per_cit = 1;
};

/// Settings for init-centered estimation (coarse ranges + search widths).
struct EstimatorSettings {
  double range_noise = 1.0;  // m, std of simulated coarse ranges
  /// Search half-width per polynomial order (m, m/s, m/s^2, ...).
  std::vector<double> half_widths;
  OptimizerConfig optimizer;
};

/// Immutable experiment description.
struct Scenario {
  std::string name;
  AntennaGeometryd geometry;
  RadarParamsd radar;
  MotionCoefficientsd truth;
  PulseSchedule schedule;
  std::uint64_t reflection_seed = 0;
  ReflectionVector reflection;  // drawn from reflection_seed
  EstimatorSettings estimator;

  MotionLayout layout() const { return truth.layout(); }
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Built-in scenarios: "example1" (second-order, 3x5 antennas) and "example2" (first-order).
Scenario preset(std::string_view name);
bool is_preset(std::string_view name);

/// Preset name or YAML file path.
Scenario load_scenario(const std::string& path_or_preset);
Scenario parse_scenario(const std::string& yaml_text);
std::string serialize_scenario(const Scenario& scenario);

SnapshotSet synthesize(const Scenario& scenario, double noise_variance, std::uint64_t seed);

/// Per-receiver target ranges (N x K) with Gaussian errors of std `noise`.
Eigen::MatrixXd simulate_ranges(const Scenario& scenario, double noise, std::uint64_t seed);

/// Largest |f_mn(first pulse) - f_mn(last pulse)| over every path and interval, in Hz.
double check_doppler_cit(const Scenario& scenario);

/// Parameter label and unit for stacked index `i` of a motion with `order`.
std::string parameter_name(int order, int stacked_index);
std::string parameter_unit(int order, int stacked_index);
/// Inverse of parameter_name; throws ConfigError on unknown labels.
int parameter_index(int order, std::string_view name);

}  // namespace ncmimo
