#include "ncmimo/scenario.hpp"

#include "ncmimo/rng.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ncmimo {

namespace {

constexpr const char* kAxisNames = "xyz";

std::vector<Position3d> planar_points(std::initializer_list<std::pair<double, double>> pts) {
  std::vector<Position3d> out;
  for (const auto& [x, y] : pts) out.emplace_back(x, y, 0.0);
  return out;
}

Scenario finalize(Scenario s) {
  s.reflection = draw_reflection(s.geometry.path_count(), s.reflection_seed);
  s.validate();
  return s;
}

Scenario example1() {
  Scenario s;
  s.name = "example1";
  s.geometry.transmitters = planar_points({{0, -5000}, {0, 5000}, {5000, 5000}});
  s.geometry.receivers = planar_points({{0, -5000}, {0, 0}, {0, 5000}, {2500, 5000}, {5000, 5000}});
  s.radar = {3e8, 3e8, 0.01, 50, 1.0};
  s.truth = MotionCoefficientsd::planar_from(Eigen::Vector3d(9800, 100, -20), Eigen::Vector3d(0, 0, 0));
  s.schedule = {1.25e-3, 8};
  s.reflection_seed = 20110801;
  s.estimator.range_noise = 0.5;
  s.estimator.half_widths = {30.0, 5.0, 20.0};
  return finalize(std::move(s));
}

Scenario example2() {
  Scenario s;
  s.name = "example2";
  s.geometry.transmitters = planar_points({{0, 0}, {4000, 0}, {0, 4000}});
  s.geometry.receivers = planar_points({{0, 0}, {2000, 0}, {0, 2000}, {6000, 0}, {0, 6000}});
  s.radar = {3e8, 3e8, 0.04, 50, 1.0};
  s.truth = MotionCoefficientsd::planar_from(Eigen::Vector2d(8400, 40), Eigen::Vector2d(9800, -50));
  s.schedule = {1.25e-3, 32};
  s.reflection_seed = 20110802;
  s.estimator.range_noise = 0.5;
  s.estimator.half_widths = {30.0, 5.0};
  return finalize(std::move(s));
}

// --- YAML reading with key paths in every error ---------------------------

YAML::Node require(const YAML::Node& parent, const std::string& key, const std::string& path) {
  const YAML::Node node = parent[key];
  if (!node) throw ConfigError(path + "." + key + ": missing required key '" + key + "'");
  return node;
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(path + ": expected a " + (std::is_integral_v<T> ? "integer" : "number"));
  }
}

template <typename T>
T scalar_at(const YAML::Node& parent, const std::string& key, const std::string& path) {
  return scalar<T>(require(parent, key, path), path + "." + key);
}

template <typename T>
T scalar_or(const YAML::Node& parent, const std::string& key, const std::string& path, T fallback) {
  const YAML::Node node = parent[key];
  return node ? scalar<T>(node, path + "." + key) : fallback;
}

std::vector<double> number_list(const YAML::Node& node, const std::string& path) {
  if (!node.IsSequence()) throw ConfigError(path + ": expected a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i)
    out.push_back(scalar<double>(node[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<Position3d> point_list(const YAML::Node& node, const std::string& path, bool planar) {
  if (!node.IsSequence() || node.size() == 0) throw ConfigError(path + ": expected a non-empty list of points");
  std::vector<Position3d> out;
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string where = path + "[" + std::to_string(i) + "]";
    const auto v = number_list(node[i], where);
    if (v.size() == 2 && planar) {
      out.emplace_back(v[0], v[1], 0.0);
    } else if (v.size() == 3) {
      if (planar && v[2] != 0.0) throw ConfigError(where + ": planar scenarios need z = 0");
      out.emplace_back(v[0], v[1], v[2]);
    } else {
      throw ConfigError(where + ": expected " + std::string(planar ? "2 or 3" : "3") + " coordinates");
    }
  }
  return out;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

void emit_point_list(YAML::Emitter& out, const std::vector<Position3d>& pts, bool planar) {
  out << YAML::BeginSeq;
  for (const auto& p : pts) {
    out << YAML::Flow << YAML::BeginSeq << p.x() << p.y();
    if (!planar) out << p.z();
    out << YAML::EndSeq;
  }
  out << YAML::EndSeq;
}

void emit_list(YAML::Emitter& out, const Eigen::VectorXd& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double x : v) out << x;
  out << YAML::EndSeq;
}

}  // namespace

void Scenario::validate() const {
  geometry.validate();
  radar.validate();
  if (reflection.size() != geometry.path_count())
    throw std::invalid_argument("scenario: reflection vector must have length M*N");
  if (!(schedule.pulse_repetition >= 0) || schedule.pulses_per_cit < 1)
    throw std::invalid_argument("scenario: invalid pulse schedule");
  if (!estimator.half_widths.empty() && static_cast<int>(estimator.half_widths.size()) != truth.order() + 1)
    throw std::invalid_argument("scenario: estimator.half_widths needs one entry per polynomial order");
  for (double w : estimator.half_widths)
    if (!(w > 0)) throw std::invalid_argument("scenario: estimator.half_widths must be positive");
  estimator.optimizer.validate();
}

bool is_preset(std::string_view name) { return name == "example1" || name == "example2"; }

Scenario preset(std::string_view name) {
  if (name == "example1") return example1();
  if (name == "example2") return example2();
  throw ConfigError("unknown preset '" + std::string(name) + "' (known: example1, example2)");
}

Scenario load_scenario(const std::string& path_or_preset) {
  if (is_preset(path_or_preset)) return preset(path_or_preset);
  std::ifstream in(path_or_preset);
  if (!in) throw ConfigError("cannot open scenario file '" + path_or_preset + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str());
}

Scenario parse_scenario(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("scenario: YAML parse error: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("scenario: top level must be a mapping");
  const std::string top = "scenario";

  Scenario s;
  s.name = root["name"] ? root["name"].as<std::string>() : "custom";
  const bool planar = scalar_or<bool>(root, "planar", top, false);

  const YAML::Node geo = require(root, "geometry", top);
  s.geometry.transmitters = point_list(require(geo, "transmitters", top + ".geometry"), top + ".geometry.transmitters", planar);
  s.geometry.receivers = point_list(require(geo, "receivers", top + ".geometry"), top + ".geometry.receivers", planar);

  const std::string rp = top + ".radar";
  const YAML::Node radar = require(root, "radar", top);
  s.radar.carrier_frequency = scalar_at<double>(radar, "carrier_frequency_hz", rp);
  s.radar.propagation_speed = scalar_at<double>(radar, "propagation_speed_m_per_s", rp);
  s.radar.snapshot_interval = scalar_at<double>(radar, "snapshot_interval_s", rp);
  s.radar.snapshot_count = scalar_at<int>(radar, "snapshot_count", rp);
  s.radar.energy_ratio = scalar_or<double>(radar, "energy_ratio", rp, 1.0);

  if (const YAML::Node sched = root["schedule"]) {
    const std::string sp = top + ".schedule";
    s.schedule.pulse_repetition = scalar_at<double>(sched, "pulse_repetition_s", sp);
    s.schedule.pulses_per_cit = scalar_at<int>(sched, "pulses_per_cit", sp);
  }

  const std::string mp = top + ".motion";
  const YAML::Node motion = require(root, "motion", top);
  const int order = scalar_at<int>(motion, "order", mp);
  if (order < 0) throw ConfigError(mp + ".order: must be non-negative");
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(3, order + 1);
  for (int a = 0; a < (planar ? 2 : 3); ++a) {
    const std::string key(1, kAxisNames[a]);
    const auto v = number_list(require(motion, key, mp), mp + "." + key);
    if (static_cast<int>(v.size()) != order + 1)
      throw ConfigError(mp + "." + key + ": expected " + std::to_string(order + 1) + " coefficients");
    table.row(a) = to_vector(v).transpose();
  }
  if (planar && motion["z"]) {
    const auto v = number_list(motion["z"], mp + ".z");
    if (std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; }))
      throw ConfigError(mp + ".z: planar scenarios pin z coefficients to zero");
  }
  s.reflection_seed = scalar_at<std::uint64_t>(root, "reflection_seed", top);

  if (const YAML::Node est = root["estimator"]) {
    const std::string ep = top + ".estimator";
    s.estimator.range_noise = scalar_or<double>(est, "range_noise_m", ep, s.estimator.range_noise);
    if (est["half_widths"]) s.estimator.half_widths = number_list(est["half_widths"], ep + ".half_widths");
    auto& opt = s.estimator.optimizer;
    opt.islands = scalar_or<int>(est, "islands", ep, opt.islands);
    opt.population = scalar_or<int>(est, "population", ep, opt.population);
    opt.generations = scalar_or<int>(est, "generations", ep, opt.generations);
    opt.tolerance = scalar_or<double>(est, "tolerance", ep, opt.tolerance);
  }

  try {
    s.truth = MotionCoefficientsd(table, planar);
    return finalize(std::move(s));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

std::string serialize_scenario(const Scenario& s) {
  const bool planar = s.truth.planar();
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << s.name;
  out << YAML::Key << "planar" << YAML::Value << planar;
  out << YAML::Key << "geometry" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "transmitters" << YAML::Comment("m") << YAML::Value;
  emit_point_list(out, s.geometry.transmitters, planar);
  out << YAML::Key << "receivers" << YAML::Comment("m") << YAML::Value;
  emit_point_list(out, s.geometry.receivers, planar);
  out << YAML::EndMap;
  out << YAML::Key << "radar" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "carrier_frequency_hz" << YAML::Value << s.radar.carrier_frequency;
  out << YAML::Key << "propagation_speed_m_per_s" << YAML::Value << s.radar.propagation_speed;
  out << YAML::Key << "snapshot_interval_s" << YAML::Value << s.radar.snapshot_interval;
  out << YAML::Key << "snapshot_count" << YAML::Value << s.radar.snapshot_count;
  out << YAML::Key << "energy_ratio" << YAML::Value << s.radar.energy_ratio << YAML::Comment("sqrt(E/M)");
  out << YAML::EndMap;
  out << YAML::Key << "schedule" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "pulse_repetition_s" << YAML::Value << s.schedule.pulse_repetition;
  out << YAML::Key << "pulses_per_cit" << YAML::Value << s.schedule.pulses_per_cit;
  out << YAML::EndMap;
  out << YAML::Key << "motion" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "order" << YAML::Value << s.truth.order();
  for (int a = 0; a < (planar ? 2 : 3); ++a) {
    out << YAML::Key << std::string(1, kAxisNames[a]) << YAML::Value;
    emit_list(out, s.truth.table().row(a).transpose());
  }
  out << YAML::EndMap;
  out << YAML::Key << "reflection_seed" << YAML::Value << s.reflection_seed;
  out << YAML::Key << "estimator" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "range_noise_m" << YAML::Value << s.estimator.range_noise;
  if (!s.estimator.half_widths.empty()) {
    out << YAML::Key << "half_widths" << YAML::Value;
    emit_list(out, to_vector(s.estimator.half_widths));
  }
  out << YAML::Key << "islands" << YAML::Value << s.estimator.optimizer.islands;
  out << YAML::Key << "population" << YAML::Value << s.estimator.optimizer.population;
  out << YAML::Key << "generations" << YAML::Value << s.estimator.optimizer.generations;
  out << YAML::Key << "tolerance" << YAML::Value << s.estimator.optimizer.tolerance;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

SnapshotSet synthesize(const Scenario& scenario, double noise_variance, std::uint64_t seed) {
  return synthesize(scenario.geometry, scenario.truth, scenario.radar, scenario.reflection, noise_variance, seed);
}

Eigen::MatrixXd simulate_ranges(const Scenario& scenario, double noise, std::uint64_t seed) {
  if (!(noise >= 0)) throw std::invalid_argument("simulate_ranges: noise must be non-negative");
  GaussianSource rng(seed);
  const auto& rx = scenario.geometry.receivers;
  Eigen::MatrixXd ranges(static_cast<Eigen::Index>(rx.size()), scenario.radar.snapshot_count);
  for (int k = 0; k < scenario.radar.snapshot_count; ++k) {
    const Position3d pos = eval_position(scenario.truth, scenario.radar, k);
    for (std::size_t n = 0; n < rx.size(); ++n) {
      double r = (pos - rx[n]).norm();
      if (noise > 0) r += noise * rng.standard_normal();
      ranges(static_cast<Eigen::Index>(n), k) = r;
    }
  }
  return ranges;
}

double check_doppler_cit(const Scenario& s) {
  const double span = (s.schedule.pulses_per_cit - 1) * s.schedule.pulse_repetition;
  const double dt = 1e-5;
  double worst = 0.0;
  for (int k = 0; k < s.radar.snapshot_count; ++k) {
    const double first = s.radar.time_of(k);
    for (int n = 0; n < s.geometry.rx_count(); ++n) {
      for (int m = 0; m < s.geometry.tx_count(); ++m) {
        const double f0 = doppler_at(s.geometry, s.truth, s.radar, m, n, first, dt);
        const double f1 = doppler_at(s.geometry, s.truth, s.radar, m, n, first + span, dt);
        worst = std::max(worst, std::abs(f1 - f0));
      }
    }
  }
  return worst;
}

std::string parameter_name(int order, int stacked_index) {
  const int axis = stacked_index / (order + 1);
  const int q = stacked_index % (order + 1);
  static const char* kinds[] = {"pos", "vel", "acc"};
  return std::string(1, kAxisNames[axis]) + "_" + (q < 3 ? kinds[q] : "c" + std::to_string(q));
}

std::string parameter_unit(int order, int stacked_index) {
  const int q = stacked_index % (order + 1);
  if (q == 0) return "m";
  if (q == 1) return "m/s";
  return "m/s^" + std::to_string(q);
}

int parameter_index(int order, std::string_view name) {
  for (int i = 0; i < 3 * (order + 1); ++i)
    if (parameter_name(order, i) == name) return i;
  throw ConfigError("unknown motion parameter '" + std::string(name) + "'");
}

}  // namespace ncmimo
