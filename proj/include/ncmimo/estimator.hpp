#pragma once

#include "ncmimo/likelihood.hpp"
#include "ncmimo/scene.hpp"
#include "ncmimo/signal.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace ncmimo {

/// Axis-aligned bounds on the free motion parameters.
struct SearchBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static SearchBox centered(const Eigen::VectorXd& center, const Eigen::VectorXd& half_width);

  Eigen::Index size() const { return lower.size(); }
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  Eigen::VectorXd width() const { return upper - lower; }
  bool contains(const Eigen::VectorXd& x) const;
  void validate() const;
};

struct OptimizerConfig {
  /// Independent global searches; the best refined result wins.
  int islands = 8;
  int population = 32;
  int generations = 150;
  /// Local stage stops once the simplex spread falls below this relative level.
  double tolerance = 1e-10;
  std::uint64_t seed = 0;
  double crossover_rate = 0.9;
  int tournament_size = 3;
  int elite_count = 2;
  /// Initial and final mutation standard deviation as a fraction of box width.
  double mutation_start = 0.1;
  double mutation_end = 0.005;
  /// Initial simplex edge as a fraction of box width.
  double simplex_step = 0.05;
  int local_max_evaluations = 4000;
  int local_restarts = 4;
  /// Called with every evaluated parameter vector (free parameters).
  std::function<void(const Eigen::VectorXd&)> observer;

  void validate() const;
};

struct EstimateDiagnostics {
  int evaluations = 0;
  int generations = 0;
  double global_best = 0.0;     // positive LL of the global stage winner
  int local_iterations = 0;
  int local_restarts = 0;
};

struct Estimate {
  MotionCoefficientsd motion;
  ReflectionVector reflection;
  ObjectiveValue<double> value;
  EstimateDiagnostics diagnostics;
};

class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Global evolutionary search over `box` followed by simplex refinement.
Estimate estimate(const ObjectiveContextd& ctx, const MotionLayout& layout, const SearchBox& box,
                  const OptimizerConfig& cfg);

/// Local simplex refinement only, starting from `start` (free parameters).
Estimate refine(const ObjectiveContextd& ctx, const MotionLayout& layout, const SearchBox& box,
                const Eigen::VectorXd& start, const OptimizerConfig& cfg);

/// Result of one range-only position fix.
struct PositionFix {
  Position3d position;
  Eigen::Matrix3d covariance;  // zero rows/cols for a pinned z
  int iterations = 0;
};

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Gauss-Newton fit of sum_n ((||L - q_n|| - r_n) / s_n)^2 from the receiver centroid.
PositionFix multilaterate(const std::vector<Position3d>& receivers, const Eigen::VectorXd& ranges,
                          const Eigen::VectorXd& range_std, bool planar, int max_iterations = 50);

/// Coarse motion estimate from per-receiver ranges.
///
/// `ranges` is N x K (receiver n, snapshot k). Each snapshot is multilaterated,
/// then each axis is fit by weighted least squares on [1, t, t^2/2!, ...].
MotionCoefficientsd coarse_init(const Eigen::MatrixXd& ranges, const Eigen::VectorXd& range_std,
                                const AntennaGeometryd& geometry, const RadarParamsd& params, int order, bool planar);

/// One axis of an objective grid: a free parameter swept over [lower, upper].
struct GridAxis {
  int parameter = 0;  // index into the stacked motion vector
  double lower = 0.0;
  double upper = 1.0;
  int count = 2;

  double value(int i) const { return lower + (upper - lower) * static_cast<double>(i) / (count - 1); }
};

struct ContourGrid {
  GridAxis rows;   // axis1, ascending down the rows
  GridAxis cols;   // axis2, ascending across columns
  Eigen::MatrixXd values;
};

/// positive_ll over a 2D grid with every other coefficient taken from `fixed`.
ContourGrid objective_grid(const ObjectiveContextd& ctx, const MotionCoefficientsd& fixed, const GridAxis& axis1,
                           const GridAxis& axis2);

}  // namespace ncmimo
