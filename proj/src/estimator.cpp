#include "ncmimo/estimator.hpp"

#include "ncmimo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ncmimo {

SearchBox SearchBox::centered(const Eigen::VectorXd& center, const Eigen::VectorXd& half_width) {
  if (center.size() != half_width.size()) throw std::invalid_argument("search box: center and width sizes differ");
  SearchBox box{center - half_width, center + half_width};
  box.validate();
  return box;
}

bool SearchBox::contains(const Eigen::VectorXd& x) const {
  return x.size() == size() && (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
}

void SearchBox::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0) throw std::invalid_argument("search box: bad dimensions");
  if (!lower.allFinite() || !upper.allFinite()) throw std::invalid_argument("search box: bounds must be finite");
  if (!(lower.array() < upper.array()).all()) throw std::invalid_argument("search box: lower must be below upper");
}

void OptimizerConfig::validate() const {
  if (islands < 1) throw std::invalid_argument("optimizer: islands must be >= 1");
  if (population < 2) throw std::invalid_argument("optimizer: population must be >= 2");
  if (generations < 1) throw std::invalid_argument("optimizer: generations must be >= 1");
  if (!(tolerance > 0)) throw std::invalid_argument("optimizer: tolerance must be positive");
  if (tournament_size < 1) throw std::invalid_argument("optimizer: tournament size must be >= 1");
  if (elite_count < 0 || elite_count >= population) throw std::invalid_argument("optimizer: bad elite count");
  if (!(crossover_rate >= 0 && crossover_rate <= 1)) throw std::invalid_argument("optimizer: crossover rate in [0, 1]");
  if (!(mutation_start > 0) || !(mutation_end > 0)) throw std::invalid_argument("optimizer: mutation scales must be positive");
  if (!(simplex_step > 0)) throw std::invalid_argument("optimizer: simplex step must be positive");
  if (local_max_evaluations < 1 || local_restarts < 0) throw std::invalid_argument("optimizer: bad local budget");
}

namespace {

// Candidates live in the unit cube; the box maps them to motion parameters.
class BoxProblem {
 public:
  BoxProblem(const ObjectiveContextd& ctx, const MotionLayout& layout, const SearchBox& box,
             const std::function<void(const Eigen::VectorXd&)>& observer)
      : ctx_(ctx), layout_(layout), box_(box), center_(box.center()), width_(box.width()), observer_(observer) {}

  Eigen::VectorXd to_params(const Eigen::VectorXd& u) const {
    return (box_.lower + u.cwiseProduct(width_)).cwiseMax(box_.lower).cwiseMin(box_.upper);
  }
  Eigen::VectorXd to_unit(const Eigen::VectorXd& x) const {
    return (x - box_.lower).cwiseQuotient(width_).cwiseMax(0.0).cwiseMin(1.0);
  }

  /// positive LL, or -inf when the evaluation is not finite.
  double fitness(const Eigen::VectorXd& u) {
    ++evaluations_;
    const Eigen::VectorXd x = to_params(u);
    if (observer_) observer_(x);
    const auto motion = MotionCoefficientsd::from_free(layout_, x);
    const double value = objective(ctx_, motion).positive_ll;
    return std::isfinite(value) ? value : -std::numeric_limits<double>::infinity();
  }

  double center_distance(const Eigen::VectorXd& u) const { return (to_params(u) - center_).norm(); }

  /// Concentrated negative LL from a fitness value.
  double negative(double fitness) const {
    return ctx_.total_energy() - fitness / static_cast<double>(ctx_.snapshot_count());
  }

  int evaluations() const { return evaluations_; }
  int dimension() const { return static_cast<int>(width_.size()); }
  const ObjectiveContextd& context() const { return ctx_; }
  const MotionLayout& layout() const { return layout_; }

 private:
  const ObjectiveContextd& ctx_;
  MotionLayout layout_;
  const SearchBox& box_;
  Eigen::VectorXd center_;
  Eigen::VectorXd width_;
  const std::function<void(const Eigen::VectorXd&)>& observer_;
  int evaluations_ = 0;
};

struct Candidate {
  Eigen::VectorXd u;
  double fitness = -std::numeric_limits<double>::infinity();
  double distance = 0.0;
};

// Higher fitness first; ties go to the candidate nearer the box center.
bool better(const Candidate& a, const Candidate& b) {
  if (a.fitness != b.fitness) return a.fitness > b.fitness;
  return a.distance < b.distance;
}

Candidate evaluate(BoxProblem& problem, Eigen::VectorXd u) {
  Candidate c;
  c.fitness = problem.fitness(u);
  c.distance = problem.center_distance(u);
  c.u = std::move(u);
  return c;
}

Candidate evolve(BoxProblem& problem, const OptimizerConfig& cfg, std::uint64_t seed, int& generations_run) {
  GaussianSource rng(seed);
  const int dim = problem.dimension();
  std::vector<Candidate> pop;
  pop.reserve(cfg.population);
  for (int i = 0; i < cfg.population; ++i) {
    Eigen::VectorXd u(dim);
    for (int d = 0; d < dim; ++d) u(d) = rng.uniform();
    pop.push_back(evaluate(problem, std::move(u)));
  }
  std::sort(pop.begin(), pop.end(), better);

  auto tournament = [&]() -> const Candidate& {
    int best = static_cast<int>(rng.uniform() * cfg.population);
    for (int i = 1; i < cfg.tournament_size; ++i) {
      const int other = static_cast<int>(rng.uniform() * cfg.population);
      if (better(pop[other], pop[best])) best = other;
    }
    return pop[best];
  };

  const double mutation_rate = std::max(1.0 / dim, 0.2);
  generations_run = 1;
  for (int g = 1; g < cfg.generations; ++g) {
    const double progress = cfg.generations > 1 ? static_cast<double>(g) / (cfg.generations - 1) : 1.0;
    const double sigma = cfg.mutation_start * std::pow(cfg.mutation_end / cfg.mutation_start, progress);
    std::vector<Candidate> next(pop.begin(), pop.begin() + cfg.elite_count);
    while (static_cast<int>(next.size()) < cfg.population) {
      const Candidate& a = tournament();
      const Candidate& b = tournament();
      Eigen::VectorXd child = a.u;
      if (rng.uniform() < cfg.crossover_rate) {
        // BLX-0.5
        for (int d = 0; d < dim; ++d) {
          const double lo = std::min(a.u(d), b.u(d));
          const double span = std::abs(a.u(d) - b.u(d));
          child(d) = lo - 0.5 * span + 2.0 * span * rng.uniform();
        }
      }
      for (int d = 0; d < dim; ++d)
        if (rng.uniform() < mutation_rate) child(d) += sigma * rng.standard_normal();
      child = child.cwiseMax(0.0).cwiseMin(1.0);
      next.push_back(evaluate(problem, std::move(child)));
    }
    pop = std::move(next);
    std::sort(pop.begin(), pop.end(), better);
    ++generations_run;
  }
  return pop.front();
}

struct SimplexOutcome {
  Candidate best;
  int iterations = 0;
};

// Nelder-Mead on the negative concentrated LL inside the unit cube.
SimplexOutcome simplex_descent(BoxProblem& problem, const Candidate& start, double step, const OptimizerConfig& cfg) {
  const int dim = problem.dimension();
  const double energy = problem.context().total_energy();
  auto cost = [&](const Candidate& c) { return problem.negative(c.fitness); };
  // Lower cost wins; ties broken the same way as in the global stage.
  auto less = [&](const Candidate& a, const Candidate& b) { return better(a, b); };

  std::vector<Candidate> simplex;
  simplex.push_back(start);
  for (int d = 0; d < dim; ++d) {
    Eigen::VectorXd u = start.u;
    u(d) += (u(d) + step <= 1.0) ? step : -step;
    simplex.push_back(evaluate(problem, u.cwiseMax(0.0).cwiseMin(1.0)));
  }

  const int budget_end = problem.evaluations() + cfg.local_max_evaluations;
  int iterations = 0;
  while (problem.evaluations() < budget_end) {
    std::sort(simplex.begin(), simplex.end(), less);
    const double f_lo = cost(simplex.front());
    const double f_hi = cost(simplex.back());
    if (std::abs(f_hi - f_lo) <= cfg.tolerance * (std::abs(f_lo) + std::abs(f_hi)) + 1e-15 * energy) break;
    double spread = 0.0;
    for (int i = 1; i <= dim; ++i) spread = std::max(spread, (simplex[i].u - simplex[0].u).lpNorm<Eigen::Infinity>());
    if (spread < 1e-14) break;
    ++iterations;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < dim; ++i) centroid += simplex[i].u;
    centroid /= dim;
    auto toward = [&](double coeff) {
      return Eigen::VectorXd((centroid + coeff * (simplex.back().u - centroid)).cwiseMax(0.0).cwiseMin(1.0));
    };

    const Candidate reflected = evaluate(problem, toward(-1.0));
    if (less(reflected, simplex.front())) {
      const Candidate expanded = evaluate(problem, toward(-2.0));
      simplex.back() = less(expanded, reflected) ? expanded : reflected;
      continue;
    }
    if (less(reflected, simplex[dim - 1])) {
      simplex.back() = reflected;
      continue;
    }
    const bool outside = less(reflected, simplex.back());
    const Candidate contracted = evaluate(problem, toward(outside ? -0.5 : 0.5));
    if (less(contracted, outside ? reflected : simplex.back())) {
      simplex.back() = contracted;
      continue;
    }
    for (int i = 1; i <= dim; ++i)
      simplex[i] = evaluate(problem, Eigen::VectorXd(simplex[0].u + 0.5 * (simplex[i].u - simplex[0].u)));
  }
  std::sort(simplex.begin(), simplex.end(), less);
  return {simplex.front(), iterations};
}

Candidate refine_candidate(BoxProblem& problem, Candidate start, const OptimizerConfig& cfg,
                           EstimateDiagnostics& diag) {
  const double energy = problem.context().total_energy();
  double step = cfg.simplex_step;
  for (int r = 0; r <= cfg.local_restarts; ++r) {
    const SimplexOutcome out = simplex_descent(problem, start, step, cfg);
    diag.local_iterations += out.iterations;
    const double gain = out.best.fitness - start.fitness;
    const bool improved = better(out.best, start);
    if (improved) start = out.best;
    if (r > 0) ++diag.local_restarts;
    const double scale = std::abs(problem.negative(start.fitness));
    if (!improved || gain / static_cast<double>(problem.context().snapshot_count()) <=
                         cfg.tolerance * scale + 1e-15 * energy)
      break;
    step *= 0.5;
  }
  return start;
}

Estimate finish(BoxProblem& problem, const Candidate& best, EstimateDiagnostics diag) {
  if (!std::isfinite(best.fitness)) throw EstimationError("estimate: no finite objective value found within budget");
  Estimate out;
  out.motion = MotionCoefficientsd::from_free(problem.layout(), problem.to_params(best.u));
  out.reflection = concentrate_b(problem.context(), out.motion);
  out.value = objective(problem.context(), out.motion);
  diag.evaluations = problem.evaluations();
  out.diagnostics = diag;
  return out;
}

void check_inputs(const ObjectiveContextd& ctx, const MotionLayout& layout, const SearchBox& box,
                  const OptimizerConfig& cfg) {
  box.validate();
  cfg.validate();
  if (box.size() != layout.free_count()) throw std::invalid_argument("estimate: box size must match free parameters");
  if (ctx.snapshot_count() < 1) throw std::invalid_argument("estimate: empty context");
}

}  // namespace

Estimate estimate(const ObjectiveContextd& ctx, const MotionLayout& layout, const SearchBox& box,
                  const OptimizerConfig& cfg) {
  check_inputs(ctx, layout, box, cfg);
  BoxProblem problem(ctx, layout, box, cfg.observer);
  EstimateDiagnostics diag;
  diag.global_best = -std::numeric_limits<double>::infinity();
  Candidate best;
  for (int i = 0; i < cfg.islands; ++i) {
    int generations = 0;
    const Candidate global = evolve(problem, cfg, i == 0 ? cfg.seed : mix64(cfg.seed + i), generations);
    diag.generations += generations;
    if (!std::isfinite(global.fitness)) continue;
    diag.global_best = std::max(diag.global_best, global.fitness);
    const Candidate local = refine_candidate(problem, global, cfg, diag);
    if (better(local, best)) best = local;
  }
  return finish(problem, best, diag);
}

Estimate refine(const ObjectiveContextd& ctx, const MotionLayout& layout, const SearchBox& box,
                const Eigen::VectorXd& start, const OptimizerConfig& cfg) {
  check_inputs(ctx, layout, box, cfg);
  if (start.size() != layout.free_count()) throw std::invalid_argument("refine: start size must match free parameters");
  BoxProblem problem(ctx, layout, box, cfg.observer);
  EstimateDiagnostics diag;
  const Candidate first = evaluate(problem, problem.to_unit(start));
  diag.global_best = first.fitness;
  const Candidate best = refine_candidate(problem, first, cfg, diag);
  return finish(problem, best, diag);
}

PositionFix multilaterate(const std::vector<Position3d>& receivers, const Eigen::VectorXd& ranges,
                          const Eigen::VectorXd& range_std, bool planar, int max_iterations) {
  const int n = static_cast<int>(receivers.size());
  const int dim = planar ? 2 : 3;
  if (n < dim + 1)
    throw GeometryError("multilaterate: need at least " + std::to_string(dim + 1) + " receivers, got " +
                        std::to_string(n));
  if (ranges.size() != n || range_std.size() != n) throw std::invalid_argument("multilaterate: size mismatch");
  if (!(range_std.array() > 0).all()) throw std::invalid_argument("multilaterate: range std must be positive");

  Eigen::MatrixXd spread(n, dim);
  Position3d centroid = Position3d::Zero();
  for (const auto& q : receivers) centroid += q;
  centroid /= n;
  for (int i = 0; i < n; ++i) spread.row(i) = (receivers[i] - centroid).head(dim).transpose();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> rank_check(spread);
  rank_check.setThreshold(1e-9);
  if (rank_check.rank() < dim)
    throw GeometryError("multilaterate: receiver geometry is rank deficient (rank " +
                        std::to_string(rank_check.rank()) + " < " + std::to_string(dim) + ")");

  Eigen::VectorXd x = centroid.head(dim);
  Eigen::MatrixXd jac(n, dim);
  Eigen::VectorXd res(n);
  auto linearize = [&](const Eigen::VectorXd& at) {
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd d = at - receivers[i].head(dim);
      const double r = d.norm();
      res(i) = (r - ranges(i)) / range_std(i);
      jac.row(i) = r > 0 ? Eigen::RowVectorXd(d.transpose() / (r * range_std(i))) : Eigen::RowVectorXd::Zero(dim);
    }
  };
  int it = 0;
  for (; it < max_iterations; ++it) {
    linearize(x);
    const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-res);
    x += step;
    if (step.norm() <= 1e-12 * (1.0 + x.norm())) {
      ++it;
      break;
    }
  }
  linearize(x);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(jac);
  if (qr.rank() < dim) throw GeometryError("multilaterate: Jacobian is rank deficient at the solution");

  PositionFix fix;
  fix.position = Position3d::Zero();
  fix.position.head(dim) = x;
  fix.covariance = Eigen::Matrix3d::Zero();
  fix.covariance.topLeftCorner(dim, dim) = (jac.transpose() * jac).inverse();
  fix.iterations = it;
  return fix;
}

MotionCoefficientsd coarse_init(const Eigen::MatrixXd& ranges, const Eigen::VectorXd& range_std,
                                const AntennaGeometryd& geometry, const RadarParamsd& params, int order, bool planar) {
  if (order < 0) throw std::invalid_argument("coarse_init: order must be non-negative");
  const int k_count = static_cast<int>(ranges.cols());
  if (ranges.rows() != geometry.rx_count()) throw std::invalid_argument("coarse_init: one range row per receiver");
  if (k_count < order + 1)
    throw std::invalid_argument("coarse_init: need at least " + std::to_string(order + 1) + " snapshots, got " +
                                std::to_string(k_count));

  const int axes = planar ? 2 : 3;
  Eigen::MatrixXd positions(axes, k_count);
  Eigen::MatrixXd weights(axes, k_count);
  for (int k = 0; k < k_count; ++k) {
    const PositionFix fix = multilaterate(geometry.receivers, ranges.col(k), range_std, planar);
    positions.col(k) = fix.position.head(axes);
    weights.col(k) = fix.covariance.diagonal().head(axes).cwiseInverse();
  }

  Eigen::MatrixXd basis(k_count, order + 1);
  for (int k = 0; k < k_count; ++k) basis.row(k) = motion_basis(order, params.time_of(k)).transpose();

  MotionCoefficientsd::Table table = MotionCoefficientsd::Table::Zero(3, order + 1);
  for (int a = 0; a < axes; ++a) {
    const Eigen::VectorXd sw = weights.row(a).transpose().cwiseSqrt();
    const Eigen::MatrixXd lhs = sw.asDiagonal() * basis;
    const Eigen::VectorXd rhs = sw.cwiseProduct(positions.row(a).transpose());
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(lhs);
    if (qr.rank() < order + 1) throw GeometryError("coarse_init: polynomial regression is rank deficient");
    table.row(a) = qr.solve(rhs).transpose();
  }
  return MotionCoefficientsd(table, planar);
}

ContourGrid objective_grid(const ObjectiveContextd& ctx, const MotionCoefficientsd& fixed, const GridAxis& axis1,
                           const GridAxis& axis2) {
  const int n = fixed.layout().free_count();
  for (const GridAxis* axis : {&axis1, &axis2}) {
    if (axis->parameter < 0 || axis->parameter >= n)
      throw std::invalid_argument("objective_grid: axis parameter is not a free motion coefficient");
    if (axis->count < 2) throw std::invalid_argument("objective_grid: grid sizes must be >= 2");
    if (!std::isfinite(axis->lower) || !std::isfinite(axis->upper))
      throw std::invalid_argument("objective_grid: axis bounds must be finite");
  }
  if (axis1.parameter == axis2.parameter) throw std::invalid_argument("objective_grid: axes must differ");

  ContourGrid grid{axis1, axis2, Eigen::MatrixXd(axis1.count, axis2.count)};
  Eigen::VectorXd psi = fixed.stacked();
  for (int i = 0; i < axis1.count; ++i) {
    psi(axis1.parameter) = axis1.value(i);
    for (int j = 0; j < axis2.count; ++j) {
      psi(axis2.parameter) = axis2.value(j);
      grid.values(i, j) = objective(ctx, MotionCoefficientsd::from_stacked(psi, fixed.planar())).positive_ll;
    }
  }
  return grid;
}

}  // namespace ncmimo
