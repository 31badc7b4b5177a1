#include "ncmimo/campaign.hpp"

#include "ncmimo/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <optional>
#include <thread>

namespace ncmimo {

void CampaignSpec::validate() const {
  if (snr_db.empty()) throw std::invalid_argument("campaign: SNR list must not be empty");
  if (trials < 1) throw std::invalid_argument("campaign: trials must be >= 1");
  for (double s : snr_db)
    if (std::isnan(s) || s == -std::numeric_limits<double>::infinity())
      throw std::invalid_argument("campaign: SNR values must be numbers or +inf");
  if (!(benchmark_scale > 0)) throw std::invalid_argument("campaign: benchmark scale must be positive");
  optimizer.validate();
}

const RmseRow& RmseTable::at(double snr_db, const std::string& parameter) const {
  for (const auto& row : rows)
    if (row.snr_db == snr_db && row.parameter == parameter) return row;
  throw std::out_of_range("rmse table: no row for " + parameter);
}

CrbResultd scenario_crb(const Scenario& scenario, double noise_variance) {
  return crb_psi(fim(scenario.geometry, scenario.truth, scenario.radar, scenario.reflection, noise_variance));
}

SearchBox benchmark_box(const Scenario& scenario, double noise_variance, double scale) {
  if (!(noise_variance > 0)) throw CampaignError("benchmark box needs a positive noise variance (finite SNR)");
  const CrbResultd crb = scenario_crb(scenario, noise_variance);
  return SearchBox::centered(scenario.truth.free_parameters(), scale * crb.psi_std);
}

SearchBox init_box(const Scenario& scenario, const Eigen::MatrixXd& ranges) {
  const auto layout = scenario.layout();
  const auto& widths = scenario.estimator.half_widths;
  if (static_cast<int>(widths.size()) != layout.order + 1)
    throw CampaignError("init-centered box needs estimator.half_widths with one entry per order");
  const Eigen::VectorXd range_std =
      Eigen::VectorXd::Constant(scenario.geometry.rx_count(), std::max(scenario.estimator.range_noise, 1e-3));
  const auto init =
      coarse_init(ranges, range_std, scenario.geometry, scenario.radar, layout.order, layout.planar);
  Eigen::VectorXd half(layout.free_count());
  for (int i = 0; i < layout.free_count(); ++i) half(i) = widths[i % (layout.order + 1)];
  return SearchBox::centered(init.free_parameters(), half);
}

Estimate run_trial(const Scenario& scenario, const CampaignSpec& spec, double noise_variance, std::uint64_t seed) {
  const SnapshotSet snaps = synthesize(scenario, noise_variance, seed);
  const ObjectiveContextd ctx(scenario.geometry, scenario.radar, snaps);
  const SearchBox box = spec.box == BoxPolicy::benchmark
                            ? benchmark_box(scenario, noise_variance, spec.benchmark_scale)
                            : init_box(scenario, simulate_ranges(scenario, scenario.estimator.range_noise, mix64(seed ^ 1)));
  OptimizerConfig cfg = spec.optimizer;
  cfg.seed = mix64(seed ^ 2);
  return estimate(ctx, scenario.layout(), box, cfg);
}

RmseTable run_campaign(const Scenario& scenario, const CampaignSpec& spec) {
  scenario.validate();
  spec.validate();
  const auto layout = scenario.layout();
  const int params = layout.free_count();
  const Eigen::VectorXd truth = scenario.truth.free_parameters();
  const unsigned workers = spec.threads > 0 ? spec.threads : std::max(1u, std::thread::hardware_concurrency());

  RmseTable table;
  for (std::size_t p = 0; p < spec.snr_db.size(); ++p) {
    const double snr = spec.snr_db[p];
    const bool noiseless = std::isinf(snr);
    const double sigma2 = noiseless ? 0.0 : noise_variance_for_snr(scenario.radar, scenario.reflection, snr);

    // Trials are independent; each writes only its own slot.
    std::vector<std::optional<Eigen::VectorXd>> errors(spec.trials);
    std::atomic<int> next{0};
    auto work = [&] {
      for (int t = next++; t < spec.trials; t = next++) {
        try {
          const Estimate est = run_trial(scenario, spec, sigma2, trial_seed(spec.base_seed, p, t));
          errors[t] = est.motion.free_parameters() - truth;
        } catch (const CampaignError&) {
          throw;
        } catch (const std::exception&) {
          errors[t].reset();
        }
      }
    };
    if (workers <= 1 || spec.trials == 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      std::exception_ptr failure;
      std::mutex failure_mutex;
      for (unsigned w = 0; w < std::min<unsigned>(workers, spec.trials); ++w) {
        pool.emplace_back([&] {
          try {
            work();
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = spec.trials;
          }
        });
      }
      pool.clear();
      if (failure) std::rethrow_exception(failure);
    }

    // Reduce in trial order so the result does not depend on scheduling.
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(params);
    double location_sq = 0.0;
    int used = 0;
    for (const auto& e : errors) {
      if (!e) continue;
      ++used;
      sq += e->cwiseAbs2();
      for (int a = 0; a < layout.axis_count(); ++a) location_sq += (*e)(a * (layout.order + 1)) * (*e)(a * (layout.order + 1));
    }
    const int excluded = spec.trials - used;
    if (used == 0 || excluded > spec.max_excluded_fraction * spec.trials)
      throw CampaignError("campaign: " + std::to_string(excluded) + " of " + std::to_string(spec.trials) +
                          " trials failed at SNR " + std::to_string(snr) + " dB");

    Eigen::VectorXd crb_std = Eigen::VectorXd::Zero(params);
    Eigen::MatrixXd crb_cov = Eigen::MatrixXd::Zero(params, params);
    if (!noiseless) {
      const auto crb = scenario_crb(scenario, sigma2);
      crb_std = crb.psi_std;
      crb_cov = crb.psi_covariance();
    }
    for (int i = 0; i < params; ++i)
      table.rows.push_back({snr, parameter_name(layout.order, i), parameter_unit(layout.order, i),
                            std::sqrt(sq(i) / used), crb_std(i), used, excluded});
    double location_var = 0.0;
    for (int a = 0; a < layout.axis_count(); ++a) location_var += crb_cov(a * (layout.order + 1), a * (layout.order + 1));
    table.rows.push_back({snr, "location", "m", std::sqrt(location_sq / used), std::sqrt(location_var), used, excluded});
  }
  return table;
}

}  // namespace ncmimo
