#pragma once

#include "ncmimo/crb.hpp"
#include "ncmimo/estimator.hpp"
#include "ncmimo/scenario.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace ncmimo {

enum class BoxPolicy {
  /// +-scale * sqrt(CRB) around the truth, for benchmarking against the bound.
  benchmark,
  /// Around the coarse range-based initial estimate, widths from the scenario.
  init_centered,
};

struct CampaignSpec {
  /// SNR points in dB; +inf runs noiseless trials.
  std::vector<double> snr_db;
  int trials = 100;
  OptimizerConfig optimizer;
  BoxPolicy box = BoxPolicy::benchmark;
  double benchmark_scale = 10.0;
  std::uint64_t base_seed = 1;
  /// Fraction of failed trials above which the campaign fails.
  double max_excluded_fraction = 0.05;
  /// Worker threads; 0 uses the hardware concurrency.
  unsigned threads = 0;

  void validate() const;
};

struct RmseRow {
  double snr_db = 0.0;
  std::string parameter;
  std::string unit;
  double rmse = 0.0;
  double crb_std = 0.0;
  int trials = 0;
  int excluded = 0;
};

struct RmseTable {
  std::vector<RmseRow> rows;

  /// Row for (snr, parameter); throws std::out_of_range when absent.
  const RmseRow& at(double snr_db, const std::string& parameter) const;
};

class CampaignError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CRB of the scenario's free motion parameters at noise variance `noise_variance`.
CrbResultd scenario_crb(const Scenario& scenario, double noise_variance);

SearchBox benchmark_box(const Scenario& scenario, double noise_variance, double scale);

/// Box around coarse_init applied to `ranges` (N x K), half-widths from the scenario.
SearchBox init_box(const Scenario& scenario, const Eigen::MatrixXd& ranges);

/// One synthesize + estimate run; the seed fixes noise, ranges and optimizer.
Estimate run_trial(const Scenario& scenario, const CampaignSpec& spec, double noise_variance, std::uint64_t seed);

RmseTable run_campaign(const Scenario& scenario, const CampaignSpec& spec);

}  // namespace ncmimo
