#include "ncmimo/campaign.hpp"
#include "ncmimo/crb.hpp"
#include "ncmimo/estimator.hpp"
#include "ncmimo/io.hpp"
#include "ncmimo/rng.hpp"
#include "ncmimo/scenario.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

using namespace ncmimo;

namespace {

struct Common {
  std::string scenario = "example1";
  std::uint64_t seed = 1;
  std::string out;
};

void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-")
    std::cout << text;
  else
    write_text(out, text);
}

// name:lower:upper:count, e.g. x_vel:90:110:41
GridAxis parse_axis(const std::string& spec, int order) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  for (std::size_t pos; (pos = spec.find(':', start)) != std::string::npos; start = pos + 1)
    parts.push_back(spec.substr(start, pos - start));
  parts.push_back(spec.substr(start));
  if (parts.size() != 4) throw ConfigError("axis '" + spec + "': expected name:lower:upper:count");
  GridAxis a;
  a.parameter = parameter_index(order, parts[0]);
  try {
    a.lower = std::stod(parts[1]);
    a.upper = std::stod(parts[2]);
    a.count = std::stoi(parts[3]);
  } catch (const std::exception&) {
    throw ConfigError("axis '" + spec + "': bad number");
  }
  if (a.count < 2 || !(a.upper > a.lower)) throw ConfigError("axis '" + spec + "': need count >= 2 and upper > lower");
  return a;
}

double sigma2_for(const Scenario& sc, double snr) {
  return std::isinf(snr) && snr > 0 ? 0.0 : noise_variance_for_snr(sc.radar, sc.reflection, snr);
}

BoxPolicy parse_box(const std::string& s) {
  if (s == "benchmark") return BoxPolicy::benchmark;
  if (s == "init") return BoxPolicy::init_centered;
  throw ConfigError("unknown box policy '" + s + "' (benchmark|init)");
}

nlohmann::ordered_json estimate_record(const Scenario& sc, const Estimate& est, const SnapshotSet& snaps) {
  const auto layout = sc.layout();
  nlohmann::ordered_json j;
  j["scenario"] = sc.name;
  j["seed"] = snaps.seed;
  j["noise_variance"] = snaps.noise_variance;
  nlohmann::ordered_json motion, truth;
  const Eigen::VectorXd psi = est.motion.free_parameters();
  const Eigen::VectorXd ref = sc.truth.free_parameters();
  for (int i = 0; i < layout.free_count(); ++i) {
    motion[parameter_name(layout.order, i)] = psi(i);
    truth[parameter_name(layout.order, i)] = ref(i);
  }
  j["estimate"] = motion;
  j["truth"] = truth;
  j["positive_ll"] = est.value.positive_ll;
  j["negative_ll"] = est.value.negative_ll;
  j["evaluations"] = est.diagnostics.evaluations;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motion estimation for non-coherent MIMO radar"};
  app.require_subcommand(1);

  Common c;
  double snr = 0.0;
  std::vector<double> snrs{-10, -5, 0, 5, 10};
  int trials = 100;
  std::string snapshots, box = "benchmark", axis1, axis2;
  int islands = 0, population = 0, generations = 0;
  unsigned threads = 0;

  auto add_common = [&](CLI::App* sub, bool seed) {
    sub->add_option("--scenario", c.scenario, "preset name or YAML file");
    if (seed) sub->add_option("--seed", c.seed, "base seed");
    sub->add_option("--out", c.out, "output file (default stdout)");
  };
  auto add_optimizer = [&](CLI::App* sub) {
    sub->add_option("--islands", islands, "independent GA runs");
    sub->add_option("--population", population, "GA population");
    sub->add_option("--generations", generations, "GA generations");
  };

  auto* simulate = app.add_subcommand("simulate", "synthesize snapshots to a binary file");
  add_common(simulate, true);
  simulate->add_option("--snr", snr, "SNR in dB (inf for noiseless)");
  simulate->get_option("--out")->required();

  auto* est = app.add_subcommand("estimate", "estimate motion from a snapshot file");
  add_common(est, true);
  add_optimizer(est);
  est->add_option("--snapshots", snapshots, "snapshot file from simulate")->required();
  est->add_option("--box", box, "benchmark|init");

  auto* crb = app.add_subcommand("crb", "CRB standard deviations as CSV");
  add_common(crb, false);
  crb->add_option("--snr", snr, "SNR in dB");

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo RMSE versus SNR");
  add_common(sweep, true);
  add_optimizer(sweep);
  sweep->add_option("--snr", snrs, "SNR list in dB")->delimiter(',');
  sweep->add_option("--trials", trials, "trials per SNR point");
  sweep->add_option("--box", box, "benchmark|init");
  sweep->add_option("--threads", threads, "worker threads (0 = all cores)");

  auto* contour = app.add_subcommand("contour", "positive log-likelihood over a 2D grid");
  add_common(contour, true);
  contour->add_option("--snr", snr, "SNR in dB (inf for noiseless)");
  contour->add_option("--axis1", axis1, "name:lower:upper:count")->required();
  contour->add_option("--axis2", axis2, "name:lower:upper:count")->required();

  auto* doppler = app.add_subcommand("check-doppler", "largest Doppler drift inside one CIT");
  add_common(doppler, false);

  CLI11_PARSE(app, argc, argv);

  try {
    const Scenario sc = load_scenario(c.scenario);
    const auto layout = sc.layout();
    OptimizerConfig opt = sc.estimator.optimizer;
    if (islands > 0) opt.islands = islands;
    if (population > 0) opt.population = population;
    if (generations > 0) opt.generations = generations;

    if (*simulate) {
      write_snapshots(c.out, synthesize(sc, sigma2_for(sc, snr), c.seed));
    } else if (*est) {
      const SnapshotSet snaps = read_snapshots(snapshots);
      if (snaps.tx_count != sc.geometry.tx_count() || snaps.rx_count != sc.geometry.rx_count() ||
          snaps.snapshot_count() != sc.radar.snapshot_count)
        throw ConfigError("snapshot file does not match scenario '" + sc.name + "'");
      const ObjectiveContextd ctx(sc.geometry, sc.radar, snaps);
      const SearchBox sb = parse_box(box) == BoxPolicy::benchmark
                               ? benchmark_box(sc, snaps.noise_variance, 10.0)
                               : init_box(sc, simulate_ranges(sc, sc.estimator.range_noise, mix64(c.seed ^ 1)));
      opt.seed = mix64(c.seed ^ 2);
      const Estimate e = estimate(ctx, layout, sb, opt);
      emit(c.out, estimate_record(sc, e, snaps).dump(2) + "\n");
    } else if (*crb) {
      emit(c.out, format_crb_csv(scenario_crb(sc, sigma2_for(sc, snr))));
    } else if (*sweep) {
      CampaignSpec spec;
      spec.snr_db = snrs;
      spec.trials = trials;
      spec.optimizer = opt;
      spec.box = parse_box(box);
      spec.base_seed = c.seed;
      spec.threads = threads;
      emit(c.out, format_rmse_csv(run_campaign(sc, spec)));
    } else if (*contour) {
      const SnapshotSet snaps = synthesize(sc, sigma2_for(sc, snr), c.seed);
      const ObjectiveContextd ctx(sc.geometry, sc.radar, snaps);
      const ContourGrid grid = objective_grid(ctx, sc.truth, parse_axis(axis1, layout.order), parse_axis(axis2, layout.order));
      emit(c.out, format_contour(grid, layout.order));
    } else if (*doppler) {
      emit(c.out, format_number(check_doppler_cit(sc)) + "\n");
    }
  } catch (const std::exception& e) {
    std::cerr << "ncmimo: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
